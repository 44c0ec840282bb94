#include "mfvar/realization.hpp"

#include "mfvar/statespace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mfvar {

namespace {

double spectral_radius(const MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// The blocked observation repeats the cointegrating rows one window apart
// (the level rows minus beta' times the difference rows reproduce the level
// rows of the previous block), so the true innovation covariance is singular
// with rank ntilde - r. All solves against it go through the eigenvalue
// pseudoinverse; only genuinely indefinite matrices are rejected.
void check_psd(const MatrixXd& S, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> se(S);
  double lmax = se.eigenvalues().cwiseAbs().maxCoeff();
  if (se.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, lmax))
    throw Error(ErrorCode::NonPDInnovation, what);
}

// minimum-norm solution of S X = B for symmetric PSD S
MatrixXd psd_solve(const MatrixXd& S, const MatrixXd& B) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> se(S);
  VectorXd ev = se.eigenvalues();
  double lmax = ev.cwiseAbs().maxCoeff();
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-12 * std::max(1.0, lmax)) inv(i) = 1.0 / ev(i);
  const MatrixXd& U = se.eigenvectors();
  return U * (inv.asDiagonal() * (U.transpose() * B));
}

// With a singular innovation covariance the closed loop A - K*C keeps one
// eigenvalue per degenerate direction exactly on the unit circle, and that
// mode is invariant under every gain consistent with the data (the zero of
// the transfer function sits on the circle). So the check is against the
// closed disk, with headroom for eigenvalue roundoff.
void check_miniphase(const InnovationsForm& f) {
  if (spectral_radius(f.A - f.K * f.C) > 1.0 + 1e-5)
    throw Error(ErrorCode::Unstable, "predictor closed loop is not stable");
}

}  // namespace

InnovationsForm cpf(const BlockedSystem& bs) {
  const MatrixXd& A = bs.A_bc;
  const MatrixXd& C = bs.C_bc;
  const Eigen::Index m = A.rows();

  const MatrixXd Q = bs.B_bc * bs.Sigma_b * bs.B_bc.transpose();
  const MatrixXd R = bs.D_b * bs.Sigma_b * bs.D_b.transpose();
  const MatrixXd S = bs.B_bc * bs.Sigma_b * bs.D_b.transpose();

  MatrixXd P = MatrixXd::Zero(m, m);
  const int max_iter = 20000;
  bool settled = false;
  for (int it = 0; it < max_iter; ++it) {
    MatrixXd APC = A * P * C.transpose() + S;
    MatrixXd Sig = C * P * C.transpose() + R;
    MatrixXd Kt = psd_solve(0.5 * (Sig + Sig.transpose()), APC.transpose());
    MatrixXd Pn = A * P * A.transpose() + Q - APC * Kt;
    Pn = 0.5 * (Pn + Pn.transpose()).eval();
    double step = max_abs(Pn - P);
    P = Pn;
    if (max_abs(P) > 1e12)
      throw Error(ErrorCode::RiccatiDivergence, "riccati iteration diverged");
    if (step <= 1e-14 * (1.0 + max_abs(P))) {
      settled = true;
      break;
    }
  }
  if (!settled)
    throw Error(ErrorCode::RiccatiDivergence,
                "riccati iteration did not settle");

  InnovationsForm f;
  f.A = A;
  f.C = C;
  MatrixXd Sig = C * P * C.transpose() + R;
  f.Sigma = 0.5 * (Sig + Sig.transpose());
  check_psd(f.Sigma, "innovation covariance is indefinite");
  MatrixXd APC = A * P * C.transpose() + S;
  f.K = psd_solve(f.Sigma, APC.transpose()).transpose();
  check_miniphase(f);
  return f;
}

std::vector<MatrixXd> innovation_autocov(const InnovationsForm& f, int H) {
  if (H < 0) throw Error(ErrorCode::InvalidArgument, "negative lag window");
  MatrixXd Pi = solve_lyapunov(f.A, f.K * f.Sigma * f.K.transpose());
  std::vector<MatrixXd> g(H + 1);
  MatrixXd g0 = f.C * Pi * f.C.transpose() + f.Sigma;
  g[0] = 0.5 * (g0 + g0.transpose());
  MatrixXd M = f.A * Pi * f.C.transpose() + f.K * f.Sigma;
  for (int h = 1; h <= H; ++h) {
    g[h] = f.C * M;
    M = (f.A * M).eval();
  }
  return g;
}

HankelRealization hankel_realization(const AutocovSequence& seq, int m_hint,
                                     double tol_rank) {
  const int H = seq.H;
  if (H < 2 || (int)seq.g.size() != H + 1)
    throw Error(ErrorCode::InvalidArgument,
                "need at least two stored block lags");
  const int nt = (int)seq.g[0].rows();
  const int K = (H + 1) / 2;
  const int L = H - K;

  MatrixXd Hk(K * nt, L * nt);
  MatrixXd Hup(K * nt, L * nt);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < L; ++j) {
      Hk.block(i * nt, j * nt, nt, nt) = seq.at(i + j + 1);
      Hup.block(i * nt, j * nt, nt, nt) = seq.at(i + j + 2);
    }

  Eigen::JacobiSVD<MatrixXd> svd(Hk,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  VectorXd sv = svd.singularValues();

  HankelRealization hr;
  hr.gamma0 = seq.g[0];
  hr.svals = sv;

  int rank = 0;
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  if (top > 0.0)
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) >= tol_rank * top) ++rank;
  int mh = rank;
  if (m_hint >= 0) {
    if (m_hint > rank)
      throw Error(ErrorCode::RankDeficient,
                  "Hankel numerical rank " + std::to_string(rank) +
                      " is below the requested order " +
                      std::to_string(m_hint));
    mh = m_hint;
  }
  hr.m_hat = mh;
  if (mh == 0) {
    hr.Abar = MatrixXd::Zero(0, 0);
    hr.Cbar = MatrixXd::Zero(nt, 0);
    hr.Gbar = MatrixXd::Zero(0, nt);
    return hr;
  }

  MatrixXd U = svd.matrixU().leftCols(mh);
  MatrixXd V = svd.matrixV().leftCols(mh);
  VectorXd shalf = sv.head(mh).cwiseSqrt();
  MatrixXd Obs = U * shalf.asDiagonal();
  MatrixXd Ctr = shalf.asDiagonal() * V.transpose();
  hr.Abar = shalf.cwiseInverse().asDiagonal() * (U.transpose() * Hup * V) *
            shalf.cwiseInverse().asDiagonal();
  hr.Cbar = Obs.topRows(nt);
  hr.Gbar = Ctr.leftCols(nt);
  hr.shift_residual =
      (Hup - Obs * hr.Abar * Ctr).norm() / std::max(Hup.norm(), 1e-300);
  return hr;
}

InnovationsForm innovation_from_hankel(const HankelRealization& hr) {
  const MatrixXd& A = hr.Abar;
  const MatrixXd& C = hr.Cbar;
  const MatrixXd& G = hr.Gbar;
  const Eigen::Index m = A.rows();
  const Eigen::Index nt = C.rows();

  InnovationsForm f;
  f.A = A;
  f.C = C;
  if (m == 0) {
    f.Sigma = 0.5 * (hr.gamma0 + hr.gamma0.transpose());
    check_psd(f.Sigma, "lag zero covariance is indefinite");
    f.K = MatrixXd::Zero(0, nt);
    return f;
  }

  MatrixXd g0 = 0.5 * (hr.gamma0 + hr.gamma0.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> sg(g0);
  if (sg.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorCode::NonPDInnovation,
                "lag zero covariance must be positive definite");

  // The state covariance solves the positive-real Riccati equation
  //   Pi = A Pi A' + (G - A Pi C')(g0 - C Pi C')^{-1}(G - A Pi C')'.
  // A plain fixed-point sweep stalls: the exactly predictable output
  // combinations put a closed-loop mode on the unit circle and the sweep
  // then converges only harmonically. The doubling iteration below squares
  // the prediction horizon per step, so the marginal mode costs one bit of
  // accuracy per iteration instead.
  Eigen::LDLT<MatrixXd> g0f(g0);
  MatrixXd As = (A - G * g0f.solve(C)).transpose();
  MatrixXd Gs = -C.transpose() * g0f.solve(C);
  MatrixXd Hs = G * g0f.solve(G.transpose());
  Gs = 0.5 * (Gs + Gs.transpose()).eval();
  Hs = 0.5 * (Hs + Hs.transpose()).eval();
  // With unit-circle zeros the doubling pencil I + G H is singular in the
  // limit, so the iterates stall near sqrt(machine eps) instead of reaching
  // full precision. The stall lives entirely in the degenerate direction
  // that C annihilates: g0 - C Pi C' and the fixed-point residual still come
  // out at the 1e-12 level, which is why the best iterate is kept rather
  // than insisting on a tiny last step.
  const MatrixXd Im = MatrixXd::Identity(m, m);
  MatrixXd Pi = Hs;
  double best_step = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(Im + Gs * Hs);
    MatrixXd An = As * lu.solve(As);
    MatrixXd Gn = Gs + As * lu.solve(Gs * As.transpose());
    MatrixXd Hn = Hs + As.transpose() * Hs * lu.solve(As);
    Gn = 0.5 * (Gn + Gn.transpose()).eval();
    Hn = 0.5 * (Hn + Hn.transpose()).eval();
    double step = max_abs(Hn - Hs);
    As = An;
    Gs = Gn;
    Hs = Hn;
    if (max_abs(Hs) > 1e12)
      throw Error(ErrorCode::RiccatiDivergence,
                  "covariance iteration diverged");
    if (step < best_step) {
      best_step = step;
      Pi = Hs;
    }
    if (step <= 1e-15 * (1.0 + max_abs(Hs))) break;
  }
  MatrixXd Sig = g0 - C * Pi * C.transpose();
  f.Sigma = 0.5 * (Sig + Sig.transpose());
  check_psd(f.Sigma, "innovation covariance is indefinite");
  f.K = psd_solve(f.Sigma, (G - A * Pi * C.transpose()).transpose())
            .transpose();
  // The step size stalls near sqrt(machine eps) in the critical direction
  // even when the iterate itself is fine, so settling is judged by the
  // fixed-point residual of the kept iterate instead of the step.
  MatrixXd resid =
      Pi - A * Pi * A.transpose() - f.K * f.Sigma * f.K.transpose();
  if (max_abs(resid) > 1e-5 * (1.0 + max_abs(Pi)))
    throw Error(ErrorCode::RiccatiDivergence,
                "covariance iteration did not settle");
  check_miniphase(f);
  return f;
}

}  // namespace mfvar
