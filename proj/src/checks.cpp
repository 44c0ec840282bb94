#include "mfvar/params.hpp"
#include "mfvar/realization.hpp"
#include "mfvar/rng.hpp"
#include "mfvar/statespace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace mfvar {

namespace {

using std::complex;

constexpr double kPi = 3.14159265358979323846;

struct EigSplit {
  std::vector<complex<double>> unit, stable, other;
};

EigSplit split_eigs(const VectorXcd& ev, const Tolerances& tol) {
  EigSplit s;
  for (int i = 0; i < ev.size(); ++i) {
    complex<double> l = ev(i);
    if (std::abs(l - 1.0) < tol.unit)
      s.unit.push_back(l);
    else if (std::abs(l) < 1.0 - tol.stab)
      s.stable.push_back(l);
    else
      s.other.push_back(l);
  }
  return s;
}

// sum of the first N powers 1 + l + ... + l^N evaluated stably
complex<double> power_sum(complex<double> l, int N) {
  complex<double> s = 1.0, pw = 1.0;
  for (int k = 1; k <= N; ++k) {
    pw *= l;
    s += pw;
  }
  return s;
}

// Fast-row window functional: S1 x_{t+1} = d_N y^f_t, the N-step difference
// of the fast coordinates, as a matrix on the differenced state.
MatrixXd fast_window(const ModelDims& d) {
  MatrixXd S = MatrixXd::Zero(d.n_f, d.m());
  for (int k = 1; k <= d.N; ++k)
    for (int f = 0; f < d.n_f; ++f) S(f, d.r + (k - 1) * d.n + f) = 1.0;
  return S;
}

}  // namespace

AssumptionReport check_c(const VecmParams& theta, const Tolerances& tol) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  const int n = theta.dims.n, r = theta.dims.r;
  AssumptionReport rep;

  // C1: pi = alpha beta' has rank exactly r
  {
    CheckItem it;
    it.name = "C1";
    if (r == 0) {
      it.margin = 1.0;
      it.pass = true;
      it.note = "rank 0 by construction";
    } else {
      Eigen::JacobiSVD<MatrixXd> svd(theta.pi());
      const VectorXd sv = svd.singularValues();
      double s1 = sv(0);
      it.margin = s1 > 0 ? sv(r - 1) / s1 : 0.0;
      bool excess = (r < n) && s1 > 0 && sv(r) > tol.rank * s1;
      it.pass = it.margin > tol.rank && !excess;
      if (excess) it.note = "singular values beyond r not negligible";
    }
    rep.items.push_back(it);
  }

  MatrixXd phisum = MatrixXd::Zero(n, n);
  for (const auto& f : theta.phi) phisum += f;

  // C2: alpha_perp' (I - sum phi) beta_perp invertible
  {
    CheckItem it;
    it.name = "C2";
    try {
      MatrixXd ap = orth_complement(theta.alpha, ComplementKind::Alpha);
      MatrixXd bp = orth_complement(theta.beta, ComplementKind::Beta);
      MatrixXd mid = ap.transpose() *
                     (MatrixXd::Identity(n, n) - phisum) * bp;
      it.margin = std::abs(mid.determinant());
      it.pass = it.margin > tol.rank;
    } catch (const Error& e) {
      it.pass = false;
      it.margin = 0.0;
      it.note = e.what();
    }
    rep.items.push_back(it);
  }

  // C3: exactly n-r unit roots, everything else strictly inside the circle
  {
    CheckItem it;
    it.name = "C3";
    CompanionForm cf = companion(vecm_to_var(theta));
    EigSplit es = split_eigs(cf.A.eigenvalues(), tol);
    double margin = 1.0;
    for (const auto& l : es.stable) margin = std::min(margin, 1.0 - std::abs(l));
    for (const auto& l : es.other) margin = std::min(margin, 1.0 - std::abs(l));
    it.margin = std::max(margin, 0.0);
    it.pass = ((int)es.unit.size() == n - r) && es.other.empty() &&
              it.margin > tol.stab;
    it.note = "units=" + std::to_string(es.unit.size()) +
              " expected=" + std::to_string(n - r);
    rep.items.push_back(it);
  }

  // C4: innovation covariance positive definite
  {
    CheckItem it;
    it.name = "C4";
    Eigen::SelfAdjointEigenSolver<MatrixXd> se(
        0.5 * (theta.sigma + theta.sigma.transpose()));
    double lmin = se.eigenvalues().minCoeff();
    double lmax = se.eigenvalues().maxCoeff();
    it.margin = std::max(lmin, 0.0);
    it.pass = lmin > tol.rank * std::max(1.0, lmax);
    rep.items.push_back(it);
  }

  return rep;
}

AssumptionReport check_i(const VecmParams& theta, const Tolerances& tol) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  const int n = theta.dims.n, r = theta.dims.r, p = theta.dims.p;
  const int N = theta.dims.N;
  AssumptionReport rep;

  VarParams var = vecm_to_var(theta);
  CompanionForm cf = companion(var);
  Eigen::ComplexEigenSolver<MatrixXd> ces(cf.A);
  VectorXcd lam = ces.eigenvalues();
  EigSplit es = split_eigs(lam, tol);

  // I1: last coefficient matrix of the level VAR has full rank
  {
    CheckItem it;
    it.name = "I1";
    Eigen::JacobiSVD<MatrixXd> svd(var.a[p - 1]);
    const VectorXd sv = svd.singularValues();
    it.margin = sv.minCoeff();
    it.pass = it.margin > tol.rank * std::max(1.0, sv.maxCoeff());
    rep.items.push_back(it);
  }

  // I2: state covariance of the stationary differenced system is positive
  // definite (stands in for the covariance condition on the level state,
  // which has no stationary solution under unit roots)
  {
    CheckItem it;
    it.name = "I2";
    it.note = "evaluated on the differenced-state covariance";
    try {
      DiffStateSpace ss = diff_state_space(theta, tol);
      MatrixXd G = solve_lyapunov(
          ss.A, ss.B * theta.sigma * ss.B.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> se(G);
      double lmin = se.eigenvalues().minCoeff();
      it.margin = std::max(lmin, 0.0);
      it.pass = lmin > tol.rank * std::max(1.0, se.eigenvalues().maxCoeff());
    } catch (const Error& e) {
      it.pass = false;
      it.note = e.what();
    }
    rep.items.push_back(it);
  }

  // I3: exactly n-r units, stable eigenvalues pairwise distinct
  {
    CheckItem it;
    it.name = "I3";
    double gap = 1.0;
    for (size_t i = 0; i < es.stable.size(); ++i)
      for (size_t j = i + 1; j < es.stable.size(); ++j)
        gap = std::min(gap, std::abs(es.stable[i] - es.stable[j]));
    it.margin = gap;
    it.pass = ((int)es.unit.size() == n - r) && es.other.empty() &&
              gap > tol.rank;
    if ((int)es.unit.size() != n - r || !es.other.empty()) {
      it.margin = 0.0;
      it.note = "eigenvalue counts off: units=" +
                std::to_string(es.unit.size()) +
                " borderline=" + std::to_string(es.other.size());
    }
    rep.items.push_back(it);
  }

  // I4: distinct eigenvalues keep distinct N-th powers
  {
    CheckItem it;
    it.name = "I4";
    double gap = 1.0;
    for (int i = 0; i < lam.size(); ++i)
      for (int j = i + 1; j < lam.size(); ++j) {
        if (std::abs(lam(i) - lam(j)) <= tol.rank) continue;
        gap = std::min(gap,
                       std::abs(std::pow(lam(i), N) - std::pow(lam(j), N)));
      }
    it.margin = gap;
    it.pass = gap > tol.rank;
    rep.items.push_back(it);
  }

  // I5: no stable eigenvalue is annihilated by both the N-window power sum
  // and the cointegration directions
  {
    CheckItem it;
    it.name = "I5";
    double worst = 1.0;
    for (int i = 0; i < lam.size(); ++i) {
      complex<double> l = lam(i);
      if (std::abs(l - 1.0) < tol.unit) continue;
      if (std::abs(l) >= 1.0 - tol.stab) continue;
      double v1 = std::abs(power_sum(l, N));
      double v2 = 0.0;
      if (r > 0) {
        VectorXcd v = ces.eigenvectors().col(i);
        VectorXcd vtop = v.head(n);
        double tn = vtop.norm();
        if (tn > 1e-12) v2 = (theta.beta.transpose() * vtop).norm() / tn;
      }
      worst = std::min(worst, std::max(v1, v2));
    }
    it.margin = worst;
    it.pass = worst > tol.rank;
    rep.items.push_back(it);
  }

  // I6: the fast window row is PBH-observable for the differenced system
  {
    CheckItem it;
    it.name = "I6";
    if (p - 1 < N) {
      it.pass = false;
      it.note = "lag order too small to hold the N-window";
    } else {
      try {
        DiffStateSpace ss = diff_state_space(theta, tol);
        MatrixXd S1 = fast_window(theta.dims);
        Eigen::ComplexEigenSolver<MatrixXd> aes(ss.A);
        const int m = theta.dims.m();
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
          MatrixXcd P(m + theta.dims.n_f, m);
          P.topRows(m) =
              ss.A.cast<complex<double>>() -
              aes.eigenvalues()(i) * MatrixXcd::Identity(m, m);
          P.bottomRows(theta.dims.n_f) = S1.cast<complex<double>>();
          Eigen::JacobiSVD<MatrixXcd> svd(P);
          worst = std::min(worst, (double)svd.singularValues().minCoeff());
        }
        it.margin = worst;
        it.pass = worst > tol.rank;
      } catch (const Error& e) {
        it.pass = false;
        it.note = e.what();
      }
    }
    rep.items.push_back(it);
  }

  return rep;
}

namespace {

// Conjugate the np x np matrix M back to companion form through the rows
// T_j = T_{j-1} M^{-1}. Fails (returns false) when M or the stacked T is too
// ill conditioned to trust; callers resample in that case.
bool companion_restore(const MatrixXd& M, int n, int p,
                       std::vector<MatrixXd>* a_out, double* resid_out) {
  const int np = n * p;
  Eigen::PartialPivLU<MatrixXd> mlu(M);
  if (mlu.rcond() < 1e-13) return false;
  MatrixXd Minv = mlu.inverse();

  MatrixXd T(np, np);
  MatrixXd row = MatrixXd::Zero(n, np);
  row.leftCols(n) = MatrixXd::Identity(n, n);
  T.topRows(n) = row;
  for (int j = 1; j < p; ++j) {
    row = row * Minv;
    T.middleRows(n * j, n) = row;
  }
  Eigen::PartialPivLU<MatrixXd> tlu(T);
  if (tlu.rcond() < 1e-12) return false;

  MatrixXd comp = T * M * tlu.inverse();
  // everything below the top block row must be the shifted identity
  double resid = 0.0;
  if (p > 1) {
    MatrixXd lower = comp.bottomRows(np - n);
    MatrixXd expect = MatrixXd::Zero(np - n, np);
    expect.leftCols(np - n) = MatrixXd::Identity(np - n, np - n);
    resid = max_abs(lower - expect);
  }
  if (resid_out) *resid_out = resid;
  a_out->resize(p);
  for (int j = 0; j < p; ++j) (*a_out)[j] = comp.block(0, n * j, n, n);
  return true;
}

double theta_dist(const VecmParams& a, const VecmParams& b) {
  double d = max_abs(a.alpha - b.alpha);
  d = std::max(d, max_abs(a.beta - b.beta));
  for (size_t j = 0; j < a.phi.size(); ++j)
    d = std::max(d, max_abs(a.phi[j] - b.phi[j]));
  d = std::max(d, max_abs(a.sigma - b.sigma));
  return d;
}

}  // namespace

VecmParams perturb_to_generic(const VecmParams& theta0,
                              const PerturbConfig& cfg) {
  theta0.dims.validate_basic();
  theta0.validate_shapes();
  const Tolerances tol;
  const int n = theta0.dims.n, p = theta0.dims.p, r = theta0.dims.r;
  const int np = n * p;

  CompanionForm cf = companion(vecm_to_var(theta0));
  Eigen::ComplexEigenSolver<MatrixXd> ces(cf.A);
  if (ces.info() != Eigen::Success)
    throw Error(ErrorCode::NonDiagonalizable, "eigensolver did not converge");
  MatrixXcd Q = ces.eigenvectors();
  VectorXcd lam = ces.eigenvalues();
  Eigen::PartialPivLU<MatrixXcd> qlu(Q);
  bool degenerate_basis = qlu.rcond() < 1e-12;
  MatrixXcd Qinv = qlu.inverse();
  double recon =
      (Q * lam.asDiagonal() * Qinv - cf.A).cwiseAbs().maxCoeff();
  if (recon > 1e-6 * (1.0 + max_abs(cf.A))) degenerate_basis = true;

  // units stay fixed; everything else gets resampled shifts, with conjugate
  // pairs sharing one real shift so the matrix stays real
  std::vector<int> partner(np, -1);
  std::vector<bool> is_unit(np, false), visited(np, false);
  for (int i = 0; i < np; ++i)
    is_unit[i] = std::abs(lam(i) - 1.0) < tol.unit;
  for (int i = 0; i < np; ++i) {
    if (visited[i] || is_unit[i]) continue;
    if (std::abs(lam(i).imag()) < 1e-12) {
      visited[i] = true;
      continue;
    }
    int best = -1;
    double bd = 1e300;
    for (int j = 0; j < np; ++j) {
      if (j == i || visited[j] || is_unit[j]) continue;
      double d = std::abs(lam(j) - std::conj(lam(i)));
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    visited[i] = true;
    if (best >= 0 && bd < 1e-6 * (1.0 + std::abs(lam(i)))) {
      partner[i] = best;
      partner[best] = i;
      visited[best] = true;
    }
  }

  Rng rng(cfg.seed);
  const double delta = cfg.eps / 10.0;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    VectorXcd lam2 = lam;
    std::vector<bool> done(np, false);
    for (int i = 0; i < np; ++i) {
      if (done[i] || is_unit[i]) continue;
      double xi = rng.uniform(-delta, delta);
      lam2(i) += xi;
      done[i] = true;
      if (partner[i] >= 0) {
        lam2(partner[i]) += xi;
        done[partner[i]] = true;
      }
    }

    MatrixXcd M2c = Q * lam2.asDiagonal() * Qinv;
    // Conjugate pairs share a shift, so their contribution is real. Repeated
    // real eigenvalues may carry a complex eigenspace basis whose projector
    // slices are individually complex; the imaginary parts cancel only in
    // the sum. Dropping them is exact on every untouched eigendirection
    // (biorthogonality), in particular on the unit roots, and the candidate
    // is re-validated below in any case. Material imaginary mass beyond
    // that signals a degenerate basis, so such draws are discarded.
    if (M2c.imag().cwiseAbs().maxCoeff() >
        1e-6 * (1.0 + M2c.real().cwiseAbs().maxCoeff()))
      continue;
    MatrixXd M2 = M2c.real();

    std::vector<MatrixXd> a2;
    double resid = 0.0;
    if (!companion_restore(M2, n, p, &a2, &resid)) continue;
    if (resid > 1e-8 * (1.0 + max_abs(M2))) continue;

    VarParams var2;
    var2.dims = theta0.dims;
    var2.a = a2;
    var2.sigma = theta0.sigma;
    VecmParams th2;
    try {
      th2 = var_to_vecm(var2, r);
    } catch (const Error&) {
      continue;
    }
    th2.mu0 = theta0.mu0;
    th2.mu1 = theta0.mu1;

    if (theta_dist(th2, theta0) > cfg.eps) continue;
    if (!check_c(th2, tol).all_pass()) continue;
    if (!check_i(th2, tol).all_pass()) continue;
    return th2;
  }

  if (degenerate_basis)
    throw Error(ErrorCode::NonDiagonalizable,
                "companion matrix has no usable eigenbasis");
  throw Error(ErrorCode::BudgetExhausted,
              "no acceptable perturbation in " +
                  std::to_string(cfg.max_attempts) + " attempts");
}

VecmParams random_system(const ModelDims& dims, std::uint64_t seed,
                         double band_lo, double band_hi) {
  dims.validate_basic();
  const int n = dims.n, r = dims.r, p = dims.p, N = dims.N;
  const int np = n * p;
  const int nunit = n - r;
  const int nst = np - nunit;
  const Tolerances tol;
  const double gap = 0.02;

  for (int attempt = 0; attempt < 400; ++attempt) {
    Rng rng(Rng::mix(seed, attempt));

    // eigenvalue set: leads of complex pairs plus reals, with pairwise
    // separation in both the values and their N-th powers
    std::vector<std::complex<double>> full;
    bool ok = false;
    for (int tries = 0; tries < 200 && !ok; ++tries) {
      full.clear();
      int npair = 0;
      if (nst >= 2) {
        npair = (int)(rng.uniform() * (nst / 2 + 1));
        npair = std::min(npair, nst / 2);
      }
      int nreal = nst - 2 * npair;
      for (int i = 0; i < npair; ++i) {
        double rho = rng.uniform(band_lo, band_hi);
        double ph = rng.uniform(0.25, kPi - 0.25);
        full.push_back(std::polar(rho, ph));
        full.push_back(std::polar(rho, -ph));
      }
      for (int i = 0; i < nreal; ++i) {
        double rho = rng.uniform(band_lo, band_hi);
        full.push_back({rng.uniform() < 0.5 ? -rho : rho, 0.0});
      }
      ok = true;
      for (size_t i = 0; i < full.size() && ok; ++i)
        for (size_t j = i + 1; j < full.size() && ok; ++j) {
          if (std::abs(full[i] - full[j]) < gap) ok = false;
          if (std::abs(std::pow(full[i], N) - std::pow(full[j], N)) < gap)
            ok = false;
        }
    }
    if (!ok) continue;

    MatrixXd D = MatrixXd::Zero(np, np);
    D.topLeftCorner(nunit, nunit) = MatrixXd::Identity(nunit, nunit);
    int idx = nunit;
    for (size_t i = 0; i < full.size(); ++i) {
      if (full[i].imag() > 0) {
        double a = full[i].real(), b = full[i].imag();
        D(idx, idx) = a;
        D(idx, idx + 1) = b;
        D(idx + 1, idx) = -b;
        D(idx + 1, idx + 1) = a;
        idx += 2;
      } else if (full[i].imag() == 0.0) {
        D(idx, idx) = full[i].real();
        idx += 1;
      }
    }

    MatrixXd Z(np, np);
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j) Z(i, j) = rng.uniform(-1.0, 1.0);
    Eigen::JacobiSVD<MatrixXd> zsvd(Z);
    double zcond =
        zsvd.singularValues()(0) / zsvd.singularValues()(np - 1);
    if (!(zcond < 1e3)) continue;

    MatrixXd M = Z * D * Z.partialPivLu().inverse();

    std::vector<MatrixXd> a;
    double resid = 0.0;
    if (!companion_restore(M, n, p, &a, &resid)) continue;
    if (resid > 1e-8 * (1.0 + max_abs(M))) continue;

    MatrixXd L(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) L(i, j) = rng.uniform(-1.0, 1.0);
    MatrixXd sigma =
        L * L.transpose() + 0.1 * MatrixXd::Identity(n, n);

    VarParams var;
    var.dims = dims;
    var.a = a;
    var.sigma = sigma;
    VecmParams th;
    try {
      th = var_to_vecm(var, r);
    } catch (const Error&) {
      continue;
    }
    if (!check_c(th, tol).all_pass()) continue;
    if (!check_i(th, tol).all_pass()) continue;

    // The eigenvalue band keeps the point well inside the stability region,
    // but a small fraction of draws still produce blocked second moments
    // whose rank-m structure is drowned in double-precision rounding (the
    // Hankel tail sits orders of magnitude above machine noise, or the
    // retained part is nearly rank deficient). Such data cannot support an
    // accurate realization no matter the algorithm, so resample instead of
    // handing the caller a numerically hopeless system.
    if (p >= 2 * N) {
      try {
        AutocovSequence seq = blocked_autocov(th, -1, tol);
        HankelRealization hr = hankel_realization(seq, dims.m());
        const int m = dims.m();
        double tail = hr.svals.size() > m ? hr.svals(m) / hr.svals(0) : 0.0;
        double cond = hr.svals(0) / hr.svals(m - 1);
        if (tail > 1e-13 || cond > 1e7) continue;
      } catch (const Error&) {
        continue;
      }
    }
    return th;
  }
  throw Error(ErrorCode::BudgetExhausted,
              "could not draw an identifiable system");
}

}  // namespace mfvar
