#include "mfvar/deterministic.hpp"

#include <Eigen/LU>

#include <string>

namespace mfvar {

namespace {

MatrixXd phi_sum(const VecmParams& th) {
  MatrixXd s = MatrixXd::Zero(th.dims.n, th.dims.n);
  for (const auto& f : th.phi) s += f;
  return s;
}

// sum_j j Phi_j, the weight picked up when E dy_{t-j} is shifted j periods
MatrixXd phi_weighted(const VecmParams& th) {
  MatrixXd s = MatrixXd::Zero(th.dims.n, th.dims.n);
  for (size_t j = 0; j < th.phi.size(); ++j)
    s += static_cast<double>(j + 1) * th.phi[j];
  return s;
}

MatrixXd alpha_bar_t(const VecmParams& th) {  // (alpha'alpha)^{-1} alpha'
  const MatrixXd& a = th.alpha;
  return (a.transpose() * a).ldlt().solve(a.transpose());
}

void check_tm_shapes(const TrendMoments& tm, const ModelDims& d) {
  if (tm.g0.size() != d.n || tm.g1.size() != d.n || tm.h0.size() != d.r ||
      tm.h1.size() != d.r)
    throw Error(ErrorCode::InvalidArgument,
                "trend moments have the wrong dimensions");
}

// (E beta'y_{t-1}; S_C E dy_t; E beta'y_{t-2}; S_C E dy_{t-1}) at time t
VectorXd stack_moments(const TrendMoments& tm, const MatrixXd& Sc, double t) {
  const int r = tm.h0.size(), ns = Sc.rows();
  VectorXd v(2 * (r + ns));
  v.segment(0, r) = tm.h0 + t * tm.h1;
  v.segment(r, ns) = Sc * (tm.g0 + t * tm.g1);
  v.segment(r + ns, r) = tm.h0 + (t - 1.0) * tm.h1;
  v.segment(2 * r + ns, ns) = Sc * (tm.g0 + (t - 1.0) * tm.g1);
  return v;
}

// The full trend system evaluated column by column through the steady-state
// solve; this dodges the closed-form block expressions entirely.
MatrixXd assemble_trend_system(const VecmParams& theta, const MatrixXd& Sc,
                               double t) {
  const int n = theta.dims.n;
  MatrixXd M(2 * n, 2 * n);
  for (int k = 0; k < 2 * n; ++k) {
    VectorXd m0 = VectorXd::Zero(n), m1 = VectorXd::Zero(n);
    (k < n ? m0(k % n) : m1(k % n)) = 1.0;
    M.col(k) = stack_moments(trend_moments(theta, m0, m1), Sc, t);
  }
  return M;
}

}  // namespace

const char* to_string(DetCase c) {
  switch (c) {
    case DetCase::H2: return "H2";
    case DetCase::H1: return "H1";
    case DetCase::H1star: return "H1star";
    case DetCase::H: return "H";
    case DetCase::Hstar: return "Hstar";
  }
  return "?";
}

MatrixXd granger_C(const VecmParams& theta) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  const int n = theta.dims.n;
  MatrixXd ap = orth_complement(theta.alpha, ComplementKind::Alpha);
  MatrixXd bp = orth_complement(theta.beta, ComplementKind::Beta);
  MatrixXd mid =
      ap.transpose() * (MatrixXd::Identity(n, n) - phi_sum(theta)) * bp;
  // invertibility of this block is exactly condition C2
  Eigen::FullPivLU<MatrixXd> lu(mid);
  if (!lu.isInvertible())
    throw Error(ErrorCode::C2Violated,
                "alpha_perp'(I - sum Phi) beta_perp is singular");
  return bp * lu.solve(ap.transpose());
}

TrendMoments trend_moments(const VecmParams& theta, const VectorXd& mu0,
                           const VectorXd& mu1) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  const int n = theta.dims.n, r = theta.dims.r;
  if (mu0.size() != n || mu1.size() != n)
    throw Error(ErrorCode::InvalidArgument, "mu0 and mu1 must be n-vectors");

  // Take expectations in the VECM with E dy_t = g0 + g1 t and
  // E beta'y_{t-1} = h0 + h1 t, match powers of t, and append the
  // telescoped cointegration identity beta'(E dy_t) = E beta'y_t - h0 - h1 t:
  //   (I - sum Phi) g1 - alpha h1 = mu1        beta' g1 = 0
  //   (I - sum Phi) g0 - alpha h0 = mu0 - W g1  beta' g0 = h1
  // where W = sum_j j Phi_j. Both solves share one matrix.
  MatrixXd M = MatrixXd::Zero(n + r, n + r);
  M.topLeftCorner(n, n) = MatrixXd::Identity(n, n) - phi_sum(theta);
  M.topRightCorner(n, r) = -theta.alpha;
  M.bottomLeftCorner(r, n) = theta.beta.transpose();

  Eigen::FullPivLU<MatrixXd> lu(M);
  if (!lu.isInvertible())
    throw Error(ErrorCode::SingularSteadyState,
                "trend steady-state system is singular");

  VectorXd rhs = VectorXd::Zero(n + r);
  rhs.head(n) = mu1;
  VectorXd s = lu.solve(rhs);
  TrendMoments tm;
  tm.g1 = s.head(n);
  tm.h1 = s.tail(r);

  rhs.head(n) = mu0 - phi_weighted(theta) * tm.g1;
  rhs.tail(r) = tm.h1;
  s = lu.solve(rhs);
  tm.g0 = s.head(n);
  tm.h0 = s.tail(r);

  // independent route for the slope: the long-run response to the trend
  if (max_abs(tm.g1 - granger_C(theta) * mu1) >
      1e-8 * (1.0 + max_abs(tm.g1)))
    throw Error(ErrorCode::SingularSteadyState,
                "steady-state slope disagrees with the long-run response");
  return tm;
}

DetCase classify_case(const TrendMoments& tm, const VecmParams& theta,
                      double tol) {
  check_tm_shapes(tm, theta.dims);
  auto nonzero = [tol](const VectorXd& v) {
    return v.size() > 0 && v.cwiseAbs().maxCoeff() > tol;
  };
  // g1 = C mu1 lives in the alpha_perp directions, so a visible slope in
  // E dy_t separates the full-trend case from the cointegration-only trend
  if (nonzero(tm.g1)) return DetCase::H;
  if (nonzero(tm.h1)) return DetCase::Hstar;
  if (nonzero(tm.g0)) return DetCase::H1;
  if (nonzero(tm.h0)) return DetCase::H1star;
  return DetCase::H2;
}

DeterministicSpec recover_deterministic(DetCase c, const TrendMoments& tm,
                                        const VecmParams& theta, double tol) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  check_tm_shapes(tm, theta.dims);
  const int n = theta.dims.n, r = theta.dims.r;

  auto require_zero = [&](const VectorXd& v, const char* what) {
    if (v.size() > 0 && v.cwiseAbs().maxCoeff() > tol)
      throw Error(ErrorCode::CaseMismatch,
                  std::string(what) + " does not vanish under case " +
                      to_string(c));
  };

  DeterministicSpec spec;
  spec.det_case = c;
  const MatrixXd Sc =
      orth_complement(theta.alpha, ComplementKind::Alpha).transpose();

  switch (c) {
    case DetCase::H2:
      require_zero(tm.g0, "g0");
      require_zero(tm.g1, "g1");
      require_zero(tm.h0, "h0");
      require_zero(tm.h1, "h1");
      break;

    case DetCase::H1: {
      require_zero(tm.g1, "g1");
      require_zero(tm.h1, "h1");
      // stacked constant system: E(beta'y_t; S_C dy_t) =
      //   [abar'((I - sum Phi) C - I); S_C C] mu0, full rank n
      MatrixXd C = granger_C(theta);
      MatrixXd A1(n, n);
      A1.topRows(r) =
          alpha_bar_t(theta) *
          ((MatrixXd::Identity(n, n) - phi_sum(theta)) * C -
           MatrixXd::Identity(n, n));
      A1.bottomRows(n - r) = Sc * C;
      VectorXd rhs(n);
      rhs.head(r) = tm.h0;
      rhs.tail(n - r) = Sc * tm.g0;
      Eigen::FullPivLU<MatrixXd> lu(A1);
      if (!lu.isInvertible())
        throw Error(ErrorCode::SingularMmu,
                    "constant-term system is singular");
      VectorXd mu0 = lu.solve(rhs);
      spec.residual = max_abs(A1 * mu0 - rhs);
      spec.mu0 = mu0;
      break;
    }

    case DetCase::H1star:
      require_zero(tm.g0, "g0");
      require_zero(tm.g1, "g1");
      require_zero(tm.h1, "h1");
      spec.rho0 = VectorXd(-tm.h0);
      break;

    case DetCase::H: {
      auto solve_at = [&](double t) {
        MatrixXd M = assemble_trend_system(theta, Sc, t);
        Eigen::FullPivLU<MatrixXd> lu(M);
        if (!lu.isInvertible())
          throw Error(ErrorCode::SingularMmu, "full trend system is singular");
        VectorXd rhs = stack_moments(tm, Sc, t);
        VectorXd sol = lu.solve(rhs);
        spec.residual = std::max(spec.residual, max_abs(M * sol - rhs));
        return sol;
      };
      // t cancels in exact arithmetic; solving at two times is the self-check
      VectorXd s1 = solve_at(1.0), s2 = solve_at(2.0);
      if (max_abs(s1 - s2) > tol * (1.0 + max_abs(s1)))
        throw Error(ErrorCode::SingularMmu,
                    "trend system is not time-invariant");
      spec.mu0 = VectorXd(s1.head(n));
      spec.mu1 = VectorXd(s1.tail(n));
      break;
    }

    case DetCase::Hstar: {
      require_zero(tm.g1, "g1");
      // mu_t = mu0 + alpha rho1 t: compress the mu1 columns through alpha
      // and drop the last row block, leaving a square system of size n + r
      auto solve_at = [&](double t) {
        MatrixXd M = assemble_trend_system(theta, Sc, t).topRows(n + r);
        MatrixXd Mh(n + r, n + r);
        Mh.leftCols(n) = M.leftCols(n);
        Mh.rightCols(r) = M.rightCols(n) * theta.alpha;
        Eigen::FullPivLU<MatrixXd> lu(Mh);
        if (!lu.isInvertible())
          throw Error(ErrorCode::SingularMmu,
                      "reduced trend system is singular");
        VectorXd rhs = stack_moments(tm, Sc, t).head(n + r);
        VectorXd sol = lu.solve(rhs);
        spec.residual = std::max(spec.residual, max_abs(Mh * sol - rhs));
        return sol;
      };
      VectorXd s1 = solve_at(1.0), s2 = solve_at(2.0);
      if (max_abs(s1 - s2) > tol * (1.0 + max_abs(s1)))
        throw Error(ErrorCode::SingularMmu,
                    "reduced trend system is not time-invariant");
      spec.mu0 = VectorXd(s1.head(n));
      spec.rho1 = VectorXd(s1.tail(r));
      break;
    }
  }
  return spec;
}

}  // namespace mfvar
