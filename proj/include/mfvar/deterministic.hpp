#pragma once

#include <optional>

#include "mfvar/params.hpp"

namespace mfvar {

// Johansen's five deterministic-term cases for the VECM
//   dy_t = mu_0 + mu_1 t + alpha beta'y_{t-1} + sum_j Phi_j dy_{t-j} + nu_t.
enum class DetCase { H2, H1, H1star, H, Hstar };

const char* to_string(DetCase c);

struct DeterministicSpec {
  DetCase det_case = DetCase::H2;
  std::optional<VectorXd> mu0;   // n-vector (H1, H, Hstar)
  std::optional<VectorXd> mu1;   // n-vector (H)
  std::optional<VectorXd> rho0;  // r-vector, mu_t = alpha rho0 (H1star)
  std::optional<VectorXd> rho1;  // r-vector, mu_t = mu0 + alpha rho1 t (Hstar)
  double residual = 0.0;         // max-norm solve residual of the case system
};

// First moments of the stationary coordinates implied by the trend:
//   E dy_t        = g0 + g1 t
//   E beta'y_{t-1} = h0 + h1 t
struct TrendMoments {
  VectorXd g0, g1;  // n-vectors
  VectorXd h0, h1;  // r-vectors
};

// Long-run impact matrix
//   C = beta_perp (alpha_perp' (I - sum_j Phi_j) beta_perp)^{-1} alpha_perp',
// invariant under the choice of complement bases. rank C = n - r,
// C alpha = 0 and beta'C = 0. For r = 0 this is (I - sum_j Phi_j)^{-1}.
MatrixXd granger_C(const VecmParams& theta);

// Solve the steady-state system obtained by taking expectations in the VECM
// for the given intercept and trend slope. Cross-checked against g1 = C mu1.
TrendMoments trend_moments(const VecmParams& theta, const VectorXd& mu0,
                           const VectorXd& mu1);

// Most restrictive case whose zero-pattern is consistent with tm: entries
// below tol count as zero.
DetCase classify_case(const TrendMoments& tm, const VecmParams& theta,
                      double tol = 1e-8);

// Invert the trend-moment map for the declared case. Blocks of tm that the
// case forces to zero must vanish to tol, otherwise CaseMismatch.
DeterministicSpec recover_deterministic(DetCase c, const TrendMoments& tm,
                                        const VecmParams& theta,
                                        double tol = 1e-6);

}  // namespace mfvar
