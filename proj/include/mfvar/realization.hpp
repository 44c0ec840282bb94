#pragma once

#include "mfvar/blocking.hpp"

#include <vector>

namespace mfvar {

// steady-state innovations representation of the blocked observation process:
//   x_{tau+1} = A x_tau + K e_tau,   y_tau = C x_tau + e_tau,  cov(e) = Sigma
// Sigma is positive semidefinite but exactly singular: the level rows of the
// observation repeat information one window apart, so r directions of e are
// degenerate. K is the minimum-norm gain for that covariance.
struct InnovationsForm {
  MatrixXd A;
  MatrixXd C;
  MatrixXd K;
  MatrixXd Sigma;
};

// Compact prediction filter: iterate the Riccati recursion for the blocked
// state space to its fixed point and return the steady-state predictor.
InnovationsForm cpf(const BlockedSystem& bs);

// Autocovariances gamma(0), ..., gamma(H) implied by an innovations form.
std::vector<MatrixXd> innovation_autocov(const InnovationsForm& f, int H);

struct HankelRealization {
  MatrixXd Abar;   // m_hat x m_hat, balanced coordinates
  MatrixXd Cbar;   // ntilde x m_hat
  MatrixXd Gbar;   // m_hat x ntilde
  MatrixXd gamma0;
  VectorXd svals;  // all singular values of the block Hankel matrix
  int m_hat = 0;
  double shift_residual = 0.0;
};

// Balanced covariance realization by SVD of the block Hankel matrix of
// gamma(N), gamma(2N), ...  When m_hint >= 0 the order is fixed to m_hint
// and a numerical rank below it is an error.
HankelRealization hankel_realization(const AutocovSequence& seq,
                                     int m_hint = -1, double tol_rank = 1e-12);

// Faurre iteration: turn a covariance realization (Abar, Cbar, Gbar, gamma0)
// into the innovations form with the minimal state covariance.
InnovationsForm innovation_from_hankel(const HankelRealization& hr);

}  // namespace mfvar
