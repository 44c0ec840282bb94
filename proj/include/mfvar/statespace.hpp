#pragma once

#include "mfvar/types.hpp"

#include <vector>

namespace mfvar {

struct CompanionForm {
  MatrixXd A;  // np x np companion matrix
  MatrixXd B;  // np x n, identity on the first block row
  MatrixXd C;  // n x np, equals the top block row of A
};

CompanionForm companion(const VarParams& var);

struct DiffStateSpace {
  MatrixXd A;  // m x m, m = r + n(p-1); strictly stable on the model class
  MatrixXd B;  // m x n
  MatrixXd C;  // (r+n) x m, the first two block rows of A
  MatrixXd D;  // (r+n) x n
};

// State-space form of the differenced system with state
// (beta'y_t, dy_t, dy_{t-1}, ..., dy_{t-p+2}). Throws UnstableDiffSystem
// when the transition matrix is not strictly stable.
DiffStateSpace diff_state_space(const VecmParams& theta,
                                const Tolerances& tol = {});

// Solve X = A X A' + Q for symmetric Q via complex Schur decomposition.
// Throws Unstable when A has an eigenvalue with modulus >= 1.
MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q);

struct HfMoments {
  int H = 0;        // largest stored lead
  int p = 1;        // lag order, fixes the stored lead/lag window
  MatrixXd gamma_rp;               // m x m state covariance
  std::vector<MatrixXd> ag;        // ag[h] = A^h * gamma_rp, h = 0..H

  // Autocovariances of the stationary pieces; h may be negative.
  // gamma_dy(h)      = E dy_{t+h} dy_t'            (n x n)
  // gamma_b(h)       = E b_{t+h} b_t', b = beta'y  (r x r)
  // gamma_b_dy(h)    = E b_{t+h} dy_t'             (r x n)
  MatrixXd gamma_dy(int h) const;
  MatrixXd gamma_b(int h) const;
  MatrixXd gamma_b_dy(int h) const;

  int r = 0, n = 0;
};

// Second moments of the stationary differenced process up to lead H
// (defaults to 2m + 2 when H < 0).
HfMoments hf_moments(const VecmParams& theta, int H = -1,
                     const Tolerances& tol = {});

}  // namespace mfvar
