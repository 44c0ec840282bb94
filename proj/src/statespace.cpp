#include "mfvar/statespace.hpp"

#include <Eigen/Eigenvalues>

#include <complex>

namespace mfvar {

CompanionForm companion(const VarParams& var) {
  var.dims.validate_basic();
  const int n = var.dims.n, p = var.dims.p;
  if ((int)var.a.size() != p)
    throw Error(ErrorCode::InvalidArgument, "need p coefficient matrices");

  CompanionForm cf;
  cf.A = MatrixXd::Zero(n * p, n * p);
  for (int j = 0; j < p; ++j) cf.A.block(0, n * j, n, n) = var.a[j];
  if (p > 1)
    cf.A.block(n, 0, n * (p - 1), n * (p - 1)) =
        MatrixXd::Identity(n * (p - 1), n * (p - 1));
  cf.B = MatrixXd::Zero(n * p, n);
  cf.B.topRows(n) = MatrixXd::Identity(n, n);
  cf.C = cf.A.topRows(n);
  return cf;
}

DiffStateSpace diff_state_space(const VecmParams& theta,
                                const Tolerances& tol) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  const int n = theta.dims.n, r = theta.dims.r, p = theta.dims.p;
  const int m = theta.dims.m();
  const MatrixXd bt = theta.beta.transpose();  // r x n

  DiffStateSpace ss;
  ss.A = MatrixXd::Zero(m, m);
  // block row 1: beta'y recursion
  if (r > 0) {
    ss.A.block(0, 0, r, r) =
        bt * theta.alpha + MatrixXd::Identity(r, r);
    for (int j = 1; j <= p - 1; ++j)
      ss.A.block(0, r + n * (j - 1), r, n) = bt * theta.phi[j - 1];
  }
  // block row 2: dy recursion
  if (p >= 2) {
    if (r > 0) ss.A.block(r, 0, n, r) = theta.alpha;
    for (int j = 1; j <= p - 1; ++j)
      ss.A.block(r, r + n * (j - 1), n, n) = theta.phi[j - 1];
    // shift rows for the lagged differences
    if (p >= 3)
      ss.A.block(r + n, r, n * (p - 2), n * (p - 2)) =
          MatrixXd::Identity(n * (p - 2), n * (p - 2));
  }

  ss.B = MatrixXd::Zero(m, n);
  if (r > 0) ss.B.topRows(r) = bt;
  if (p >= 2) ss.B.block(r, 0, n, n) = MatrixXd::Identity(n, n);

  // Output (beta'y_t, dy_t) written on x_t and nu_t. Built explicitly
  // rather than sliced out of A to keep the output map readable on its own.
  ss.C = MatrixXd::Zero(r + n, m);
  if (r > 0) {
    ss.C.block(0, 0, r, r) = bt * theta.alpha + MatrixXd::Identity(r, r);
    for (int j = 1; j <= p - 1; ++j)
      ss.C.block(0, r + n * (j - 1), r, n) = bt * theta.phi[j - 1];
    ss.C.block(r, 0, n, r) = theta.alpha;
  }
  for (int j = 1; j <= p - 1; ++j)
    ss.C.block(r, r + n * (j - 1), n, n) = theta.phi[j - 1];

  ss.D = MatrixXd::Zero(r + n, n);
  if (r > 0) ss.D.topRows(r) = bt;
  ss.D.bottomRows(n) = MatrixXd::Identity(n, n);

  if (m > 0) {
    double rho = ss.A.eigenvalues().cwiseAbs().maxCoeff();
    if (rho >= 1.0 - tol.stab)
      throw Error(ErrorCode::UnstableDiffSystem,
                  "differenced transition matrix has spectral radius " +
                      std::to_string(rho));
  }
  return ss;
}

MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  const int k = (int)A.rows();
  if (A.cols() != k || Q.rows() != k || Q.cols() != k)
    throw Error(ErrorCode::InvalidArgument, "lyapunov needs square A, Q");
  if (k == 0) return MatrixXd(0, 0);

  Eigen::ComplexSchur<MatrixXd> schur(A);
  if (schur.info() != Eigen::Success)
    throw Error(ErrorCode::InvalidArgument, "schur decomposition failed");
  const MatrixXcd T = schur.matrixT();
  const MatrixXcd U = schur.matrixU();
  for (int i = 0; i < k; ++i)
    if (std::abs(T(i, i)) >= 1.0)
      throw Error(ErrorCode::Unstable,
                  "lyapunov solve needs a strictly stable matrix");

  // X - T X T^H = U^H Q U, solved column by column from the right. Column j
  // couples only to columns l > j through the upper triangle of T.
  MatrixXcd Qt = U.adjoint() * Q * U;
  MatrixXcd X = MatrixXcd::Zero(k, k);
  const MatrixXcd Ik = MatrixXcd::Identity(k, k);
  for (int j = k - 1; j >= 0; --j) {
    VectorXcd rhs = Qt.col(j);
    if (j < k - 1) {
      VectorXcd acc = VectorXcd::Zero(k);
      for (int l = j + 1; l < k; ++l) acc += std::conj(T(j, l)) * X.col(l);
      rhs += T * acc;
    }
    MatrixXcd lhs = Ik - std::conj(T(j, j)) * T;
    X.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  MatrixXd G = (U * X * U.adjoint()).real();
  return 0.5 * (G + G.transpose());
}

HfMoments hf_moments(const VecmParams& theta, int H, const Tolerances& tol) {
  const int m = theta.dims.m();
  if (H < 0) H = 2 * m + 2;
  DiffStateSpace ss = diff_state_space(theta, tol);

  HfMoments mom;
  mom.H = H;
  mom.p = theta.dims.p;
  mom.r = theta.dims.r;
  mom.n = theta.dims.n;
  mom.gamma_rp = solve_lyapunov(ss.A, ss.B * theta.sigma * ss.B.transpose());
  int hmax = std::max(H, theta.dims.p - 1);
  mom.ag.resize(hmax + 1);
  mom.ag[0] = mom.gamma_rp;
  for (int h = 1; h <= hmax; ++h) mom.ag[h] = ss.A * mom.ag[h - 1];
  return mom;
}

// x_{t+1} carries (beta'y_t, dy_t, ..., dy_{t-p+2}); the cross moments at
// lead h are read off A^h gamma_rp.
MatrixXd HfMoments::gamma_dy(int h) const {
  const int a = std::abs(h);
  if (a >= (int)ag.size())
    throw Error(ErrorCode::InvalidArgument, "lag outside stored window");
  MatrixXd g = ag[a].block(r, r, n, n);
  return h >= 0 ? g : MatrixXd(g.transpose());
}

MatrixXd HfMoments::gamma_b(int h) const {
  const int a = std::abs(h);
  if (a >= (int)ag.size())
    throw Error(ErrorCode::InvalidArgument, "lag outside stored window");
  MatrixXd g = ag[a].block(0, 0, r, r);
  return h >= 0 ? g : MatrixXd(g.transpose());
}

MatrixXd HfMoments::gamma_b_dy(int h) const {
  const int a = std::abs(h);
  if (a >= (int)ag.size())
    throw Error(ErrorCode::InvalidArgument, "lag outside stored window");
  if (h >= 0) return ag[a].block(0, r, r, n);
  return ag[a].block(r, 0, n, r).transpose();
}

}  // namespace mfvar
