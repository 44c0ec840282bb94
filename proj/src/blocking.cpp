#include "mfvar/blocking.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

namespace mfvar {

namespace {

// Column offset of the j-th difference block (j >= 1) in the differenced
// state (beta'y_t, dy_t, dy_{t-1}, ...): dy_{t-j+1} sits at r + (j-1)n.
inline int dcol(const ModelDims& d, int j) { return d.r + (j - 1) * d.n; }

void put_boxcar(MatrixXd* c, const ModelDims& d, int row, int first_block) {
  for (int j = first_block; j < first_block + d.N; ++j)
    c->block(row, dcol(d, j), d.n, d.n) += MatrixXd::Identity(d.n, d.n);
}

}  // namespace

BlockingMatrix blocking_matrix(const ModelDims& dims, const MatrixXd& beta) {
  dims.validate();
  const int n = dims.n, r = dims.r, p = dims.p, N = dims.N;
  const int m = dims.m();
  if (r > 0 && (beta.rows() != n || beta.cols() != r))
    throw Error(ErrorCode::InvalidArgument, "beta must be n x r");
  // Both schemes stack N-windows back to dy_{t-2N+2}; the state must be at
  // least that deep. The flow dims bound implies it, stock at N >= 3 not.
  if (p < 2 * N)
    throw Error(ErrorCode::LagOrderTooSmall,
                "N-window stack needs p >= 2N");

  BlockingMatrix bm;
  bm.scheme = dims.scheme;
  MatrixXd& c = bm.c;
  c = MatrixXd::Zero(m, m);

  if (dims.scheme == Scheme::Stock) {
    // (beta'y_t, d_N y_t, ..., d_N y_{t-N+1}, dy_{t-N}, ..., dy_{t-p+2})
    c.topLeftCorner(r, r) = MatrixXd::Identity(r, r);
    int row = r;
    for (int k = 0; k <= N - 1; ++k, row += n) put_boxcar(&c, dims, row, k + 1);
    for (int j = N + 1; j <= p - 1; ++j, row += n)
      c.block(row, dcol(dims, j), n, n) = MatrixXd::Identity(n, n);
  } else {
    // (u^F_t, d^S_N y_t, d_N y_{t-1}, ..., d_N y_{t-N+1}, dy_{t-N}, ...)
    // u^F_t = beta' sum_{j<N} y_{t-j} = N beta'y_t - sum_j (N-j) beta'dy_{t-j+1}
    c.topLeftCorner(r, r) = (double)N * MatrixXd::Identity(r, r);
    for (int j = 1; j <= N - 1; ++j)
      c.block(0, dcol(dims, j), r, n) = -(double)(N - j) * beta.transpose();
    int row = r;
    // d^S_N y_t, the N-window of N-differences: triangular weights
    for (int l = 0; l <= 2 * N - 2; ++l) {
      double w = std::min({l + 1, N, 2 * N - 1 - l});
      c.block(row, dcol(dims, l + 1), n, n) =
          w * MatrixXd::Identity(n, n);
    }
    row += n;
    for (int k = 1; k <= N - 1; ++k, row += n) put_boxcar(&c, dims, row, k + 1);
    for (int j = N + 1; j <= p - 1; ++j, row += n)
      c.block(row, dcol(dims, j), n, n) = MatrixXd::Identity(n, n);
  }

  Eigen::PartialPivLU<MatrixXd> lu(c);
  if (lu.rcond() < 1e-12)
    throw Error(ErrorCode::SingularC, "blocking matrix is not invertible");
  return bm;
}

MatrixXd selection_rows(const ModelDims& dims, const MatrixXd& c) {
  const int n = dims.n, r = dims.r, nf = dims.n_f, N = dims.N;
  MatrixXd S(dims.ntilde(), dims.m());
  S.topRows(r + n) = c.topRows(r + n);
  int out = r + n;
  // fast sub-rows of the stacked N-difference blocks (c row-blocks 3..N+1)
  for (int k = 2; k <= N; ++k, out += nf)
    S.middleRows(out, nf) = c.middleRows(r + (k - 1) * n, nf);
  return S;
}

BlockedSystem blocked_system(const VecmParams& theta, const Tolerances& tol) {
  theta.dims.validate();
  const ModelDims& d = theta.dims;
  const int n = d.n, N = d.N, m = d.m();

  DiffStateSpace ss = diff_state_space(theta, tol);
  BlockingMatrix bm = blocking_matrix(d, theta.beta);

  BlockedSystem bs;
  bs.c = bm.c;
  bs.S_zeta = selection_rows(d, bm.c);

  MatrixXd AN = MatrixXd::Identity(m, m);
  MatrixXd Bb(m, n * N);
  for (int j = 0; j < N; ++j) {
    Bb.middleCols(n * j, n) = AN * ss.B;  // A^j B multiplies nu_{t-j}
    AN = ss.A * AN;
  }
  // AN now holds A^N

  Eigen::PartialPivLU<MatrixXd> clu(bm.c.transpose());
  auto right_solve = [&](const MatrixXd& X) {  // X * c^{-1}
    return MatrixXd(clu.solve(X.transpose()).transpose());
  };

  bs.A_bc = right_solve(bm.c * AN);
  bs.B_bc = bm.c * Bb;
  bs.C_bc = right_solve(bs.S_zeta * AN);
  bs.D_b = bs.S_zeta * Bb;
  bs.Sigma_b = MatrixXd::Zero(n * N, n * N);
  for (int j = 0; j < N; ++j)
    bs.Sigma_b.block(n * j, n * j, n, n) = theta.sigma;
  return bs;
}

AutocovSequence blocked_autocov(const VecmParams& theta, int H,
                                const Tolerances& tol) {
  const int m = theta.dims.m();
  if (H < 0) H = 2 * m + 2;

  DiffStateSpace ss = diff_state_space(theta, tol);
  BlockedSystem bs = blocked_system(theta, tol);
  MatrixXd gamma_rp =
      solve_lyapunov(ss.A, ss.B * theta.sigma * ss.B.transpose());
  MatrixXd gamma_c = bs.c * gamma_rp * bs.c.transpose();

  AutocovSequence seq;
  seq.dims = theta.dims;
  seq.H = H;
  seq.g.resize(H + 1);
  seq.g[0] = bs.C_bc * gamma_c * bs.C_bc.transpose() +
             bs.D_b * bs.Sigma_b * bs.D_b.transpose();
  MatrixXd M = bs.A_bc * gamma_c * bs.C_bc.transpose() +
               bs.B_bc * bs.Sigma_b * bs.D_b.transpose();
  for (int h = 1; h <= H; ++h) {
    seq.g[h] = bs.C_bc * M;
    M = bs.A_bc * M;
  }
  return seq;
}

}  // namespace mfvar
