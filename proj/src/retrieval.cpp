#include "mfvar/retrieval.hpp"

#include "mfvar/params.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>

namespace mfvar {

namespace {

using cplx = std::complex<double>;

// Unit rows picking the observed coordinates (levels, the current window
// block, fast rows of the shifted window blocks) out of the blocked state.
MatrixXd selector(const ModelDims& d) {
  const int r = d.r, n = d.n, nf = d.n_f, N = d.N;
  MatrixXd sel = MatrixXd::Zero(d.ntilde(), d.m());
  sel.topLeftCorner(r + n, r + n).setIdentity();
  int out = r + n;
  for (int k = 1; k < N; ++k, out += nf)
    sel.block(out, r + k * n, nf, nf).setIdentity();
  return sel;
}

// sum_{j=0}^{N-1} B^j
MatrixXd power_sum(const MatrixXd& B, int N) {
  MatrixXd S = MatrixXd::Identity(B.rows(), B.cols());
  MatrixXd P = S;
  for (int j = 1; j < N; ++j) {
    P = P * B;
    S += P;
  }
  return S;
}

MatrixXd matrix_power(const MatrixXd& B, int k) {
  MatrixXd P = MatrixXd::Identity(B.rows(), B.cols());
  for (int j = 0; j < k; ++j) P = P * B;
  return P;
}

}  // namespace

EigStructure recover_eigstructure(const InnovationsForm& f,
                                  const ModelDims& dims,
                                  const RetrievalOptions& opts) {
  dims.validate();
  const int nf = dims.n_f, r = dims.r, N = dims.N, nt = dims.ntilde();
  const int m = static_cast<int>(f.A.rows());
  if (f.C.rows() != nt)
    throw Error(ErrorCode::InvalidArgument,
                "observation rows do not match the dimensions");

  Eigen::ComplexEigenSolver<MatrixXd> eig(f.A);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::NonDiagonalizable,
                "eigen decomposition of the blocked transition failed");

  EigStructure es;
  es.lambda_N = eig.eigenvalues();
  es.W = eig.eigenvectors();
  es.lambda.resize(m);

  es.min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      es.min_gap = std::min(es.min_gap, std::abs(es.lambda_N(i) - es.lambda_N(j)));

  const MatrixXcd Cc = f.C.cast<cplx>();
  for (int i = 0; i < m; ++i) {
    const cplx mu = es.lambda_N(i);
    if (std::abs(mu - 1.0) <= opts.tol_unit) {
      // aggregated unit roots stay unit roots at every frequency
      es.lambda(i) = 1.0;
      continue;
    }
    const VectorXcd z = Cc * es.W.col(i);
    // The last fast block and its designated partner are one
    // high-frequency step apart along this eigendirection. For N = 2 the
    // partner is the fast part of the window block; under flow
    // aggregation that block is the double window, which shifts the
    // ratio by one.
    const VectorXcd zlast = z.tail(nf);
    const VectorXcd zprev =
        N >= 3 ? z.segment(nt - 2 * nf, nf) : z.segment(r, nf);
    const double zn = z.norm();
    if (zlast.norm() <= 1e-10 * (zn > 0.0 ? zn : 1.0))
      throw Error(ErrorCode::ZeroDenominator,
                  "eigenvector does not load on the fast observations");
    cplx guess = zlast.dot(zprev) / cplx(zlast.squaredNorm());
    if (dims.scheme == Scheme::Flow && N == 2) guess -= 1.0;

    const double mod = std::pow(std::abs(mu), 1.0 / N);
    const double arg = std::arg(mu);
    cplx best = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < N; ++k) {
      const cplx cand =
          std::polar(mod, (arg + 2.0 * M_PI * k) / static_cast<double>(N));
      const double dist = std::abs(cand - guess);
      if (dist < best_dist) {
        best_dist = dist;
        best = cand;
      }
    }
    es.lambda(i) = best;
  }

  Eigen::FullPivLU<MatrixXcd> wlu(es.W);
  if (!wlu.isInvertible())
    throw Error(ErrorCode::NonDiagonalizable,
                "eigenvector matrix is singular");
  const MatrixXcd Acx = es.W * es.lambda.asDiagonal() * wlu.inverse();
  es.realness = max_abs(Acx.imag()) / (1.0 + max_abs(Acx.real()));
  if (es.realness > opts.tol_real)
    throw Error(ErrorCode::NonRealResult,
                "recovered transition has a material imaginary part");
  es.Ac = Acx.real();
  return es;
}

TRResult recover_T_R(const InnovationsForm& f, const EigStructure& es,
                     const MatrixXd& beta, const ModelDims& dims,
                     const RetrievalOptions& opts) {
  dims.validate();
  const int m = dims.m(), n = dims.n, r = dims.r, N = dims.N, p = dims.p;
  if (f.A.rows() != m || es.Ac.rows() != m)
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");

  const BlockingMatrix bm = blocking_matrix(dims, beta);

  // C Abar^{-1} equals the selector rows of T
  Eigen::PartialPivLU<MatrixXd> at(f.A.transpose());
  const MatrixXd CT = at.solve(f.C.transpose()).transpose();
  const MatrixXd Tb = CT.topRows(r);
  const MatrixXd T1 = CT.middleRows(r, n);

  Eigen::FullPivLU<MatrixXd> aclu(es.Ac);
  if (!aclu.isInvertible())
    throw Error(ErrorCode::SingularSum,
                "high-frequency transition is singular");
  const MatrixXd Acinv = aclu.inverse();

  // window sum of inverse powers; singular exactly when some de-aliased
  // eigenvalue is a nontrivial N-th root of one
  const MatrixXd S = power_sum(Acinv, N);
  Eigen::FullPivLU<MatrixXd> slu(S);
  if (!slu.isInvertible())
    throw Error(ErrorCode::SingularSum,
                "window sum of inverse transition powers is singular");
  const MatrixXd Sinv = slu.inverse();

  // first lag block, then the shift recursion walks down the state
  MatrixXd R(m, m);
  MatrixXd Rj = dims.scheme == Scheme::Flow ? MatrixXd(T1 * Sinv * Sinv)
                                            : MatrixXd(T1 * Sinv);
  R.middleRows(r, n) = Rj;
  for (int j = 2; j <= p - 1; ++j) {
    Rj = Rj * Acinv;
    R.middleRows(r + (j - 1) * n, n) = Rj;
  }

  // level rows from the top block row of c, whatever the scheme put there
  MatrixXd acc = Tb;
  for (int j = 1; j <= p - 1; ++j)
    acc -= bm.c.block(0, r + (j - 1) * n, r, n) *
           R.middleRows(r + (j - 1) * n, n);
  R.topRows(r) = bm.c.topLeftCorner(r, r).lu().solve(acc);

  TRResult tr;
  tr.R = R;
  tr.T = bm.c * R;
  tr.consistency =
      max_abs(selector(dims) * tr.T - CT) / (1.0 + max_abs(CT));
  if (tr.consistency > opts.tol_consistency)
    throw Error(ErrorCode::ConsistencyFail,
                "recovered basis does not reproduce the selector rows");
  return tr;
}

VarResult recover_var(const MatrixXd& R, const EigStructure& es,
                      const MatrixXd& beta, const ModelDims& dims,
                      const RetrievalOptions& opts) {
  dims.validate();
  const int m = dims.m(), n = dims.n, r = dims.r, p = dims.p;
  if (R.rows() != m || R.cols() != m || es.Ac.rows() != m)
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");
  if (beta.rows() != n || beta.cols() != r)
    throw Error(ErrorCode::InvalidArgument, "beta shape mismatch");

  Eigen::FullPivLU<MatrixXd> rlu(R);
  if (!rlu.isInvertible())
    throw Error(ErrorCode::SingularR, "basis change is singular");
  const MatrixXd A = R * es.Ac * rlu.inverse();

  VarResult vr;
  vr.A = A;
  vr.theta.dims = dims;
  vr.theta.beta = beta;
  vr.theta.alpha = A.block(r, 0, n, r);
  vr.theta.phi.clear();
  for (int j = 1; j <= p - 1; ++j)
    vr.theta.phi.push_back(A.block(r, r + (j - 1) * n, n, n));

  // rows the companion structure pins down: the level rows are the
  // coefficient rows premultiplied by beta' (plus the identity on the
  // level block), the lower rows are lag shifts
  const MatrixXd bt = beta.transpose();
  double res = max_abs(A.topLeftCorner(r, r) -
                       (MatrixXd::Identity(r, r) + bt * vr.theta.alpha));
  for (int j = 1; j <= p - 1; ++j)
    res = std::max(res, max_abs(A.block(0, r + (j - 1) * n, r, n) -
                                bt * vr.theta.phi[j - 1]));
  for (int j = 2; j <= p - 1; ++j) {
    MatrixXd want = MatrixXd::Zero(n, m);
    want.block(0, r + (j - 2) * n, n, n).setIdentity();
    res = std::max(res, max_abs(A.middleRows(r + (j - 1) * n, n) - want));
  }
  vr.structure_residual = res / (1.0 + max_abs(A));
  if (vr.structure_residual > opts.tol_structure)
    throw Error(ErrorCode::StructureResidualTooLarge,
                "recovered transition misses the companion structure");
  return vr;
}

GammaResult recover_gamma_rp(const AutocovSequence& seq,
                             const EigStructure& es, const MatrixXd& R,
                             const MatrixXd& beta,
                             const RetrievalOptions& opts) {
  const ModelDims& d = seq.dims;
  d.validate();
  const int m = d.m(), nt = d.ntilde(), n = d.n, nf = d.n_f, r = d.r,
            N = d.N, p = d.p, H = seq.H;
  if (static_cast<int>(seq.g.size()) != H + 1 || H < 1)
    throw Error(ErrorCode::InvalidArgument, "autocovariance window malformed");
  if (seq.g[0].rows() != nt || seq.g[0].cols() != nt)
    throw Error(ErrorCode::InvalidArgument, "autocovariance shape mismatch");
  if (R.rows() != m || R.cols() != m)
    throw Error(ErrorCode::InvalidArgument, "state dimension mismatch");

  const BlockingMatrix bm = blocking_matrix(d, beta);
  const MatrixXd T = bm.c * R;
  Eigen::FullPivLU<MatrixXd> tlu(T);
  if (!tlu.isInvertible())
    throw Error(ErrorCode::SingularR, "basis change is singular");
  const MatrixXd Ac = T * es.Ac * tlu.inverse();
  const MatrixXd sel = selector(d);

  const MatrixXd SA = power_sum(Ac, N);
  Eigen::FullPivLU<MatrixXd> salu(SA);
  if (!salu.isInvertible())
    throw Error(ErrorCode::SingularSum,
                "window sum of transition powers is singular");
  const MatrixXd SAinv = salu.inverse();
  const MatrixXd AcN = matrix_power(Ac, N);

  // Regressor stacks. Each stored lag contributes sel * Ac^{Nh} acting on
  // the unknown column blocks; the shifted fast columns contribute extra
  // equations for the fast columns of the window block.
  const bool flow = d.scheme == Scheme::Flow;
  MatrixXd Obase((H + 1) * nt, m);
  MatrixXd Oextra((H + 1) * (N - 1) * nt, m);
  MatrixXd B1((H + 1) * nt, r);
  MatrixXd Bmid((H + 1) * nt, n);
  MatrixXd Bfast((H + 1) * (N - 1) * nt, nf);
  MatrixXd M = sel;
  for (int h = 0; h <= H; ++h) {
    Obase.middleRows(h * nt, nt) = M;
    B1.middleRows(h * nt, nt) = seq.at(h).leftCols(r);
    Bmid.middleRows(h * nt, nt) = seq.at(h).middleCols(r, n);
    MatrixXd Mk = M;
    for (int k = 1; k <= N - 1; ++k) {
      Mk = Mk * Ac;
      const int row0 = (h * (N - 1) + (k - 1)) * nt;
      Oextra.middleRows(row0, nt) = flow ? MatrixXd(Mk * SAinv) : Mk;
      Bfast.middleRows(row0, nt) =
          seq.at(h).middleCols(r + n + (k - 1) * nf, nf);
    }
    M = M * AcN;
  }

  Eigen::JacobiSVD<MatrixXd> svd(Obase,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd sv = svd.singularValues();
  GammaResult gr;
  gr.obs_cond = sv(0) / sv(m - 1);
  if (sv(m - 1) < opts.tol_rank * sv(0))
    throw Error(ErrorCode::ObsRankDeficient,
                "stacked autocovariance regressor lost rank");

  const MatrixXd X1 = svd.solve(B1);
  MatrixXd X2(m, n);
  // slow columns only appear in the window block itself
  X2.rightCols(n - nf) = svd.solve(Bmid.rightCols(n - nf));
  // fast columns also appear in the shifted blocks
  MatrixXd Ofull(Obase.rows() + Oextra.rows(), m);
  Ofull << Obase, Oextra;
  MatrixXd Bf(Ofull.rows(), nf);
  Bf << Bmid.leftCols(nf), Bfast;
  Eigen::JacobiSVD<MatrixXd> svdf(Ofull,
                                  Eigen::ComputeThinU | Eigen::ComputeThinV);
  X2.leftCols(nf) = svdf.solve(Bf);

  // assemble the blocked-coordinate covariance column by column block:
  // levels, window block, shifted windows, then the plain lag tail
  MatrixXd Gc(m, m);
  Gc.leftCols(r) = X1;
  Gc.middleCols(r, n) = X2;
  MatrixXd blk = flow ? MatrixXd(SAinv * X2) : X2;
  for (int k = 1; k <= N - 1; ++k) {
    blk = Ac * blk;
    Gc.middleCols(r + k * n, n) = blk;
  }
  blk = Ac * SAinv * blk;
  for (int h = 0; h <= p - 2 - N; ++h) {
    Gc.middleCols(r + (N + h) * n, n) = blk;
    if (h < p - 2 - N) blk = Ac * blk;
  }

  // back to model coordinates; symmetry is the cross-check on the chains
  Eigen::PartialPivLU<MatrixXd> clu(bm.c);
  const MatrixXd half = clu.solve(Gc);
  const MatrixXd G = clu.solve(half.transpose()).transpose();
  gr.asymmetry = max_abs(G - G.transpose()) / (1.0 + max_abs(G));
  if (gr.asymmetry > opts.tol_asymmetry)
    throw Error(ErrorCode::AsymmetryTooLarge,
                "recovered state covariance is not symmetric");
  gr.gamma_rp = 0.5 * (G + G.transpose());
  return gr;
}

MatrixXd recover_sigma(const VecmParams& theta, const MatrixXd& gamma_rp) {
  const ModelDims& d = theta.dims;
  d.validate_basic();
  const int m = d.m(), n = d.n, r = d.r, p = d.p;
  if (theta.alpha.rows() != n || theta.alpha.cols() != r ||
      theta.beta.rows() != n || theta.beta.cols() != r ||
      static_cast<int>(theta.phi.size()) != p - 1)
    throw Error(ErrorCode::InvalidArgument, "coefficient shape mismatch");
  if (gamma_rp.rows() != m || gamma_rp.cols() != m)
    throw Error(ErrorCode::InvalidArgument, "state covariance shape mismatch");

  // transition assembled from the coefficients, exact shift rows
  MatrixXd A = MatrixXd::Zero(m, m);
  const MatrixXd bt = theta.beta.transpose();
  A.topLeftCorner(r, r) = MatrixXd::Identity(r, r) + bt * theta.alpha;
  A.block(r, 0, n, r) = theta.alpha;
  for (int j = 1; j <= p - 1; ++j) {
    A.block(0, r + (j - 1) * n, r, n) = bt * theta.phi[j - 1];
    A.block(r, r + (j - 1) * n, n, n) = theta.phi[j - 1];
  }
  for (int j = 2; j <= p - 1; ++j)
    A.block(r + (j - 1) * n, r + (j - 2) * n, n, n).setIdentity();

  // lag-zero Yule-Walker: subtract what the regressors explain of the
  // current difference
  const MatrixXd AG = A * gamma_rp;
  MatrixXd S = gamma_rp.block(r, r, n, n) -
               theta.alpha * AG.block(r, 0, n, r).transpose();
  for (int j = 1; j <= p - 1; ++j)
    S -= theta.phi[j - 1] * AG.block(r, r + (j - 1) * n, n, n).transpose();
  S = 0.5 * (S + S.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<MatrixXd> se(S, Eigen::EigenvaluesOnly);
  if (se.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorCode::NonPDSigma,
                "recovered innovation covariance is not positive definite");
  return S;
}

RetrievalResult retrieve(const AutocovSequence& seq, const MatrixXd& beta,
                         const RetrievalOptions& opts) {
  const ModelDims& d = seq.dims;
  d.validate();
  const int m = d.m(), nt = d.ntilde();
  if (static_cast<int>(seq.g.size()) != seq.H + 1 || seq.H < 2)
    throw Error(ErrorCode::InvalidArgument, "autocovariance window malformed");
  const int K = (seq.H + 1) / 2;
  if (std::min(K, seq.H - K) * nt <= m)
    throw Error(ErrorCode::InvalidArgument,
                "lag window too short for the state dimension");

  using clock = std::chrono::steady_clock;
  const auto ms_since = [](clock::time_point t) {
    return std::chrono::duration<double, std::milli>(clock::now() - t)
        .count();
  };

  RetrievalResult out;
  auto t = clock::now();
  const HankelRealization hr = hankel_realization(seq, m, opts.tol_rank);
  // The recovery steps below read only the transition and observation maps
  // of the realization. Estimated sequences need not admit a positive-real
  // completion, so a failed innovations solve is recorded, not fatal; the
  // balanced realization itself carries the rest of the pipeline.
  InnovationsForm f;
  try {
    f = innovation_from_hankel(hr);
    out.diagnostics["riccati_feasible"] = 1.0;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RiccatiDivergence &&
        e.code() != ErrorCode::NonPDInnovation &&
        e.code() != ErrorCode::Unstable)
      throw;
    f.A = hr.Abar;
    f.C = hr.Cbar;
    f.K = MatrixXd::Zero(m, nt);
    f.Sigma = 0.5 * (hr.gamma0 + hr.gamma0.transpose());
    out.diagnostics["riccati_feasible"] = 0.0;
  }
  out.diagnostics["ms_realization"] = ms_since(t);
  out.diagnostics["hankel_shift_residual"] = hr.shift_residual;
  out.diagnostics["hankel_tail_ratio"] =
      hr.svals.size() > m ? hr.svals(m) / hr.svals(0) : 0.0;

  t = clock::now();
  out.eig = recover_eigstructure(f, d, opts);
  out.diagnostics["ms_eig"] = ms_since(t);
  out.diagnostics["eig_realness"] = out.eig.realness;
  out.diagnostics["eig_min_gap"] = out.eig.min_gap;

  t = clock::now();
  const TRResult tr = recover_T_R(f, out.eig, beta, d, opts);
  out.diagnostics["ms_basis"] = ms_since(t);
  out.diagnostics["tr_consistency"] = tr.consistency;

  t = clock::now();
  const VarResult vr = recover_var(tr.R, out.eig, beta, d, opts);
  out.diagnostics["ms_var"] = ms_since(t);
  out.diagnostics["structure_residual"] = vr.structure_residual;

  t = clock::now();
  const GammaResult gr = recover_gamma_rp(seq, out.eig, tr.R, beta, opts);
  out.diagnostics["ms_gamma"] = ms_since(t);
  out.diagnostics["gamma_asymmetry"] = gr.asymmetry;
  out.diagnostics["obs_cond"] = gr.obs_cond;
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> ge(gr.gamma_rp,
                                               Eigen::EigenvaluesOnly);
    out.diagnostics["gamma_min_eig"] = ge.eigenvalues().minCoeff();
  }

  out.theta = vr.theta;
  out.gamma_rp = gr.gamma_rp;
  t = clock::now();
  out.theta.sigma = recover_sigma(out.theta, out.gamma_rp);
  out.diagnostics["ms_sigma"] = ms_since(t);
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> se(out.theta.sigma,
                                               Eigen::EigenvaluesOnly);
    out.diagnostics["sigma_min_eig"] = se.eigenvalues().minCoeff();
  }
  out.theta.validate_shapes();

  out.c_report = check_c(out.theta);
  out.i_report = check_i(out.theta);
  return out;
}

}  // namespace mfvar
