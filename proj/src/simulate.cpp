#include "mfvar/simulate.hpp"

#include "mfvar/rng.hpp"
#include "mfvar/statespace.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

namespace mfvar {

namespace {

// Effective per-date intercept and trend slope implied by the declared
// case. Restricted cases compress through alpha; parameters that the case
// does not admit must be absent.
std::pair<VectorXd, VectorXd> effective_mu(const DeterministicSpec& det,
                                           const VecmParams& theta) {
  const int n = theta.dims.n, r = theta.dims.r;
  auto need = [&](const std::optional<VectorXd>& v, int len,
                  const char* what) -> const VectorXd& {
    if (!v || v->size() != len)
      throw Error(ErrorCode::InvalidArgument,
                  std::string("case ") + to_string(det.det_case) +
                      " needs " + what);
    return *v;
  };
  auto absent = [&](const std::optional<VectorXd>& v, const char* what) {
    if (v)
      throw Error(ErrorCode::InvalidArgument,
                  std::string("case ") + to_string(det.det_case) +
                      " does not take " + what);
  };
  VectorXd mu0 = VectorXd::Zero(n), mu1 = VectorXd::Zero(n);
  switch (det.det_case) {
    case DetCase::H2:
      absent(det.mu0, "mu0");
      absent(det.mu1, "mu1");
      absent(det.rho0, "rho0");
      absent(det.rho1, "rho1");
      break;
    case DetCase::H1:
      mu0 = need(det.mu0, n, "mu0");
      absent(det.mu1, "mu1");
      absent(det.rho0, "rho0");
      absent(det.rho1, "rho1");
      break;
    case DetCase::H1star:
      mu0 = theta.alpha * need(det.rho0, r, "rho0");
      absent(det.mu0, "mu0");
      absent(det.mu1, "mu1");
      absent(det.rho1, "rho1");
      break;
    case DetCase::H:
      mu0 = need(det.mu0, n, "mu0");
      mu1 = need(det.mu1, n, "mu1");
      absent(det.rho0, "rho0");
      absent(det.rho1, "rho1");
      break;
    case DetCase::Hstar:
      mu0 = need(det.mu0, n, "mu0");
      mu1 = theta.alpha * need(det.rho1, r, "rho1");
      absent(det.mu1, "mu1");
      absent(det.rho0, "rho0");
      break;
  }
  return {mu0, mu1};
}

// Lower-triangular-ish square root; falls back to an eigenvalue factor when
// the matrix is only semidefinite.
MatrixXd psd_factor(const MatrixXd& S) {
  if (S.rows() == 0) return S;
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

// Blocked observation vectors assembled from observables only, columns
// tau = 2..floor(T/N) on the slow clock. tau = 1 lacks the previous slow
// observation that every N-difference needs.
constexpr int kTau0 = 2;

MatrixXd build_blocked(const MixedSample& ms, const MatrixXd& beta,
                       const ModelDims& dims) {
  dims.validate();
  const int n = dims.n, nf = dims.n_f, ns = dims.n_s(), r = dims.r;
  const int N = dims.N;
  if (ms.fast.rows() != nf || ms.slow.rows() != ns)
    throw Error(ErrorCode::InvalidArgument,
                "mixed sample does not match dims");
  if (r > 0 && (beta.rows() != n || beta.cols() != r))
    throw Error(ErrorCode::InvalidArgument, "beta must be n x r");
  const int K = (int)ms.slow.cols();
  if ((int)ms.fast.cols() < K * N || (int)ms.timestamps.size() != K)
    throw Error(ErrorCode::InvalidArgument,
                "slow length inconsistent with the fast length and N");
  if (K < kTau0)
    throw Error(ErrorCode::InsufficientSample,
                "need at least two slow observations");

  const MatrixXd beta_f = r > 0 ? MatrixXd(beta.topRows(nf)) : MatrixXd(nf, 0);
  const MatrixXd beta_s = r > 0 ? MatrixXd(beta.bottomRows(ns)) : MatrixXd(ns, 0);

  MatrixXd z(dims.ntilde(), K - kTau0 + 1);
  VectorXd yf(nf), yfp(nf);
  for (int tau = kTau0; tau <= K; ++tau) {
    const int col = tau - kTau0;
    const int t = tau * N;  // observation date, 1-based
    if (dims.scheme == Scheme::Stock) {
      yf = ms.fast.col(t - 1);
      yfp = ms.fast.col(t - N - 1);
    } else {
      yf.setZero();
      yfp.setZero();
      for (int j = 0; j < N; ++j) {
        yf += ms.fast.col(t - j - 1);
        yfp += ms.fast.col(t - N - j - 1);
      }
    }
    // stock: the slow level itself; flow: the observed aggregate
    const auto ys = ms.slow.col(tau - 1);
    const auto ysp = ms.slow.col(tau - 2);
    if (r > 0)
      z.block(0, col, r, 1) =
          beta_f.transpose() * yf + beta_s.transpose() * ys;
    z.block(r, col, nf, 1) = yf - yfp;
    z.block(r + nf, col, ns, 1) = ys - ysp;
    int row = r + n;
    for (int k = 1; k <= N - 1; ++k, row += nf)
      z.block(row, col, nf, 1) =
          ms.fast.col(t - k - 1) - ms.fast.col(t - N - k - 1);
  }
  return z;
}

// Least-squares line a + b*tau per row, tau absolute on the slow clock.
void fit_lines(const MatrixXd& z, VectorXd* a, VectorXd* b) {
  const int cnt = (int)z.cols();
  VectorXd taus(cnt);
  for (int i = 0; i < cnt; ++i) taus(i) = kTau0 + i;
  const double tbar = taus.mean();
  const VectorXd tc = taus.array() - tbar;
  const double sxx = tc.squaredNorm();
  VectorXd mean = z.rowwise().mean();
  *b = (z * tc) / sxx;
  *a = mean - tbar * (*b);
}

}  // namespace

MatrixXd simulate_path(const VecmParams& theta, const SimConfig& cfg) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  if (cfg.T < 1 || cfg.burn_in < 0 || cfg.T <= cfg.burn_in)
    throw Error(ErrorCode::InvalidArgument, "need T > burn_in >= 0");
  const ModelDims& d = theta.dims;
  const int n = d.n, r = d.r, p = d.p, m = d.m();
  auto [mu0, mu1] = effective_mu(cfg.deterministic, theta);

  DiffStateSpace ss = diff_state_space(theta);
  MatrixXd gamma_rp =
      solve_lyapunov(ss.A, ss.B * theta.sigma * ss.B.transpose());

  Rng rng(cfg.seed);
  auto draw = [&rng](int k) {
    VectorXd v(k);
    for (int i = 0; i < k; ++i) v(i) = rng.normal();
    return v;
  };

  // exact stationary draw of (beta'y_1, dy_1, ..., dy_{3-p})
  const VectorXd x = psd_factor(gamma_rp) * draw(m);
  VectorXd y = VectorXd::Zero(n);
  if (r > 0) {
    MatrixXd btb = theta.beta.transpose() * theta.beta;
    y = theta.beta * btb.llt().solve(x.head(r).eval());
  }
  VectorXd u = r > 0 ? VectorXd(theta.beta.transpose() * y) : VectorXd(0);
  MatrixXd lags(n, std::max(p - 1, 0));  // col j holds dy_{t-1-j}
  for (int j = 0; j < p - 1; ++j) lags.col(j) = x.segment(r + j * n, n);

  const MatrixXd noise_l = psd_factor(theta.sigma);
  const int total = cfg.burn_in + cfg.T;
  MatrixXd path(n, cfg.T);
  if (cfg.burn_in == 0) path.col(0) = y;

  VectorXd dy(n);
  for (int t = 2; t <= total; ++t) {
    dy = noise_l * draw(n);
    if (r > 0) dy += theta.alpha * u;
    for (int j = 0; j < p - 1; ++j) dy += theta.phi[j] * lags.col(j);
    y += dy;
    if (r > 0) u = theta.beta.transpose() * y;
    for (int j = p - 2; j >= 1; --j) lags.col(j) = lags.col(j - 1);
    if (p >= 2) lags.col(0) = dy;
    if (t > cfg.burn_in) path.col(t - cfg.burn_in - 1) = y;
  }

  // Deterministic component, added analytically so the recursion holds
  // exactly from the first retained date: dm_t = g0 + g1 t and
  // beta'm_{t-1} = h0 + h1 t with t the retained index.
  if (max_abs(mu0) > 0.0 || max_abs(mu1) > 0.0) {
    TrendMoments tm = trend_moments(theta, mu0, mu1);
    VectorXd mt = VectorXd::Zero(n);
    if (r > 0) {
      MatrixXd btb = theta.beta.transpose() * theta.beta;
      mt = theta.beta * btb.llt().solve((tm.h0 + tm.h1).eval());
    }
    for (int t = 1; t <= cfg.T; ++t) {
      mt += tm.g0 + (double)t * tm.g1;
      path.col(t - 1) += mt;
    }
  }
  return path;
}

MixedSample observe_mixed(const MatrixXd& path, const ModelDims& dims) {
  dims.validate_basic();
  if (path.rows() != dims.n)
    throw Error(ErrorCode::InvalidArgument, "path must have n rows");
  const int T = (int)path.cols(), N = dims.N;
  const int nf = dims.n_f, ns = dims.n_s();
  if (T < N)
    throw Error(ErrorCode::InvalidArgument,
                "path shorter than one slow period");

  MixedSample ms;
  ms.dims = dims;
  ms.fast = path.topRows(nf);
  const int K = T / N;  // trailing partial window dropped
  ms.slow.resize(ns, K);
  ms.timestamps.resize(K);
  for (int k = 1; k <= K; ++k) {
    ms.timestamps[k - 1] = k * N;
    if (dims.scheme == Scheme::Stock) {
      ms.slow.col(k - 1) = path.block(nf, k * N - 1, ns, 1);
    } else {
      VectorXd w = VectorXd::Zero(ns);
      for (int j = 0; j < N; ++j) w += path.block(nf, k * N - 1 - j, ns, 1);
      ms.slow.col(k - 1) = w;
    }
  }
  return ms;
}

AutocovSequence sample_blocked_autocov(const MixedSample& ms,
                                       const MatrixXd& beta,
                                       const ModelDims& dims, int H,
                                       DetCase det_case) {
  if (H < 0)
    throw Error(ErrorCode::InvalidArgument, "H must be nonnegative");
  if ((int)ms.slow.cols() <= H + dims.p)
    throw Error(ErrorCode::InsufficientSample,
                "floor(T/N) must exceed H + p");
  MatrixXd z = build_blocked(ms, beta, dims);
  const int cnt = (int)z.cols();

  switch (det_case) {
    case DetCase::H2: {
      // No deterministic part declared: the blocked process must be
      // centered. A sample mean far outside its own sampling band means a
      // trend or intercept was left in the data.
      VectorXd mean = z.rowwise().mean();
      VectorXd ssq = (z.colwise() - mean).rowwise().squaredNorm();
      for (int i = 0; i < z.rows(); ++i) {
        double gate = 40.0 * std::sqrt(ssq(i) / cnt / cnt) + 1e-10;
        if (std::abs(mean(i)) > gate)
          throw Error(ErrorCode::CaseMismatch,
                      "blocked sample mean is away from zero; declare the "
                      "deterministic case");
      }
      break;
    }
    case DetCase::H1:
    case DetCase::H1star: {
      VectorXd mean = z.rowwise().mean();
      z.colwise() -= mean;
      break;
    }
    case DetCase::H:
    case DetCase::Hstar: {
      VectorXd a, b;
      fit_lines(z, &a, &b);
      for (int i = 0; i < z.rows(); ++i)
        for (int c = 0; c < cnt; ++c) z(i, c) -= a(i) + b(i) * (kTau0 + c);
      break;
    }
  }

  AutocovSequence seq;
  seq.dims = dims;
  seq.H = H;
  seq.g.resize(H + 1);
  for (int h = 0; h <= H; ++h)
    seq.g[h] = z.rightCols(cnt - h) * z.leftCols(cnt - h).transpose() / cnt;
  return seq;
}

TrendMoments estimate_trend_moments(const MixedSample& ms,
                                    const MatrixXd& beta,
                                    const ModelDims& dims) {
  MatrixXd z = build_blocked(ms, beta, dims);
  if (z.cols() < 8)
    throw Error(ErrorCode::InsufficientSample,
                "too few slow observations for a trend fit");
  const int r = dims.r, n = dims.n, N = dims.N;
  VectorXd a, b;
  fit_lines(z, &a, &b);
  const VectorXd a_u = a.head(r), b_u = b.head(r);
  const VectorXd a_d = a.segment(r, n), b_d = b.segment(r, n);

  // Invert the blocked-coordinate trend lines back to the per-date
  // moments E dy_t = g0 + g1 t, E beta'y_{t-1} = h0 + h1 t.
  TrendMoments tm;
  if (dims.scheme == Scheme::Stock) {
    tm.h1 = b_u / N;
    tm.h0 = a_u - tm.h1;
    tm.g1 = b_d / (double)(N * N);
    tm.g0 = (a_d + 0.5 * N * (N - 1) * tm.g1) / N;
  } else {
    tm.h1 = b_u / (double)(N * N);
    tm.h0 = (a_u + 0.5 * N * (N - 1) * tm.h1) / N - tm.h1;
    tm.g1 = b_d / (double)(N * N * N);
    tm.g0 = (a_d + (double)(N * N * (N - 1)) * tm.g1) / (double)(N * N);
  }
  return tm;
}

RetrievalOptions McConfig::mc_retrieval_options() {
  RetrievalOptions o;
  // Sampled moments sit O(T^{-1/2}) off the population ones and the basis
  // recovery amplifies that, so the exact-arithmetic gates would reject
  // every honest replication. These are sized from measured residuals at
  // T = 1e4 (honest runs orders of magnitude below, structural breakage
  // orders of magnitude above).
  o.tol_unit = 0.2;
  o.tol_real = 0.5;
  o.tol_consistency = 50.0;
  o.tol_structure = 50.0;
  o.tol_asymmetry = 50.0;
  return o;
}

McReport monte_carlo(const VecmParams& theta, const McConfig& cfg) {
  theta.dims.validate();
  theta.validate_shapes();
  if (cfg.Ts.empty() || cfg.reps < 1)
    throw Error(ErrorCode::InvalidArgument,
                "need at least one sample size and one replication");
  McReport report;
  report.dims = theta.dims;
  const int H = cfg.H < 0 ? 2 * theta.dims.m() + 2 : cfg.H;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t ti = 0; ti < cfg.Ts.size(); ++ti) {
    for (int k = 0; k < cfg.reps; ++k) {
      McRow row;
      row.T = cfg.Ts[ti];
      row.rep = k;
      SimConfig sc;
      sc.T = cfg.Ts[ti];
      sc.burn_in = cfg.burn_in;
      sc.seed = Rng::mix(cfg.seed, ti * (std::size_t)cfg.reps + k);
      sc.deterministic = cfg.deterministic;
      try {
        MatrixXd path = simulate_path(theta, sc);
        MixedSample ms = observe_mixed(path, theta.dims);
        AutocovSequence seq = sample_blocked_autocov(
            ms, theta.beta, theta.dims, H, cfg.deterministic.det_case);
        RetrievalResult res = retrieve(seq, theta.beta, cfg.retrieval);
        row.err_alpha = max_abs(res.theta.alpha - theta.alpha);
        double ep = 0.0;
        for (std::size_t j = 0; j < theta.phi.size(); ++j)
          ep = std::max(ep, max_abs(res.theta.phi[j] - theta.phi[j]));
        row.err_phi = ep;
        row.err_sigma = max_abs(res.theta.sigma - theta.sigma);
        row.status = "ok";
      } catch (const Error& e) {
        row.err_alpha = row.err_phi = row.err_sigma = nan;
        row.status = to_string(e.code());
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string McReport::csv() const {
  std::string out = "scheme,n,r,p,N,T,rep,err_alpha,err_phi,err_sigma,status\n";
  char buf[256];
  for (const McRow& w : rows) {
    if (w.status == "ok") {
      std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%d,%d,%.12g,%.12g,%.12g,ok\n",
                    to_string(dims.scheme), dims.n, dims.r, dims.p, dims.N,
                    w.T, w.rep, w.err_alpha, w.err_phi, w.err_sigma);
    } else {
      std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%d,%d,nan,nan,nan,%s\n",
                    to_string(dims.scheme), dims.n, dims.r, dims.p, dims.N,
                    w.T, w.rep, w.status.c_str());
    }
    out += buf;
  }
  return out;
}

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double pos = q * (double)(v.size() - 1);
  std::size_t lo = (std::size_t)pos;
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double w = pos - (double)lo;
  return v[lo] * (1.0 - w) + v[hi] * w;
}

std::vector<double> ok_errors(const std::vector<McRow>& rows, int T) {
  std::vector<double> e;
  for (const McRow& w : rows)
    if (w.T == T && w.status == "ok")
      e.push_back(std::max({w.err_alpha, w.err_phi, w.err_sigma}));
  std::sort(e.begin(), e.end());
  return e;
}

}  // namespace

double McReport::median_err(int T) const {
  return quantile_sorted(ok_errors(rows, T), 0.5);
}

double McReport::iqr_err(int T) const {
  std::vector<double> e = ok_errors(rows, T);
  return quantile_sorted(e, 0.75) - quantile_sorted(e, 0.25);
}

}  // namespace mfvar
