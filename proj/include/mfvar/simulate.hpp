#pragma once

#include "mfvar/blocking.hpp"
#include "mfvar/deterministic.hpp"
#include "mfvar/retrieval.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mfvar {

enum class NoiseKind { Gaussian };

struct SimConfig {
  int T = 0;           // retained high-frequency length
  int burn_in = 1000;  // leading steps simulated and discarded
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::Gaussian;
  DeterministicSpec deterministic;  // declared case plus its parameters
};

// Mixed-frequency view of a path: every fast coordinate at every t, the
// slow coordinates only at t = N, 2N, ... (stock: the level at that date,
// flow: the sum over the preceding N dates). A trailing window that does
// not complete is dropped.
struct MixedSample {
  ModelDims dims;
  MatrixXd fast;                // n_f x T
  MatrixXd slow;                // n_s x floor(T/N)
  std::vector<int> timestamps;  // slow observation dates N, 2N, ...
};

// Simulate y_1..T (one column per date). The stationary coordinates
// (beta'y, dy stack) start from an exact draw of their stationary law, the
// nonstationary level part starts at zero, and the deterministic component
// implied by cfg.deterministic is added analytically, so the recursion
// holds exactly from the first retained column. burn_in stays as a
// defensive default; with the exact initialization it is not load-bearing.
MatrixXd simulate_path(const VecmParams& theta, const SimConfig& cfg);

// Apply the observation scheme. Pure subsampling/aggregation; the latent
// slow path is not retained in the sample.
MixedSample observe_mixed(const MatrixXd& path, const ModelDims& dims);

// Sample autocovariances of the blocked observation vector, lags 0..H at
// the slow clock, biased normalization (divide by the sample count). The
// blocked coordinates are built from observable quantities only. The
// declared deterministic case decides the trend treatment: H2 leaves the
// data untouched but guards against a visible mean (CaseMismatch), H1 and
// H1star subtract sample means, H and Hstar subtract least-squares lines.
// Throws InsufficientSample when floor(T/N) <= H + p.
AutocovSequence sample_blocked_autocov(const MixedSample& ms,
                                       const MatrixXd& beta,
                                       const ModelDims& dims, int H,
                                       DetCase det_case = DetCase::H2);

// Least-squares intercepts and slopes of the blocked level and difference
// coordinates, mapped back to the per-date trend moments (the g/h of the
// deterministic module). Input for case recovery on sampled data.
TrendMoments estimate_trend_moments(const MixedSample& ms,
                                    const MatrixXd& beta,
                                    const ModelDims& dims);

struct McConfig {
  std::vector<int> Ts;  // high-frequency sample sizes
  int reps = 20;
  std::uint64_t seed = 0;
  int burn_in = 1000;
  int H = -1;  // blocked lags fed to retrieval; -1 means 2m + 2
  DeterministicSpec deterministic;
  RetrievalOptions retrieval = mc_retrieval_options();

  // Gates sized for sampled moments instead of exact ones; the residual
  // checks stay active so structurally broken inputs are still detected.
  static RetrievalOptions mc_retrieval_options();
};

struct McRow {
  int T = 0;
  int rep = 0;
  double err_alpha = 0.0;
  double err_phi = 0.0;
  double err_sigma = 0.0;
  std::string status;  // "ok" or the error-code name of the failed step
};

struct McReport {
  ModelDims dims;
  std::vector<McRow> rows;

  std::string csv() const;
  // Median / interquartile range of max(err_alpha, err_phi, err_sigma)
  // over the successful replications at sample size T. NaN when none.
  double median_err(int T) const;
  double iqr_err(int T) const;
};

// simulate -> observe -> sample_blocked_autocov -> retrieve per
// replication; failures are recorded in the row status, never rethrown.
// Replication streams are derived from (seed, replication index), so the
// report is byte-identical for a fixed config.
McReport monte_carlo(const VecmParams& theta, const McConfig& cfg);

}  // namespace mfvar
