#pragma once

#include "mfvar/statespace.hpp"
#include "mfvar/types.hpp"

#include <vector>

namespace mfvar {

struct BlockingMatrix {
  MatrixXd c;  // m x m invertible change of basis on the differenced state
  Scheme scheme = Scheme::Stock;
};

// Basis change from the differenced state to blocked coordinates: the first
// ntilde of the new coordinates are exactly the components the mixed
// observation scheme delivers every N-th period. Throws LagOrderTooSmall
// when p cannot hold the N-window stack, SingularC when the assembled
// matrix is not invertible.
BlockingMatrix blocking_matrix(const ModelDims& dims, const MatrixXd& beta);

// The ntilde rows of c that the blocked observation vector selects.
MatrixXd selection_rows(const ModelDims& dims, const MatrixXd& c);

struct BlockedSystem {
  MatrixXd A_bc;     // m x m transition of the blocked state, c-coordinates
  MatrixXd B_bc;     // m x nN loading of the stacked within-block shocks
  MatrixXd C_bc;     // ntilde x m observation matrix
  MatrixXd D_b;      // ntilde x nN direct shock loading
  MatrixXd Sigma_b;  // nN x nN shock covariance, I_N (x) Sigma
  MatrixXd S_zeta;   // ntilde x m selection on the differenced state
  MatrixXd c;        // blocking matrix
};

// State-space system for the blocked observations sampled every N periods.
BlockedSystem blocked_system(const VecmParams& theta,
                             const Tolerances& tol = {});

struct AutocovSequence {
  ModelDims dims;
  int H = 0;
  std::vector<MatrixXd> g;  // g[h] = autocovariance at lag h*N

  const MatrixXd& at(int h) const {
    if (h < 0 || h > H)
      throw Error(ErrorCode::InvalidArgument, "lag outside stored range");
    return g[h];
  }
};

// Population autocovariance of the blocked observation vector at lags
// 0, N, ..., HN. H defaults to 2m + 2, the window the realization step
// needs.
AutocovSequence blocked_autocov(const VecmParams& theta, int H = -1,
                                const Tolerances& tol = {});

}  // namespace mfvar
