#pragma once

#include "mfvar/blocking.hpp"
#include "mfvar/realization.hpp"

#include <map>
#include <string>

namespace mfvar {

struct RetrievalOptions {
  double tol_rank = 1e-12;        // singular-value cutoff for rank decisions
  double tol_unit = 1e-6;         // |mu - 1| treated as an aggregated unit root
  double tol_real = 1e-6;         // imaginary residue allowed when realifying
  double tol_consistency = 1e-7;  // selector-row residual of the basis change
  double tol_structure = 1e-6;    // companion-structure residual of the VAR
  double tol_asymmetry = 1e-6;    // symmetry residual of the state covariance
};

// Eigenvalues of the blocked transition are N-th powers of the
// high-frequency ones. This carries the decomposition plus the de-aliased
// roots and the high-frequency transition they define in the same basis.
struct EigStructure {
  VectorXcd lambda_N;     // eigenvalues of the blocked transition
  VectorXcd lambda;       // N-th roots selected by the fast-block ratios
  MatrixXcd W;            // eigenvectors, columns aligned with lambda_N
  MatrixXd Ac;            // real part of W diag(lambda) W^{-1}
  double realness = 0.0;  // relative imaginary residue dropped from Ac
  double min_gap = 0.0;   // smallest pairwise |lambda_N(i) - lambda_N(j)|
};

// De-alias the blocked eigenvalues. For each eigenvector the shifted fast
// observation rows are one high-frequency step apart, so their ratio picks
// the correct N-th root. Throws ZeroDenominator when an eigenvector does
// not load on the fast rows (the ratio is then undefined) and
// NonRealResult when the recovered transition has a material imaginary
// part.
EigStructure recover_eigstructure(const InnovationsForm& f,
                                  const ModelDims& dims,
                                  const RetrievalOptions& opts = {});

struct TRResult {
  MatrixXd R;  // m x m: model-state rows over realization-state columns
  MatrixXd T;  // c * R, the same map expressed in blocked coordinates
  double consistency = 0.0;  // residual of the redundant selector rows
};

// Recover the change of basis between the realization state and the
// differenced model state. The selector rows of C Abar^{-1} pin down the
// level and window rows of T; the remaining rows follow from the window
// sums and the lag-shift recursion. Throws SingularSum when the window sum
// of inverse transition powers is singular and ConsistencyFail when the
// redundant selector rows disagree with the recovered map.
TRResult recover_T_R(const InnovationsForm& f, const EigStructure& es,
                     const MatrixXd& beta, const ModelDims& dims,
                     const RetrievalOptions& opts = {});

struct VarResult {
  VecmParams theta;  // alpha and phi filled in, sigma left for later
  MatrixXd A;        // recovered high-frequency transition, model basis
  double structure_residual = 0.0;
};

// Read the error-correction coefficients off the recovered transition
// R Ac R^{-1} and verify the rows the companion structure pins down.
VarResult recover_var(const MatrixXd& R, const EigStructure& es,
                      const MatrixXd& beta, const ModelDims& dims,
                      const RetrievalOptions& opts = {});

struct GammaResult {
  MatrixXd gamma_rp;     // m x m stationary state covariance, symmetrized
  double asymmetry = 0.0;
  double obs_cond = 0.0;  // condition number of the stacked regressor
};

// Stationary covariance of the differenced state from the blocked
// autocovariances: least squares for the level and window column blocks,
// then the lag-shift chains fill the rest. Throws ObsRankDeficient when
// the stacked regressor loses rank and AsymmetryTooLarge when the
// reassembled covariance is visibly non-symmetric.
GammaResult recover_gamma_rp(const AutocovSequence& seq,
                             const EigStructure& es, const MatrixXd& R,
                             const MatrixXd& beta,
                             const RetrievalOptions& opts = {});

// Innovation covariance by the lag-zero Yule-Walker identity applied to
// the recovered coefficients and state covariance. Throws NonPDSigma when
// the result is not positive definite.
MatrixXd recover_sigma(const VecmParams& theta, const MatrixXd& gamma_rp);

struct RetrievalResult {
  VecmParams theta;
  MatrixXd gamma_rp;
  EigStructure eig;
  AssumptionReport c_report;
  AssumptionReport i_report;
  std::map<std::string, double> diagnostics;
};

// Full pipeline from blocked autocovariances and a known cointegration
// basis back to the VECM parameters. The assumption reports on the
// recovered point are attached, not enforced; diagnostics carry the
// residuals and condition numbers of the individual steps.
RetrievalResult retrieve(const AutocovSequence& seq, const MatrixXd& beta,
                         const RetrievalOptions& opts = {});

}  // namespace mfvar
