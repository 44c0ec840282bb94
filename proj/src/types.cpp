#include "mfvar/types.hpp"

namespace mfvar {

const char* to_string(Scheme s) {
  return s == Scheme::Stock ? "stock" : "flow";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "stock") return Scheme::Stock;
  if (s == "flow") return Scheme::Flow;
  throw Error(ErrorCode::InvalidArgument, "unknown scheme '" + s + "'");
}

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::EchelonSingular: return "EchelonSingular";
    case ErrorCode::InconsistentTelescope: return "InconsistentTelescope";
    case ErrorCode::SingularPivot: return "SingularPivot";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::NonDiagonalizable: return "NonDiagonalizable";
    case ErrorCode::UnstableDiffSystem: return "UnstableDiffSystem";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::LagOrderTooSmall: return "LagOrderTooSmall";
    case ErrorCode::SingularC: return "SingularC";
    case ErrorCode::RiccatiDivergence: return "RiccatiDivergence";
    case ErrorCode::NonPDInnovation: return "NonPDInnovation";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::NonRealResult: return "NonRealResult";
    case ErrorCode::SingularSum: return "SingularSum";
    case ErrorCode::ConsistencyFail: return "ConsistencyFail";
    case ErrorCode::SingularR: return "SingularR";
    case ErrorCode::StructureResidualTooLarge: return "StructureResidualTooLarge";
    case ErrorCode::ObsRankDeficient: return "ObsRankDeficient";
    case ErrorCode::AsymmetryTooLarge: return "AsymmetryTooLarge";
    case ErrorCode::NonPDSigma: return "NonPDSigma";
    case ErrorCode::C2Violated: return "C2Violated";
    case ErrorCode::SingularSteadyState: return "SingularSteadyState";
    case ErrorCode::CaseMismatch: return "CaseMismatch";
    case ErrorCode::SingularMmu: return "SingularMmu";
    case ErrorCode::InsufficientSample: return "InsufficientSample";
  }
  return "UnknownError";
}

void ModelDims::validate_basic() const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (n_f < 1 || n_f > n)
    throw Error(ErrorCode::InvalidArgument, "need 1 <= n_f <= n");
  if (r < 0 || r >= n)
    throw Error(ErrorCode::InvalidArgument, "need 0 <= r < n");
  if (p < 2) throw Error(ErrorCode::InvalidArgument, "p must be >= 2");
  if (N < 2) throw Error(ErrorCode::InvalidArgument, "N must be >= 2");
}

void ModelDims::validate() const {
  validate_basic();
  if (scheme == Scheme::Stock && p < N + 2)
    throw Error(ErrorCode::InvalidArgument,
                "stock aggregation needs p >= N + 2");
  if (scheme == Scheme::Flow && p < 2 * N + 1)
    throw Error(ErrorCode::InvalidArgument,
                "flow aggregation needs p >= 2N + 1");
}

MatrixXd VecmParams::pi() const {
  if (dims.r == 0) return MatrixXd::Zero(dims.n, dims.n);
  return alpha * beta.transpose();
}

void VecmParams::validate_shapes() const {
  const int n = dims.n, r = dims.r, p = dims.p;
  if (alpha.rows() != n || alpha.cols() != r)
    throw Error(ErrorCode::InvalidArgument, "alpha must be n x r");
  if (beta.rows() != n || beta.cols() != r)
    throw Error(ErrorCode::InvalidArgument, "beta must be n x r");
  if ((int)phi.size() != p - 1)
    throw Error(ErrorCode::InvalidArgument, "need p-1 phi matrices");
  for (const auto& f : phi)
    if (f.rows() != n || f.cols() != n)
      throw Error(ErrorCode::InvalidArgument, "phi matrices must be n x n");
  if (sigma.rows() != n || sigma.cols() != n)
    throw Error(ErrorCode::InvalidArgument, "sigma must be n x n");
  if (r > 0) {
    // beta is kept in echelon form: identity on top.
    MatrixXd top = beta.topRows(r);
    if ((top - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-9)
      throw Error(ErrorCode::InvalidArgument,
                  "beta must carry I_r as its top block");
  }
  if (mu0 && mu0->size() != n)
    throw Error(ErrorCode::InvalidArgument, "mu0 must have length n");
  if (mu1 && mu1->size() != n)
    throw Error(ErrorCode::InvalidArgument, "mu1 must have length n");
}

bool AssumptionReport::all_pass() const {
  for (const auto& it : items)
    if (!it.pass) return false;
  return true;
}

const CheckItem* AssumptionReport::find(const std::string& name) const {
  for (const auto& it : items)
    if (it.name == name) return &it;
  return nullptr;
}

double max_abs(const MatrixXd& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace mfvar
