#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfvar {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Scheme { Stock, Flow };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

// Every failure mode the library can signal. The CLI maps these to exit
// codes: InvalidArgument / IoError are usage problems (exit 1), everything
// else is a model-assumption or numerical-contract violation (exit 2).
enum class ErrorCode {
  InvalidArgument,
  IoError,
  RankMismatch,
  EchelonSingular,
  InconsistentTelescope,
  SingularPivot,
  BudgetExhausted,
  NonDiagonalizable,
  UnstableDiffSystem,
  Unstable,
  LagOrderTooSmall,
  SingularC,
  RiccatiDivergence,
  NonPDInnovation,
  RankDeficient,
  ZeroDenominator,
  NonRealResult,
  SingularSum,
  ConsistencyFail,
  SingularR,
  StructureResidualTooLarge,
  ObsRankDeficient,
  AsymmetryTooLarge,
  NonPDSigma,
  C2Violated,
  SingularSteadyState,
  CaseMismatch,
  SingularMmu,
  InsufficientSample,
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ModelDims {
  int n = 0;    // cross-section size
  int n_f = 0;  // fast variables; by convention the first n_f coordinates
  int r = 0;    // cointegration rank
  int p = 0;    // VAR lag order
  int N = 0;    // slow sampling interval (slow series observed every N steps)
  Scheme scheme = Scheme::Stock;

  int n_s() const { return n - n_f; }
  int m() const { return r + n * (p - 1); }             // differenced state dim
  int ntilde() const { return r + n + (N - 1) * n_f; }  // blocked output dim

  // Shape checks that every operation needs (sizes, rank bounds).
  void validate_basic() const;
  // Full check including the scheme-dependent lag-order bounds that the
  // blocked constructions require: stock p >= N+2, flow p >= 2N+1.
  void validate() const;
};

struct VecmParams {
  ModelDims dims;
  MatrixXd alpha;              // n x r
  MatrixXd beta;               // n x r, top r x r block = I_r (echelon form)
  std::vector<MatrixXd> phi;   // p-1 short-run matrices, each n x n
  MatrixXd sigma;              // n x n innovation covariance, SPD
  std::optional<VectorXd> mu0; // intercept
  std::optional<VectorXd> mu1; // linear-trend coefficient

  MatrixXd pi() const;
  void validate_shapes() const;
};

struct VarParams {
  ModelDims dims;
  std::vector<MatrixXd> a;  // p level-VAR coefficient matrices, each n x n
  MatrixXd sigma;
};

struct Tolerances {
  double rank = 1e-8;  // relative singular-value cutoff for rank decisions
  double unit = 1e-6;  // |lambda - 1| below this counts as a unit root
  double stab = 1e-6;  // stability margin: stable means |lambda| < 1 - stab
};

struct CheckItem {
  std::string name;  // "C1".."C4" or "I1".."I6"
  bool pass = false;
  double margin = 0.0;  // distance from failure; definition depends on check
  std::string note;
};

struct AssumptionReport {
  std::vector<CheckItem> items;
  bool all_pass() const;
  const CheckItem* find(const std::string& name) const;
};

// Max abs entry of a matrix, zero-size safe.
double max_abs(const MatrixXd& M);

}  // namespace mfvar
