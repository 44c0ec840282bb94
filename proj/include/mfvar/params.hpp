#pragma once

#include "mfvar/types.hpp"

#include <cstdint>
#include <utility>

namespace mfvar {

// Factor an n x n matrix of rank r into pi = alpha * beta' with beta in
// echelon form (top r x r block exactly I_r). Throws RankMismatch when the
// numerical rank of pi is not r, EchelonSingular when the leading r x r
// block of the right factor cannot serve as a pivot block.
std::pair<MatrixXd, MatrixXd> factor_pi(const MatrixXd& pi, int r,
                                        double tol_rank = 1e-8);

// Level-VAR coefficients from the error-correction form and back.
VarParams vecm_to_var(const VecmParams& theta);
VecmParams var_to_vecm(const VarParams& var, int r, double tol_rank = 1e-8);

enum class ComplementKind { Alpha, Beta };

// Basis of the orthogonal complement of the column space of M (n x k),
// returned as n x (n-k). Beta kind expects echelon form and produces the
// closed-form complement; alpha kind projects the canonical complement
// through I - M(M'M)^{-1}M'. k = 0 returns the identity.
MatrixXd orth_complement(const MatrixXd& M, ComplementKind kind);

// Model-class conditions C1..C4 (cointegrated unit-root structure) and
// identifiability conditions I1..I6. Report-valued: these never throw on a
// failed condition, only on malformed inputs.
AssumptionReport check_c(const VecmParams& theta, const Tolerances& tol = {});
AssumptionReport check_i(const VecmParams& theta, const Tolerances& tol = {});

struct PerturbConfig {
  double eps = 1e-3;
  std::uint64_t seed = 0;
  int max_attempts = 100;
};

// Move theta0 to a nearby parameter point that satisfies every C and I
// condition, by resampling small shifts of the stable eigenvalues of the
// companion matrix. Unit eigenvalues are never touched. Throws
// BudgetExhausted / NonDiagonalizable when no acceptable draw is found.
VecmParams perturb_to_generic(const VecmParams& theta0,
                              const PerturbConfig& cfg = {});

// Draw a random parameter point satisfying all C and I conditions, with the
// stable companion eigenvalues inside the given modulus band. Deterministic
// in (dims, seed).
VecmParams random_system(const ModelDims& dims, std::uint64_t seed,
                         double band_lo = 0.3, double band_hi = 0.9);

}  // namespace mfvar
