#include "mfvar/params.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace mfvar {

std::pair<MatrixXd, MatrixXd> factor_pi(const MatrixXd& pi, int r,
                                        double tol_rank) {
  const int n = (int)pi.rows();
  if (pi.cols() != n) throw Error(ErrorCode::InvalidArgument, "pi not square");
  if (r < 0 || r > n) throw Error(ErrorCode::InvalidArgument, "bad rank r");

  if (r == 0) {
    if (max_abs(pi) > tol_rank)
      throw Error(ErrorCode::RankMismatch, "pi not numerically zero at r=0");
    return {MatrixXd::Zero(n, 0), MatrixXd::Zero(n, 0)};
  }

  Eigen::JacobiSVD<MatrixXd> svd(pi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd sv = svd.singularValues();
  const double s1 = sv(0);
  if (s1 <= 0.0 || sv(r - 1) <= tol_rank * s1)
    throw Error(ErrorCode::RankMismatch, "numerical rank of pi below r");
  if (r < n && sv(r) > tol_rank * s1)
    throw Error(ErrorCode::RankMismatch, "numerical rank of pi above r");

  MatrixXd a0 = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
  MatrixXd b0t = svd.matrixV().leftCols(r).transpose();  // r x n

  // Echelon normalization: row-reduce so the leading r x r block becomes the
  // identity. The pivot block is the one the variable ordering dictates; a
  // singular pivot block means this ordering admits no echelon form.
  MatrixXd piv = b0t.leftCols(r);
  Eigen::JacobiSVD<MatrixXd> psvd(piv);
  const VectorXd ps = psvd.singularValues();
  if (ps(0) <= 0.0 || ps(r - 1) <= 1e-12 * ps(0))
    throw Error(ErrorCode::EchelonSingular,
                "leading r x r block of the right factor is singular");

  MatrixXd bt = piv.partialPivLu().solve(b0t);  // [I_r, *]
  MatrixXd alpha = a0 * piv;                    // keeps alpha * beta' = pi
  MatrixXd beta = bt.transpose();
  beta.topRows(r) = MatrixXd::Identity(r, r);   // set exactly, not computed
  return {alpha, beta};
}

VarParams vecm_to_var(const VecmParams& theta) {
  theta.dims.validate_basic();
  theta.validate_shapes();
  const int n = theta.dims.n, p = theta.dims.p;
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd Pi = theta.pi();

  VarParams var;
  var.dims = theta.dims;
  var.sigma = theta.sigma;
  var.a.resize(p);
  if (p == 1) {
    var.a[0] = I + Pi;
    return var;
  }
  var.a[0] = I + Pi + theta.phi[0];
  for (int j = 2; j <= p - 1; ++j) var.a[j - 1] = theta.phi[j - 1] - theta.phi[j - 2];
  var.a[p - 1] = -theta.phi[p - 2];
  return var;
}

VecmParams var_to_vecm(const VarParams& var, int r, double tol_rank) {
  var.dims.validate_basic();
  const int n = var.dims.n, p = var.dims.p;
  if ((int)var.a.size() != p)
    throw Error(ErrorCode::InvalidArgument, "need p coefficient matrices");

  MatrixXd Pi = -MatrixXd::Identity(n, n);
  for (const auto& aj : var.a) Pi += aj;

  VecmParams theta;
  theta.dims = var.dims;
  theta.dims.r = r;
  theta.sigma = var.sigma;
  auto [alpha, beta] = factor_pi(Pi, r, tol_rank);
  theta.alpha = alpha;
  theta.beta = beta;

  theta.phi.resize(p - 1);
  if (p >= 2) {
    theta.phi[0] = var.a[0] - MatrixXd::Identity(n, n) - Pi;
    for (int j = 2; j <= p - 1; ++j)
      theta.phi[j - 1] = theta.phi[j - 2] + var.a[j - 1];
    // The map is a bijection only on coefficient tuples where the telescoped
    // last lag agrees; anything else is not a VECM image.
    double scale = 1.0 + max_abs(theta.phi[p - 2]);
    if (max_abs(theta.phi[p - 2] + var.a[p - 1]) > 1e-10 * scale)
      throw Error(ErrorCode::InconsistentTelescope,
                  "last VAR lag is inconsistent with the telescoped phi");
  }
  return theta;
}

MatrixXd orth_complement(const MatrixXd& M, ComplementKind kind) {
  const int n = (int)M.rows();
  const int k = (int)M.cols();
  if (k == 0) return MatrixXd::Identity(n, n);
  if (k >= n)
    throw Error(ErrorCode::InvalidArgument, "complement needs k < n");

  MatrixXd cperp = MatrixXd::Zero(n, n - k);  // canonical complement [0; I]
  cperp.bottomRows(n - k) = MatrixXd::Identity(n - k, n - k);

  MatrixXd proj;
  if (kind == ComplementKind::Beta) {
    // M'c with c = [I_k; 0] is the top block of M; echelon form makes it I.
    MatrixXd c = MatrixXd::Zero(n, k);
    c.topRows(k) = MatrixXd::Identity(k, k);
    MatrixXd top = M.topRows(k);
    Eigen::JacobiSVD<MatrixXd> svd(top);
    const VectorXd sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(k - 1) <= 1e-12 * sv(0))
      throw Error(ErrorCode::SingularPivot, "beta'c is singular");
    proj = MatrixXd::Identity(n, n) -
           c * top.partialPivLu().solve(M.transpose());
  } else {
    MatrixXd gram = M.transpose() * M;
    Eigen::JacobiSVD<MatrixXd> svd(gram);
    const VectorXd sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(k - 1) <= 1e-12 * sv(0))
      throw Error(ErrorCode::SingularPivot, "alpha'alpha is singular");
    proj = MatrixXd::Identity(n, n) -
           M * gram.ldlt().solve(M.transpose());
  }

  MatrixXd out = proj * cperp;
  Eigen::JacobiSVD<MatrixXd> osvd(out);
  const VectorXd osv = osvd.singularValues();
  if (osv(0) <= 0.0 || osv(n - k - 1) <= 1e-12 * osv(0))
    throw Error(ErrorCode::SingularPivot,
                "projected complement lost column rank");
  return out;
}

}  // namespace mfvar
