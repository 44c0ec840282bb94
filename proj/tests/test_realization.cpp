#include "test_support.hpp"

#include "mfvar/params.hpp"
#include "mfvar/realization.hpp"

#include <Eigen/Eigenvalues>

using namespace mfvar;
using test::make_t1;
using test::make_t2;

namespace {

double closed_loop_radius(const InnovationsForm& f) {
  Eigen::EigenSolver<MatrixXd> es(f.A - f.K * f.C, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

int closed_loop_unit_count(const InnovationsForm& f) {
  Eigen::EigenSolver<MatrixXd> es(f.A - f.K * f.C, false);
  int count = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()(i)) > 1.0 - 1e-6) ++count;
  return count;
}

// minimum-norm inverse of a symmetric PSD matrix, written out independently
// of the library's internal solver
MatrixXd psd_pinv(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> se(S);
  VectorXd ev = se.eigenvalues();
  double lmax = ev.cwiseAbs().maxCoeff();
  VectorXd inv = VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-12 * std::max(1.0, lmax)) inv(i) = 1.0 / ev(i);
  return se.eigenvectors() * inv.asDiagonal() * se.eigenvectors().transpose();
}

}  // namespace

TEST_SUITE("realization") {

TEST_CASE("prediction filter reproduces the blocked autocovariances") {
  for (const VecmParams& th : {make_t1(), make_t2()}) {
    InnovationsForm f = cpf(blocked_system(th));
    const int H = 5 * th.dims.N;
    AutocovSequence seq = blocked_autocov(th, H);
    std::vector<MatrixXd> g = innovation_autocov(f, H);
    for (int h = 0; h <= H; ++h)
      CHECK(max_abs(g[h] - seq.g[h]) < 1e-8 * (1.0 + max_abs(seq.g[h])));
    CHECK(closed_loop_radius(f) <= 1.0 + 1e-8);

    // the level rows minus beta' times the difference rows replay the
    // previous block exactly, so those innovation directions vanish
    const int r = th.dims.r, n = th.dims.n;
    MatrixXd V = MatrixXd::Zero(r, th.dims.ntilde());
    V.leftCols(r) = MatrixXd::Identity(r, r);
    V.middleCols(r, n) = -th.beta.transpose();
    CHECK(max_abs(V * f.Sigma * V.transpose()) < 1e-10);

    // those r degenerate directions pin r closed-loop eigenvalues to the
    // unit circle; everything else must be strictly stable
    CHECK(closed_loop_unit_count(f) == r);
  }
}

TEST_CASE("prediction filter matches a long joseph-form recursion") {
  VecmParams th = make_t1();
  BlockedSystem bs = blocked_system(th);
  InnovationsForm f = cpf(bs);

  const MatrixXd A = bs.A_bc;
  const MatrixXd C = bs.C_bc;
  const MatrixXd Q = bs.B_bc * bs.Sigma_b * bs.B_bc.transpose();
  const MatrixXd R = bs.D_b * bs.Sigma_b * bs.D_b.transpose();
  const MatrixXd S = bs.B_bc * bs.Sigma_b * bs.D_b.transpose();
  MatrixXd P = MatrixXd::Zero(A.rows(), A.rows());
  for (int it = 0; it < 500; ++it) {
    MatrixXd Sig = C * P * C.transpose() + R;
    MatrixXd K = (A * P * C.transpose() + S) * psd_pinv(Sig);
    MatrixXd Acl = A - K * C;
    P = Acl * P * Acl.transpose() + Q + K * R * K.transpose() -
        S * K.transpose() - K * S.transpose();
    P = 0.5 * (P + P.transpose()).eval();
  }
  MatrixXd Sig = C * P * C.transpose() + R;
  MatrixXd K = (A * P * C.transpose() + S) * psd_pinv(Sig);
  CHECK(max_abs(K - f.K) < 1e-9 * (1.0 + max_abs(f.K)));
  CHECK(max_abs(Sig - f.Sigma) < 1e-9 * (1.0 + max_abs(f.Sigma)));
}

TEST_CASE("hankel singular values split at the true order") {
  VecmParams th = make_t1();
  AutocovSequence seq = blocked_autocov(th);
  HankelRealization hr = hankel_realization(seq);
  REQUIRE(hr.m_hat == th.dims.m());
  CHECK(hr.svals(6) / hr.svals(0) > 1e-6);
  CHECK(hr.svals(7) / hr.svals(0) < 1e-8);
  CHECK(hr.shift_residual < 1e-10);
}

TEST_CASE("hankel realization reproduces the sequence") {
  for (const VecmParams& th : {make_t1(), make_t2()}) {
    AutocovSequence seq = blocked_autocov(th);
    HankelRealization hr = hankel_realization(seq, th.dims.m());
    MatrixXd Ah = MatrixXd::Identity(hr.m_hat, hr.m_hat);
    for (int h = 1; h <= seq.H; ++h) {
      MatrixXd got = hr.Cbar * Ah * hr.Gbar;
      CHECK(max_abs(got - seq.g[h]) < 1e-9 * (1.0 + max_abs(seq.g[h])));
      Ah = (hr.Abar * Ah).eval();
    }
  }
}

TEST_CASE("faurre iteration recovers a matching innovations form") {
  for (const VecmParams& th : {make_t1(), make_t2()}) {
    AutocovSequence seq = blocked_autocov(th);
    HankelRealization hr = hankel_realization(seq, th.dims.m());
    InnovationsForm f = innovation_from_hankel(hr);
    std::vector<MatrixXd> g = innovation_autocov(f, seq.H);
    for (int h = 0; h <= seq.H; ++h)
      CHECK(max_abs(g[h] - seq.g[h]) < 1e-7 * (1.0 + max_abs(seq.g[h])));
    CHECK(closed_loop_radius(f) <= 1.0 + 1e-8);
    CHECK(closed_loop_unit_count(f) == th.dims.r);

    // the innovation covariance does not depend on the state basis, so the
    // hankel route must agree with the prediction filter
    InnovationsForm fc = cpf(blocked_system(th));
    CHECK(max_abs(f.Sigma - fc.Sigma) < 1e-7 * (1.0 + max_abs(fc.Sigma)));
  }
}

TEST_CASE("singular last lag coefficient drops the hankel rank") {
  VecmParams th = make_t1();
  th.phi[2](1, 1) = 0.0;
  AssumptionReport rep = check_i(th);
  CHECK_FALSE(rep.find("I1")->pass);

  AutocovSequence seq = blocked_autocov(th);
  HankelRealization hr = hankel_realization(seq);
  CHECK(hr.m_hat == th.dims.m() - 1);
  CHECK(hr.svals(6) / hr.svals(0) < 1e-8);

  try {
    hankel_realization(seq, th.dims.m());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("zero sequence realizes as an empty state") {
  VecmParams th = make_t1();
  AutocovSequence seq = blocked_autocov(th, 6);
  for (MatrixXd& gm : seq.g) gm.setZero();
  HankelRealization hr = hankel_realization(seq);
  CHECK(hr.m_hat == 0);
}

TEST_CASE("faurre guards against an infeasible sequence") {
  HankelRealization hr;
  hr.Abar = MatrixXd::Constant(1, 1, 0.5);
  hr.Cbar = MatrixXd::Ones(1, 1);
  hr.Gbar = MatrixXd::Ones(1, 1);
  hr.gamma0 = -MatrixXd::Ones(1, 1);
  hr.m_hat = 1;
  try {
    innovation_from_hankel(hr);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPDInnovation);
  }
}

}  // TEST_SUITE
