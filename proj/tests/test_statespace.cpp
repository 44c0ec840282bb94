#include "test_support.hpp"

#include "mfvar/rng.hpp"

#include <Eigen/Eigenvalues>

using namespace mfvar;
using test::make_t1;
using test::make_t2;

TEST_SUITE("statespace") {

TEST_CASE("companion of a univariate var(2)") {
  VarParams var;
  var.dims = ModelDims{1, 1, 0, 2, 2, Scheme::Stock};
  var.a = {MatrixXd::Constant(1, 1, 1.2), MatrixXd::Constant(1, 1, -0.2)};
  var.sigma = MatrixXd::Identity(1, 1);
  CompanionForm cf = companion(var);
  REQUIRE(cf.A.rows() == 2);
  CHECK(cf.A(0, 0) == 1.2);
  CHECK(cf.A(0, 1) == -0.2);
  CHECK(cf.A(1, 0) == 1.0);
  CHECK(cf.A(1, 1) == 0.0);
  VectorXcd ev = cf.A.eigenvalues();
  std::vector<double> mods = {std::abs(ev(0)), std::abs(ev(1))};
  std::sort(mods.begin(), mods.end());
  CHECK(std::abs(mods[0] - 0.2) < 1e-12);
  CHECK(std::abs(mods[1] - 1.0) < 1e-12);
  CHECK(max_abs(cf.C - cf.A.topRows(1)) == 0.0);
}

TEST_CASE("differenced state space for a single-lag system") {
  VecmParams th;
  th.dims = ModelDims{2, 1, 1, 2, 2, Scheme::Stock};
  th.alpha = MatrixXd(2, 1);
  th.alpha << -0.4, 0.2;
  th.beta = MatrixXd(2, 1);
  th.beta << 1.0, -1.0;
  th.phi = {MatrixXd::Zero(2, 2)};
  th.sigma = MatrixXd::Identity(2, 2);

  DiffStateSpace ss = diff_state_space(th);
  REQUIRE(ss.A.rows() == 3);
  // beta'alpha = -0.6, so the error-correction term decays at 0.4
  MatrixXd expectA(3, 3);
  expectA << 0.4, 0, 0, -0.4, 0, 0, 0.2, 0, 0;
  CHECK(max_abs(ss.A - expectA) < 1e-14);
  MatrixXd expectB(3, 2);
  expectB << 1, -1, 1, 0, 0, 1;
  CHECK(max_abs(ss.B - expectB) < 1e-14);
  CHECK(max_abs(ss.C - ss.A.topRows(3)) < 1e-14);
  CHECK(max_abs(ss.D - expectB) < 1e-14);
}

TEST_CASE("differenced state space structure on the reference systems") {
  for (const VecmParams& th : {make_t1(), make_t2()}) {
    const int n = th.dims.n, r = th.dims.r, p = th.dims.p;
    const int m = th.dims.m();
    DiffStateSpace ss = diff_state_space(th);
    REQUIRE(ss.A.rows() == m);
    // output rows coincide with the top block rows of the transition matrix
    CHECK(max_abs(ss.C - ss.A.topRows(r + n)) == 0.0);
    // shift identity under the first two block rows
    MatrixXd shift = ss.A.bottomRows(m - r - n);
    MatrixXd expect = MatrixXd::Zero(m - r - n, m);
    expect.block(0, r, m - r - n, m - r - n) =
        MatrixXd::Identity(m - r - n, m - r - n);
    CHECK(max_abs(shift - expect) == 0.0);
    // beta' relation ties the first block row to the second
    MatrixXd top = ss.A.topRows(r);
    MatrixXd mid = ss.A.middleRows(r, n);
    MatrixXd unitshift = MatrixXd::Zero(r, m);
    unitshift.leftCols(r) = MatrixXd::Identity(r, r);
    CHECK(max_abs(top - (th.beta.transpose() * mid + unitshift)) < 1e-14);
    // strictly stable
    double rho = ss.A.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(rho < 1.0 - 1e-6);
    (void)p;
  }
}

TEST_CASE("differenced eigenvalues match the stable companion spectrum") {
  for (const VecmParams& th : {make_t1(), make_t2()}) {
    DiffStateSpace ss = diff_state_space(th);
    CompanionForm cf = companion(vecm_to_var(th));
    VectorXcd da = ss.A.eigenvalues();
    VectorXcd ca = cf.A.eigenvalues();
    std::vector<std::complex<double>> stable;
    for (int i = 0; i < ca.size(); ++i)
      if (std::abs(ca(i) - 1.0) > 1e-6) stable.push_back(ca(i));
    REQUIRE((int)stable.size() == da.size());
    // match greedily as multisets
    std::vector<bool> used(stable.size(), false);
    double worst = 0.0;
    for (int i = 0; i < da.size(); ++i) {
      double best = 1e300;
      int bj = -1;
      for (size_t j = 0; j < stable.size(); ++j) {
        if (used[j]) continue;
        double d = std::abs(da(i) - stable[j]);
        if (d < best) {
          best = d;
          bj = (int)j;
        }
      }
      used[bj] = true;
      worst = std::max(worst, best);
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("unstable systems are rejected") {
  VecmParams th = make_t1();
  th.phi[0] = 1.2 * MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(diff_state_space(th), Error);
}

TEST_CASE("lyapunov closed forms") {
  MatrixXd A = MatrixXd::Constant(1, 1, 0.5);
  MatrixXd Q = MatrixXd::Identity(1, 1);
  MatrixXd X = solve_lyapunov(A, Q);
  CHECK(std::abs(X(0, 0) - 4.0 / 3.0) < 1e-12);
  CHECK(max_abs(solve_lyapunov(MatrixXd::Zero(2, 2),
                               2.0 * MatrixXd::Identity(2, 2)) -
                2.0 * MatrixXd::Identity(2, 2)) < 1e-14);
}

TEST_CASE("lyapunov agrees with the series oracle on random stable systems") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed * 13 + 1);
    int k = 2 + (int)(rng.uniform() * 5);  // 2..6
    MatrixXd A(k, k), L(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        A(i, j) = rng.uniform(-1, 1);
        L(i, j) = rng.uniform(-1, 1);
      }
    double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    A *= 0.85 / std::max(rho, 1e-3);
    MatrixXd Q = L * L.transpose();
    MatrixXd X = solve_lyapunov(A, Q);
    MatrixXd Xit = test::lyap_by_iteration(A, Q, 200);
    CHECK(max_abs(X - Xit) < 1e-9 * (1.0 + max_abs(X)));
    CHECK(max_abs(X - A * X * A.transpose() - Q) < 1e-10 * (1.0 + max_abs(Q)));
    CHECK(max_abs(X - X.transpose()) == 0.0);
  }
}

TEST_CASE("lyapunov rejects non-stable inputs") {
  MatrixXd A = MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(solve_lyapunov(A, MatrixXd::Identity(2, 2)), Error);
}

TEST_CASE("hf moments satisfy the fixed point and block structure") {
  for (const VecmParams& th : {make_t1(), make_t2()}) {
    HfMoments mom = hf_moments(th);
    DiffStateSpace ss = diff_state_space(th);
    const int n = th.dims.n, r = th.dims.r;
    MatrixXd Q = ss.B * th.sigma * ss.B.transpose();
    CHECK(max_abs(mom.gamma_rp - ss.A * mom.gamma_rp * ss.A.transpose() - Q) <
          1e-10 * (1.0 + max_abs(Q)));
    // lag-1 difference autocovariance can be read in two places
    MatrixXd inside = mom.gamma_rp.block(r, r + n, n, n);
    CHECK(max_abs(mom.gamma_dy(1) - inside) < 1e-12);
    // transpose symmetry across zero
    CHECK(max_abs(mom.gamma_dy(-2) - mom.gamma_dy(2).transpose()) == 0.0);
    CHECK(max_abs(mom.gamma_b_dy(-1) -
                  mom.ag[1].block(r, 0, n, r).transpose()) == 0.0);
    // covariance is positive definite (identifiability I2 on this model)
    Eigen::SelfAdjointEigenSolver<MatrixXd> se(mom.gamma_rp);
    CHECK(se.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("hf moments window bounds") {
  HfMoments mom = hf_moments(make_t1(), 4);
  CHECK_THROWS_AS(mom.gamma_dy(9), Error);
  CHECK(mom.gamma_dy(-3).rows() == 2);  // p-1 = 3 is inside the window
}

}  // TEST_SUITE
