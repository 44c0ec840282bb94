#include "mfvar/retrieval.hpp"

#include "mfvar/params.hpp"
#include "mfvar/statespace.hpp"

#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <vector>

using namespace mfvar;
using test::lyap_by_iteration;
using test::make_t1;
using test::make_t2;
using test::rel_err;

namespace {

InnovationsForm realize(const VecmParams& th) {
  AutocovSequence seq = blocked_autocov(th);
  return innovation_from_hankel(hankel_realization(seq, th.dims.m()));
}

// worst matching distance between two spectra, treated as multisets
double spectrum_dist(const VectorXcd& a, const VectorXcd& b) {
  REQUIRE(a.size() == b.size());
  std::vector<bool> used(static_cast<size_t>(b.size()), false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double best = 1e300;
    int pick = -1;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      const double d = std::abs(a(i) - b(j));
      if (d < best) {
        best = d;
        pick = static_cast<int>(j);
      }
    }
    used[static_cast<size_t>(pick)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

VectorXcd true_hf_eigs(const VecmParams& th) {
  return Eigen::ComplexEigenSolver<MatrixXd>(diff_state_space(th).A)
      .eigenvalues();
}

MatrixXd mat_pow(const MatrixXd& B, int k) {
  MatrixXd P = MatrixXd::Identity(B.rows(), B.cols());
  for (int j = 0; j < k; ++j) P = P * B;
  return P;
}

MatrixXd true_gamma_rp(const VecmParams& th) {
  DiffStateSpace ss = diff_state_space(th);
  return solve_lyapunov(ss.A, ss.B * th.sigma * ss.B.transpose());
}

double theta_err(const VecmParams& got, const VecmParams& want) {
  double e = max_abs(got.alpha - want.alpha);
  for (size_t j = 0; j < want.phi.size(); ++j)
    e = std::max(e, max_abs(got.phi[j] - want.phi[j]));
  e = std::max(e, max_abs(got.sigma - want.sigma));
  return e;
}

double theta_scale(const VecmParams& th) {
  double s = max_abs(th.alpha);
  for (const auto& P : th.phi) s = std::max(s, max_abs(P));
  return std::max(s, max_abs(th.sigma));
}

}  // namespace

TEST_SUITE("retrieval") {

TEST_CASE("de-aliasing recovers the high-frequency spectrum") {
  std::vector<VecmParams> cases = {make_t1(), make_t2()};
  // N = 3 exercises the trailing-pair ratio for both schemes
  cases.push_back(
      random_system(ModelDims{2, 1, 1, 6, 3, Scheme::Stock}, 11));
  cases.push_back(random_system(ModelDims{2, 1, 1, 7, 3, Scheme::Flow}, 12));

  for (const auto& th : cases) {
    CAPTURE(to_string(th.dims.scheme));
    CAPTURE(th.dims.N);
    InnovationsForm f = realize(th);
    EigStructure es = recover_eigstructure(f, th.dims);

    CHECK(spectrum_dist(es.lambda, true_hf_eigs(th)) < 1e-8);
    CHECK(es.realness < 1e-9);
    // the blocked process is strictly stable, so no recovered root may
    // sit on the unit circle
    CHECK(es.lambda.cwiseAbs().maxCoeff() < 1.0);
    // the recovered transition must be an exact N-th root of the blocked
    // transition
    CHECK(rel_err(mat_pow(es.Ac, th.dims.N), f.A) < 1e-8);
  }
}

TEST_CASE("eigenvector without fast load is rejected") {
  ModelDims d{2, 1, 1, 4, 2, Scheme::Stock};
  const int m = d.m(), nt = d.ntilde();
  InnovationsForm f;
  f.A = MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) f.A(i, i) = 0.1 + 0.1 * i;
  f.C = MatrixXd::Ones(nt, m);
  f.C(nt - 1, 0) = 0.0;  // kills the last fast row of the first eigenvector
  try {
    recover_eigstructure(f, d);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroDenominator);
  }
}

TEST_CASE("planted basis change is recovered exactly") {
  for (const auto& th : {make_t1(), make_t2()}) {
    CAPTURE(to_string(th.dims.scheme));
    const int m = th.dims.m();
    BlockedSystem bs = blocked_system(th);

    // realization differing from the blocked coordinates by a known
    // orthogonal change of basis
    MatrixXd T0 = Eigen::HouseholderQR<MatrixXd>(
                      MatrixXd::Random(m, m))
                      .householderQ();
    InnovationsForm f;
    f.A = T0.transpose() * bs.A_bc * T0;
    f.C = bs.C_bc * T0;

    EigStructure es = recover_eigstructure(f, th.dims);
    TRResult tr = recover_T_R(f, es, th.beta, th.dims);
    CHECK(rel_err(tr.T, T0) < 1e-8);
    CHECK(tr.consistency < 1e-9);

    VarResult vr = recover_var(tr.R, es, th.beta, th.dims);
    CHECK(rel_err(vr.theta.alpha, th.alpha) < 1e-8);
    for (size_t j = 0; j < th.phi.size(); ++j)
      CHECK(rel_err(vr.theta.phi[j], th.phi[j]) < 1e-8);
    CHECK(vr.structure_residual < 1e-9);

    AutocovSequence seq = blocked_autocov(th);
    GammaResult gr = recover_gamma_rp(seq, es, tr.R, th.beta);
    CHECK(rel_err(gr.gamma_rp, true_gamma_rp(th)) < 1e-8);
    CHECK(gr.asymmetry < 1e-9);
  }
}

TEST_CASE("window sum singularity is reported") {
  ModelDims d{2, 1, 1, 4, 2, Scheme::Stock};
  const int m = d.m(), nt = d.ntilde();
  MatrixXd beta(2, 1);
  beta << 1.0, -1.0;

  // a de-aliased eigenvalue at -1 makes I + Ac^{-1} singular
  EigStructure es;
  es.Ac = MatrixXd::Zero(m, m);
  es.Ac(0, 0) = -1.0;
  for (int i = 1; i < m; ++i) es.Ac(i, i) = 0.2 + 0.05 * i;
  InnovationsForm f;
  f.A = es.Ac * es.Ac;
  f.C = MatrixXd::Ones(nt, m);
  try {
    recover_T_R(f, es, beta, d);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSum);
  }
}

TEST_CASE("full pipeline reproduces the reference systems") {
  for (const auto& th : {make_t1(), make_t2()}) {
    CAPTURE(to_string(th.dims.scheme));
    AutocovSequence seq = blocked_autocov(th);
    RetrievalResult res = retrieve(seq, th.beta);

    CHECK(theta_err(res.theta, th) <= 1e-6 * (1.0 + theta_scale(th)));
    CHECK(max_abs(res.theta.beta - th.beta) == 0.0);
    CHECK(rel_err(res.gamma_rp, true_gamma_rp(th)) < 1e-7);
    Eigen::SelfAdjointEigenSolver<MatrixXd> ge(res.gamma_rp,
                                               Eigen::EigenvaluesOnly);
    CHECK(ge.eigenvalues().minCoeff() > 0.0);

    CHECK(res.c_report.all_pass());
    CHECK(res.i_report.all_pass());

    CHECK(res.diagnostics.at("tr_consistency") < 1e-9);
    CHECK(res.diagnostics.at("structure_residual") < 1e-9);
    CHECK(res.diagnostics.at("gamma_asymmetry") < 1e-9);
    CHECK(res.diagnostics.at("eig_realness") < 1e-9);
    CHECK(res.diagnostics.at("sigma_min_eig") > 0.0);
  }
}

TEST_CASE("round-trip holds across random systems") {
  int failures = 0;
  for (int rep = 1; rep <= 50; ++rep) {
    VecmParams ts =
        random_system(ModelDims{2, 1, 1, 4, 2, Scheme::Stock}, rep);
    VecmParams tf =
        random_system(ModelDims{2, 1, 1, 5, 2, Scheme::Flow}, 1000 + rep);
    for (const auto& th : {ts, tf}) {
      RetrievalResult res = retrieve(blocked_autocov(th), th.beta);
      if (theta_err(res.theta, th) > 1e-6 * (1.0 + theta_scale(th)))
        ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("innovation covariance formula") {
  VecmParams th = make_t1();
  th.sigma << 1.0, 0.3, 0.3, 0.8;
  MatrixXd gamma = true_gamma_rp(th);
  CHECK(rel_err(recover_sigma(th, gamma), th.sigma) < 1e-10);

  SUBCASE("without short-run dynamics only the level term remains") {
    VecmParams th0 = make_t1();
    th0.phi = {MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2),
               MatrixXd::Zero(2, 2)};
    th0.sigma << 1.0, 0.3, 0.3, 0.8;
    MatrixXd g0 = true_gamma_rp(th0);
    MatrixXd got = recover_sigma(th0, g0);
    CHECK(rel_err(got, th0.sigma) < 1e-10);

    const int r = th0.dims.r, n = th0.dims.n;
    MatrixXd AG = diff_state_space(th0).A * g0;
    MatrixXd manual = g0.block(r, r, n, n) -
                      th0.alpha * AG.block(r, 0, n, r).transpose();
    CHECK(rel_err(got, manual) < 1e-12);
  }

  SUBCASE("degenerate state covariance is rejected") {
    try {
      recover_sigma(th, MatrixXd::Zero(gamma.rows(), gamma.cols()));
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPDSigma);
    }
  }
}

TEST_CASE("retrieval guards its inputs") {
  VecmParams th = make_t1();

  SUBCASE("lag window too short") {
    AutocovSequence seq = blocked_autocov(th, 3);
    try {
      retrieve(seq, th.beta);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
    }
  }

  SUBCASE("rank-deficient system is refused, never mis-identified") {
    VecmParams bad = th;
    bad.phi[2] = MatrixXd::Zero(2, 2);  // last lag coefficient vanishes
    AutocovSequence seq = blocked_autocov(bad);
    try {
      retrieve(seq, bad.beta);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RankDeficient);
    }
  }

  SUBCASE("small input perturbations move the output linearly") {
    // the cross-check gates scale with input noise, so widen them for a
    // deliberately perturbed sequence
    RetrievalOptions loose;
    loose.tol_consistency = 1e-3;
    loose.tol_structure = 1e-3;
    loose.tol_asymmetry = 1e-3;
    auto err_at = [&](double eta) {
      AutocovSequence seq = blocked_autocov(th);
      for (auto& g : seq.g) g.array() += eta;
      RetrievalResult res = retrieve(seq, th.beta, loose);
      return theta_err(res.theta, th);
    };
    double e10 = err_at(1e-10), e9 = err_at(1e-9);
    CHECK(e9 < 1e-4);
    CHECK(e10 > 0.0);
    // first-order sensitivity: a decade in eta is a decade in the error
    CHECK(e9 / e10 > 3.0);
    CHECK(e9 / e10 < 30.0);
  }
}

TEST_CASE("level rows of the eigenvectors satisfy the long-run ratio") {
  // q_beta = lambda / (lambda - 1) * beta' q_1 for every eigenpair of the
  // differenced transition
  std::vector<VecmParams> cases;
  for (int s = 1; s <= 5; ++s) {
    cases.push_back(
        random_system(ModelDims{2, 1, 1, 4, 2, Scheme::Stock}, 70 + s));
    cases.push_back(
        random_system(ModelDims{2, 1, 1, 5, 2, Scheme::Flow}, 80 + s));
  }
  for (const auto& th : cases) {
    const int r = th.dims.r, n = th.dims.n;
    DiffStateSpace ss = diff_state_space(th);
    Eigen::ComplexEigenSolver<MatrixXd> eig(ss.A);
    const MatrixXcd bt = th.beta.transpose().cast<std::complex<double>>();
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      const std::complex<double> lam = eig.eigenvalues()(i);
      const VectorXcd q = eig.eigenvectors().col(i);
      const VectorXcd want = lam / (lam - 1.0) * (bt * q.segment(r, n));
      CHECK((q.head(r) - want).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

}  // TEST_SUITE
