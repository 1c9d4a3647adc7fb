#include <doctest.h>

#include <cmath>
#include <set>

#include "ascf/error.hpp"
#include "ascf/learners.hpp"
#include "ascf/rng.hpp"
#include "oracles.hpp"

using namespace ascf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      // Box-Muller
      const double u1 = 1.0 - rng.uniform01(), u2 = rng.uniform01();
      m(i, j) = std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2);
    }
  return m;
}

double max_rel(const MatrixXd& a, const MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("fit_linear: two-point line") {
  MatrixXd z(2, 1), x(2, 1);
  z << 0, 1;
  x << 1, 3;
  auto m = fit_linear(z, x);
  CHECK(m.weights(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(m.intercepts(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.predict(VectorXd::Constant(1, 1.0))(0) == doctest::Approx(3.0));
}

TEST_CASE("fit_linear: constant target") {
  Rng rng(1);
  MatrixXd z = gaussian(rng, 7, 3);
  MatrixXd x = MatrixXd::Constant(7, 2, 4.25);
  auto m = fit_linear(z, x);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.intercepts(0) == doctest::Approx(4.25));
  CHECK(m.intercepts(1) == doctest::Approx(4.25));
}

TEST_CASE("fit_linear: single row, two inputs") {
  MatrixXd z(1, 2), x(1, 1);
  z << 0.3, -1.2;
  x << 2.0;
  auto m = fit_linear(z, x);
  MatrixXd w;
  VectorXd b;
  oracle::ols_pinv(z, x, w, b);
  CHECK((m.weights - w).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(m.predict(z.row(0).transpose())(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("property: fit_linear matches the pseudoinverse oracle, including rank deficiency") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.uniform_index(12));
    const auto m = static_cast<Eigen::Index>(1 + rng.uniform_index(5));
    const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(3));
    MatrixXd z = gaussian(rng, n, m);
    if (m >= 2 && trial % 3 == 0) z.col(m - 1) = 2.0 * z.col(0) - z.col(m - 2) * 0.5;  // dependent column
    if (trial % 7 == 0) z.col(0).setConstant(1.5);                                   // constant column
    MatrixXd x = gaussian(rng, n, d);
    auto model = fit_linear(z, x);
    MatrixXd w;
    VectorXd b;
    oracle::ols_pinv(z, x, w, b);
    CHECK(max_rel(model.weights, w) < 1e-8);
    CHECK(max_rel(model.intercepts, b) < 1e-8);
  }
}

TEST_CASE("property: residuals are orthogonal to the design") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd z = gaussian(rng, 30, 3);
    MatrixXd x = gaussian(rng, 30, 2) * 5.0;
    auto m = fit_linear(z, x);
    MatrixXd resid = x - m.predict_rows(z);
    MatrixXd design(30, 4);
    design << MatrixXd::Ones(30, 1), z;
    MatrixXd inner = design.transpose() * resid;
    CHECK(inner.cwiseAbs().maxCoeff() < 1e-8 * design.norm() * x.norm());
  }
}

TEST_CASE("bootstrap ensemble: determinism and identical rows") {
  Rng rng(3);
  MatrixXd z = gaussian(rng, 20, 2), x = gaussian(rng, 20, 3);
  auto a = fit_bootstrap_ensemble(z, x, 10, 77);
  auto b = fit_bootstrap_ensemble(z, x, 10, 77);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(a.members[i].weights == b.members[i].weights);
    CHECK(a.members[i].intercepts == b.members[i].intercepts);
    CHECK(a.member_seeds[i] == derive_seed(77, i));
  }
  CHECK_FALSE(a.degenerate);

  MatrixXd zs = MatrixXd::Constant(4, 2, 1.0), xs = MatrixXd::Constant(4, 1, 3.0);
  auto same = fit_bootstrap_ensemble(zs, xs, 5, 1);
  CHECK(same.degenerate);
  for (const auto& m : same.members) CHECK(m.predict(VectorXd::Constant(2, 9.0))(0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(fit_bootstrap_ensemble(z, x, 1, 0), Error);
}

TEST_CASE("bootstrap inclusion fraction") {
  // Distinct source rows per member of a size-20 resample: expectation
  // 1 - (1 - 1/20)^20. Rows are made identifiable through a one-hot x.
  const Eigen::Index n = 20;
  MatrixXd z(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) z(i, 0) = static_cast<double>(i);
  const double expected = 1.0 - std::pow(1.0 - 1.0 / 20.0, 20.0);
  double total = 0;
  int members = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    // reproduce the member's draw: member b uses Rng(derive_seed(seed, b))
    for (int b = 0; b < 10; ++b) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
      std::set<std::size_t> seen;
      for (Eigen::Index i = 0; i < n; ++i) seen.insert(rng.uniform_index(static_cast<std::size_t>(n)));
      total += static_cast<double>(seen.size()) / static_cast<double>(n);
      ++members;
    }
  }
  CHECK(std::fabs(total / members - expected) < 0.05);

  // the library's members really are fits on such resamples: a member fitted
  // on z -> z reproduces z exactly on every row it drew
  auto ens = fit_bootstrap_ensemble(z, z, 10, 5);
  for (int b = 0; b < 10; ++b) {
    Rng rng(derive_seed(5, static_cast<std::uint64_t>(b)));
    const auto row = static_cast<double>(rng.uniform_index(20));
    CHECK(ens.members[static_cast<std::size_t>(b)].predict(VectorXd::Constant(1, row))(0) ==
          doctest::Approx(row).epsilon(1e-9));
  }
}

TEST_CASE("fit_logistic: symmetric pair") {
  MatrixXd x(2, 1);
  x << -1, 1;
  auto c = fit_logistic(x, std::vector<int>{0, 1});
  CHECK(c.converged);
  CHECK(c.posterior(VectorXd::Zero(1)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("fit_logistic: separable set") {
  MatrixXd x(10, 2);
  std::vector<int> y;
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i < 5 ? -1.0 - i * 0.3 : 1.0 + (i - 5) * 0.3;
    x(i, 1) = (i % 3) * 0.1;
    y.push_back(i < 5 ? 0 : 1);
  }
  auto c = fit_logistic(x, y);
  CHECK(c.converged);
  CHECK(c.weights.allFinite());
  CHECK(c.predict_rows(x) == y);
  CHECK(c.gradient_norm <= 1e-6);
}

TEST_CASE("fit_logistic: single class") {
  MatrixXd x = MatrixXd::Random(4, 2);
  try {
    fit_logistic(x, std::vector<int>{1, 1, 1, 1});
    FAIL("expected single_class");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::single_class);
  }
}

TEST_CASE("property: logistic gradient matches central differences") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.uniform_index(19));
    const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(5));
    MatrixXd x = gaussian(rng, n, d);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<int>(rng.uniform_index(2));
    VectorXd params = gaussian(rng, d + 1, 1);
    const double C = 0.5 + rng.uniform01() * 2;
    const VectorXd g = logistic_gradient(x, y, params, C);
    VectorXd fd(d + 1);
    for (Eigen::Index j = 0; j <= d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::fabs(params(j)));
      VectorXd p = params, q = params;
      p(j) += h;
      q(j) -= h;
      fd(j) = (logistic_objective(x, y, p, C) - logistic_objective(x, y, q, C)) / (2 * h);
    }
    CHECK((g - fd).norm() / std::max(1e-8, fd.norm()) < 1e-4);
  }
}

TEST_CASE("property: posterior invariant to per-dimension scaling") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    MatrixXd x = gaussian(rng, 25, 3);
    std::vector<int> y(25);
    for (int i = 0; i < 25; ++i) y[static_cast<std::size_t>(i)] = x(i, 0) + 0.5 * gaussian(rng, 1, 1)(0, 0) > 0;
    if (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0) continue;
    VectorXd scale(3);
    for (int j = 0; j < 3; ++j) scale(j) = 0.01 + rng.uniform01() * 100;
    MatrixXd xs = x * scale.asDiagonal();
    auto a = fit_logistic(x, y);
    auto b = fit_logistic(xs, y);
    VectorXd q = gaussian(rng, 3, 1);
    CHECK(std::fabs(a.posterior(q) - b.posterior(q.cwiseProduct(scale))) < 1e-6);
    // monotone in the score and complementary
    CHECK(a.posterior(q) > 0.0);
    CHECK(a.posterior(q) < 1.0);
  }
}

TEST_CASE("property: standardizer fitted on training rows only") {
  Rng rng(17);
  MatrixXd train = gaussian(rng, 20, 2);
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = i % 2;
  auto a = fit_logistic(train, y);
  auto b = fit_logistic(train, y);
  CHECK(a.weights == b.weights);
  CHECK(a.standardizer.mean == b.standardizer.mean);
  MatrixXd constant = train;
  constant.col(1).setConstant(3.0);
  auto c = fit_logistic(constant, y);
  CHECK(c.standardizer.scale(1) == 0.0);
  CHECK(c.weights(1) == 0.0);
}

TEST_CASE("rfe: noise feature is eliminated first") {
  Rng rng(23);
  const Eigen::Index n = 60;
  MatrixXd z = gaussian(rng, n, 1);
  MatrixXd x(n, 2);
  std::vector<int> y(static_cast<std::size_t>(n));
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
    x(i, 0) = gaussian(rng, 1, 1)(0, 0);                    // noise
    x(i, 1) = y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;  // the label itself
    ids.push_back(std::to_string(i));
  }
  Dataset ds(ids, z, x, y);
  auto r = rfe_select(ds, 5, 1);
  CHECK(r.ranking == std::vector<std::size_t>{0, 1});
  CHECK(r.optimal_count == 1);
  CHECK(r.cv_f1[0] == 1.0);

  Dataset one(ids, z, x.col(1), y);
  auto s = rfe_select(one, 5, 1);
  CHECK(s.ranking == std::vector<std::size_t>{0});
  CHECK(s.optimal_count == 1);
}
