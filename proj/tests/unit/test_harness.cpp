#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ascf/error.hpp"
#include "ascf/harness.hpp"
#include "oracles.hpp"

using namespace ascf;
using Eigen::MatrixXd;

namespace {

Dataset synthetic(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd z(static_cast<Eigen::Index>(n), 2), x(static_cast<Eigen::Index>(n), 3);
  std::vector<int> y;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    z(r, 0) = rng.uniform01();
    z(r, 1) = rng.uniform01();
    x(r, 0) = z(r, 0) + 0.3 * rng.uniform01();
    x(r, 1) = z(r, 1) - z(r, 0) + 0.3 * rng.uniform01();
    x(r, 2) = rng.uniform01();
    y.push_back(x(r, 0) + 0.5 * x(r, 1) + 0.4 * rng.uniform01() > 0.8 ? 1 : 0);
    ids.push_back("s" + std::to_string(i));
  }
  return Dataset(ids, z, x, y);
}

std::vector<StrategyConfig> all_strategies() {
  StrategyConfig r, u, s;
  u.kind = StrategyKind::u_ascf;
  s.kind = StrategyKind::s_ascf;
  return {r, u, s};
}

LearningCurve flat_curve(int repeat, int fold, std::vector<double> f1) {
  LearningCurve c;
  c.repeat = repeat;
  c.fold = fold;
  c.f1 = std::move(f1);
  for (std::size_t i = 0; i < c.f1.size(); ++i) c.acquired_ids.push_back(std::to_string(i));
  return c;
}

}  // namespace

TEST_CASE("cold start parsing") {
  CHECK(parse_cold_start("stratified-pair").kind == ColdStartKind::stratified_pair);
  auto r = parse_cold_start("random-4");
  CHECK(r.kind == ColdStartKind::random_n);
  CHECK(r.n == 4);
  CHECK(to_string(r) == "random-4");
  CHECK_THROWS_AS(parse_cold_start("random-x"), Error);
}

TEST_CASE("run_simulation: curve shape, isolation, final-step equality") {
  const auto ds = synthetic(60, 1);
  const auto plan = make_splits(ds, 2, 5, 9);
  ProtocolConfig protocol;
  for (int rep = 0; rep < 2; ++rep) {
    for (int fold = 0; fold < 5; ++fold) {
      const Fold& split = plan.at(rep, fold);
      const auto seed = run_seed_for(protocol.seed, rep, fold);
      std::vector<LearningCurve> curves;
      for (const auto& cfg : all_strategies()) curves.push_back(run_simulation(ds, split, cfg, protocol, seed, rep, fold));
      const std::set<std::size_t> test(split.test.begin(), split.test.end());
      for (const auto& c : curves) {
        CHECK(c.f1.size() == split.train.size());
        CHECK(c.acquired_ids.size() == split.train.size());
        CHECK(c.cold_start_size == 2);
        std::set<std::string> ids(c.acquired_ids.begin(), c.acquired_ids.end());
        CHECK(ids.size() == c.acquired_ids.size());
        for (const auto& id : c.acquired_ids) CHECK_FALSE(test.contains(ds.index_of(id)));
        for (double f : c.f1) CHECK((f >= 0.0 && f <= 1.0));
        // identical cold-start draw across strategies
        CHECK(std::equal(c.acquired_ids.begin(), c.acquired_ids.begin() + 2, curves[0].acquired_ids.begin()));
        // bitwise equal final F1
        CHECK(c.f1.back() == curves[0].f1.back());
      }
    }
  }
}

TEST_CASE("run_simulation: determinism and no leakage from the test fold") {
  const auto ds = synthetic(50, 2);
  const auto plan = make_splits(ds, 1, 5, 3);
  const Fold& split = plan.at(0, 2);
  ProtocolConfig protocol;
  protocol.max_steps = 15;

  // perturb every test row's z and x; acquisition must not notice
  MatrixXd z = ds.z(), x = ds.x();
  for (auto r : split.test) {
    z.row(static_cast<Eigen::Index>(r)).array() += 100.0;
    x.row(static_cast<Eigen::Index>(r)).array() *= -3.0;
  }
  const Dataset perturbed(ds.ids(), z, x, ds.y());
  for (const auto& cfg : all_strategies()) {
    const auto a = run_simulation(ds, split, cfg, protocol, 77);
    const auto b = run_simulation(ds, split, cfg, protocol, 77);
    CHECK(a.acquired_ids == b.acquired_ids);
    CHECK(a.f1 == b.f1);
    CHECK(a.f1.size() == 15);
    const auto c = run_simulation(perturbed, split, cfg, protocol, 77);
    CHECK(c.acquired_ids == a.acquired_ids);
  }
}

TEST_CASE("run_simulation: bad splits") {
  const auto ds = synthetic(20, 3);
  Fold overlap{{0, 1, 2, 3}, {3, 4}};
  CHECK_THROWS_AS(run_simulation(ds, overlap, StrategyConfig{}, ProtocolConfig{}, 1), Error);
  Fold empty_test{{0, 1, 2}, {}};
  CHECK_THROWS_AS(run_simulation(ds, empty_test, StrategyConfig{}, ProtocolConfig{}, 1), Error);
}

TEST_CASE("run_simulation: random cold start backfills early steps") {
  const auto ds = synthetic(40, 4);
  const auto plan = make_splits(ds, 1, 4, 1);
  ProtocolConfig protocol;
  protocol.cold_start = parse_cold_start("random-5");
  const auto c = run_simulation(ds, plan.at(0, 0), StrategyConfig{}, protocol, 5);
  CHECK(c.cold_start_size >= 5);
  CHECK(c.f1.size() == plan.at(0, 0).train.size());
}

TEST_CASE("u-ascf prefers an extrapolating candidate over duplicates") {
  // Acquired: z in [0, 1] with x following z plus noise. Candidates: exact
  // duplicates of acquired z values and one far-out z whose x is outlying.
  const int n_acq = 6;
  MatrixXd z(n_acq * 2 + 1, 1), x(n_acq * 2 + 1, 3);
  for (int i = 0; i < n_acq; ++i) {
    const double t = i / 5.0;
    const double noise = (i % 2 ? 0.05 : -0.05);
    z(i, 0) = t;
    x.row(i) << t + noise, 2 * t - noise, -t + noise;
    z(n_acq + i, 0) = t;  // duplicate of an acquired z
    x.row(n_acq + i) = x.row(i);
  }
  z(2 * n_acq, 0) = 6.0;
  x.row(2 * n_acq) << 6.0, 12.0, -6.0;
  std::vector<std::size_t> pool(2 * n_acq + 1);
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  AcquisitionState state(pool);
  for (int i = 0; i < n_acq; ++i) state = acquire(std::move(state), static_cast<std::size_t>(i), x.row(i).transpose());

  StrategyConfig cfg;
  cfg.kind = StrategyKind::u_ascf;
  std::vector<int> labels(pool.size(), -1);
  const PoolView view{z, labels};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scores = score_candidates(cfg, state, view, false, seed);
    double far = 0, best_dup = 0;
    for (const auto& s : scores) {
      if (s.row == pool.back()) {
        far = s.value;
      } else {
        best_dup = std::max(best_dup, s.value);
      }
    }
    CHECK(far > best_dup);
    Rng rng(seed);
    CHECK(argmax_utility(scores, cfg.tie_break, rng) == pool.back());
  }
}

TEST_CASE("run_benchmark: thread count does not change results") {
  const auto ds = synthetic(40, 5);
  ProtocolConfig protocol;
  protocol.repeats = 2;
  protocol.k = 4;
  protocol.max_steps = 12;
  protocol.threads = 1;
  const auto a = run_benchmark(ds, all_strategies(), protocol);
  protocol.threads = 3;
  const auto b = run_benchmark(ds, all_strategies(), protocol);
  REQUIRE(a.strategies.size() == 3);
  CHECK(a.strategies[0].strategy == "random");
  for (std::size_t s = 0; s < 3; ++s) {
    REQUIRE(a.strategies[s].runs.size() == 8);
    for (std::size_t r = 0; r < 8; ++r) {
      CHECK(a.strategies[s].runs[r].f1 == b.strategies[s].runs[r].f1);
      CHECK(a.strategies[s].runs[r].acquired_ids == b.strategies[s].runs[r].acquired_ids);
    }
  }
  // random is put first even when listed later, and is not duplicated
  auto listed = all_strategies();
  std::rotate(listed.begin(), listed.begin() + 1, listed.end());
  const auto c = run_benchmark(ds, listed, protocol);
  CHECK(c.strategies[0].strategy == "random");
  CHECK(c.strategies.size() == 3);
}

TEST_CASE("aggregate: identical curves are never flagged") {
  std::vector<LearningCurve> runs;
  Rng rng(1);
  for (int r = 0; r < 10; ++r)
    for (int f = 0; f < 5; ++f) {
      std::vector<double> f1(20);
      for (auto& v : f1) v = rng.uniform01();
      runs.push_back(flat_curve(r, f, f1));
    }
  const auto report = aggregate_and_compare({{"random", runs}, {"u-ascf", runs}}, "random", 0.1);
  std::size_t strategy_rows = 0;
  for (const auto& row : report.rows) {
    if (row.strategy != "u-ascf") continue;
    ++strategy_rows;
    CHECK(row.flag == Significance::none);
    CHECK(row.p_greater == 1.0);
    CHECK(row.p_less == 1.0);
  }
  CHECK(strategy_rows == 20);
}

TEST_CASE("aggregate: constant shift is flagged better everywhere; statistics match the oracle") {
  std::vector<LearningCurve> base, shifted;
  Rng rng(2);
  for (int r = 0; r < 10; ++r)
    for (int f = 0; f < 5; ++f) {
      std::vector<double> f1(15);
      for (auto& v : f1) v = 0.1 + 0.8 * rng.uniform01();
      base.push_back(flat_curve(r, f, f1));
      for (auto& v : f1) v += 0.05;
      shifted.push_back(flat_curve(r, f, f1));
    }
  const auto report = aggregate_and_compare({{"random", base}, {"s-ascf", shifted}}, "random", 0.1);
  for (const auto& row : report.rows) {
    const auto& src = row.strategy == "random" ? base : shifted;
    std::vector<double> values;
    for (const auto& c : src) values.push_back(c.f1[row.step - 1]);
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    CHECK(row.runs == 50);
    CHECK(std::fabs(row.mean - mean) <= 1e-12);
    CHECK(std::fabs(row.p10 - oracle::percentile_sorted(values, 0.1)) <= 1e-12);
    CHECK(std::fabs(row.p90 - oracle::percentile_sorted(values, 0.9)) <= 1e-12);
    CHECK(row.p10 <= row.p90);
    if (row.strategy == "s-ascf") {
      CHECK(row.flag == Significance::better);
      CHECK(row.p_greater < 1e-6);
    }
  }
}

TEST_CASE("aggregate: pairing violations") {
  std::vector<LearningCurve> a{flat_curve(0, 0, {0.5, 0.6}), flat_curve(0, 1, {0.5, 0.6})};
  std::vector<LearningCurve> b{flat_curve(0, 0, {0.5, 0.6}), flat_curve(1, 1, {0.5, 0.6})};
  try {
    aggregate_and_compare({{"random", a}, {"u-ascf", b}}, "random", 0.1);
    FAIL("expected a pairing error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::pairing);
  }
  auto c = a;
  c[0].cold_start_size = 2;
  c[0].acquired_ids[0] = "other";
  auto d = a;
  d[0].cold_start_size = 2;
  CHECK_THROWS_AS(aggregate_and_compare({{"random", d}, {"u-ascf", c}}, "random", 0.1), Error);
  CHECK_THROWS_AS(aggregate_and_compare({{"u-ascf", a}}, "random", 0.1), Error);
}
