#include "ascf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "ascf/error.hpp"

namespace ascf {

namespace {

constexpr std::uint64_t kRunStream = 0x52554eULL;     // "RUN"
constexpr std::uint64_t kColdStream = 0x434f4c44ULL;  // "COLD"
constexpr std::uint64_t kPickStream = 0x5049434bULL;  // "PICK"

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<std::size_t> cold_start_rows(const Dataset& dataset, const Fold& split, const ColdStart& cold,
                                         Rng& rng) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t row : split.train) by_class[dataset.y()[row]].push_back(row);
  if (by_class[0].empty() || by_class[1].empty()) {
    throw Error(ErrorKind::single_class, "train pool lacks one of the classes; cannot seed a classifier");
  }
  std::vector<std::size_t> picked;
  if (cold.kind == ColdStartKind::stratified_pair) {
    const std::size_t neg = by_class[0][rng.uniform_index(by_class[0].size())];
    const std::size_t pos = by_class[1][rng.uniform_index(by_class[1].size())];
    picked = {std::min(neg, pos), std::max(neg, pos)};
    return picked;
  }
  std::vector<std::size_t> order = split.train;
  rng.shuffle(std::span<std::size_t>(order));
  bool seen[2] = {false, false};
  for (std::size_t row : order) {
    if (picked.size() >= cold.n && seen[0] && seen[1]) break;
    picked.push_back(row);
    seen[dataset.y()[row]] = true;
  }
  return picked;
}

}  // namespace

ColdStart parse_cold_start(std::string_view text) {
  if (text == "stratified-pair" || text == "stratified_pair") return {};
  for (std::string_view prefix : {"random-", "random_"}) {
    if (text.starts_with(prefix)) {
      auto n = parse_double(text.substr(prefix.size()));
      if (n && *n >= 1 && std::floor(*n) == *n) return {ColdStartKind::random_n, static_cast<std::size_t>(*n)};
    }
  }
  throw Error(ErrorKind::precondition, "cold start must be 'stratified-pair' or 'random-<n>'");
}

std::string to_string(const ColdStart& cold_start) {
  if (cold_start.kind == ColdStartKind::stratified_pair) return "stratified-pair";
  return "random-" + std::to_string(cold_start.n);
}

void ProtocolConfig::validate() const {
  if (repeats < 1) throw Error(ErrorKind::precondition, "repeats must be at least 1");
  if (k < 2) throw Error(ErrorKind::precondition, "k must be at least 2");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw Error(ErrorKind::precondition, "alpha must lie in (0, 0.5]");
  if (cold_start.kind == ColdStartKind::random_n && cold_start.n < 1) {
    throw Error(ErrorKind::precondition, "random cold start needs n >= 1");
  }
  if (max_steps && *max_steps < 1) throw Error(ErrorKind::precondition, "max_steps must be positive");
}

nlohmann::json ProtocolConfig::to_json() const {
  nlohmann::json doc{{"repeats", repeats},
                     {"k", k},
                     {"alpha", alpha},
                     {"seed", seed},
                     {"cold_start", to_string(cold_start)},
                     {"classifier", {{"model", "logistic regression, L2"}, {"C", classifier.C},
                                     {"tol", classifier.tol}, {"max_iter", classifier.max_iter}}}};
  doc["max_steps"] = max_steps ? nlohmann::json(*max_steps) : nlohmann::json(nullptr);
  return doc;
}

std::uint64_t run_seed_for(std::uint64_t seed, int repeat, int fold) {
  return derive_seed(seed, kRunStream, static_cast<std::uint64_t>(repeat), static_cast<std::uint64_t>(fold));
}

LearningCurve run_simulation(const Dataset& dataset, const Fold& split, const StrategyConfig& strategy,
                             const ProtocolConfig& protocol, std::uint64_t run_seed, int repeat, int fold) {
  strategy.validate();
  {
    std::vector<std::size_t> train = split.train, test = split.test;
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    std::vector<std::size_t> both;
    std::set_intersection(train.begin(), train.end(), test.begin(), test.end(), std::back_inserter(both));
    if (!both.empty()) throw Error(ErrorKind::precondition, "train and test folds overlap");
    if ((!train.empty() && train.back() >= dataset.size()) || (!test.empty() && test.back() >= dataset.size())) {
      throw Error(ErrorKind::precondition, "split refers to rows outside the dataset");
    }
    if (test.empty()) throw Error(ErrorKind::precondition, "empty test fold");
  }

  LearningCurve curve;
  curve.repeat = repeat;
  curve.fold = fold;
  curve.strategy = strategy.name();

  const Eigen::MatrixXd x_test = rows_of(dataset.x(), split.test);
  std::vector<int> y_test;
  y_test.reserve(split.test.size());
  for (std::size_t row : split.test) y_test.push_back(dataset.y()[row]);

  AcquisitionState state(split.train);
  const PoolView pool{dataset.z(), dataset.y()};
  const std::size_t limit = protocol.max_steps ? std::min(*protocol.max_steps, split.train.size()) : split.train.size();
  std::size_t pending = 0;  // steps awaiting the first trainable model
  bool seen[2] = {false, false};

  auto record = [&](std::size_t row) {
    state = acquire(std::move(state), row, dataset);
    curve.acquired_ids.push_back(dataset.ids()[row]);
    seen[dataset.y()[row]] = true;
    if (!(seen[0] && seen[1])) {
      ++pending;
      return;
    }
    const std::vector<std::size_t> rows = state.acquired_sorted();
    std::vector<int> y_train;
    y_train.reserve(rows.size());
    for (std::size_t r : rows) y_train.push_back(dataset.y()[r]);
    const ProbClassifier f = fit_logistic(state.revealed_matrix(), y_train, protocol.classifier);
    const double score = f1_score(y_test, f.predict_rows(x_test));
    for (; pending > 0; --pending) curve.f1.push_back(score);
    curve.f1.push_back(score);
  };

  Rng cold_rng(derive_seed(run_seed, kColdStream));
  for (std::size_t row : cold_start_rows(dataset, split, protocol.cold_start, cold_rng)) {
    if (curve.acquired_ids.size() >= limit) break;
    record(row);
  }
  curve.cold_start_size = curve.acquired_ids.size();

  Rng pick_rng(derive_seed(run_seed, kPickStream));
  while (!state.candidates().empty() && curve.acquired_ids.size() < limit) {
    std::size_t row = 0;
    try {
      row = select_next(strategy, state, pool, true, pick_rng);
    } catch (const Error& e) {
      throw Error(e.kind(), "run (" + std::to_string(repeat) + ", " + std::to_string(fold) + ") of " +
                                curve.strategy + " aborted at step " +
                                std::to_string(curve.acquired_ids.size() + 1) + ": " + e.what());
    }
    record(row);
  }

  for (std::size_t row : split.test) {
    if (state.is_acquired(row)) throw Error(ErrorKind::contract, "test row entered the acquired pool");
  }
  // a run capped before both classes appear never had a trainable model;
  // its pending steps carry no F1 and are dropped
  curve.acquired_ids.resize(curve.f1.size());
  return curve;
}

BenchmarkResult run_benchmark(const Dataset& dataset, std::vector<StrategyConfig> strategies,
                              const ProtocolConfig& protocol) {
  protocol.validate();
  auto has_random = std::find_if(strategies.begin(), strategies.end(),
                                 [](const StrategyConfig& s) { return s.kind == StrategyKind::random; });
  if (has_random == strategies.end()) {
    strategies.insert(strategies.begin(), StrategyConfig{});
  } else if (has_random != strategies.begin()) {
    std::rotate(strategies.begin(), has_random, has_random + 1);
  }
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    strategies[i].validate();
    strategies[i].classifier = protocol.classifier;
    for (std::size_t j = 0; j < i; ++j) {
      if (strategies[j].kind == strategies[i].kind) {
        throw Error(ErrorKind::precondition, "strategy " + strategies[i].name() + " listed twice");
      }
    }
  }

  BenchmarkResult result;
  result.plan = make_splits(dataset, protocol.repeats, protocol.k, protocol.seed);
  const std::size_t runs_per_strategy = result.plan.assignments.size();
  const std::size_t jobs = strategies.size() * runs_per_strategy;

  std::vector<LearningCurve> curves(jobs);
  std::vector<std::exception_ptr> failures(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t s = job / runs_per_strategy;
      const std::size_t run = job % runs_per_strategy;
      const int repeat = static_cast<int>(run) / protocol.k;
      const int fold = static_cast<int>(run) % protocol.k;
      try {
        curves[job] = run_simulation(dataset, result.plan.at(repeat, fold), strategies[s], protocol,
                                     run_seed_for(protocol.seed, repeat, fold), repeat, fold);
      } catch (...) {
        failures[job] = std::current_exception();
      }
    }
  };
  unsigned threads = protocol.threads ? protocol.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  for (std::size_t s = 0; s < strategies.size(); ++s) {
    StrategyRuns runs{strategies[s].name(), {}};
    for (std::size_t run = 0; run < runs_per_strategy; ++run) runs.runs.push_back(std::move(curves[s * runs_per_strategy + run]));
    result.strategies.push_back(std::move(runs));
  }
  return result;
}

std::string to_string(Significance flag) {
  switch (flag) {
    case Significance::none: return "none";
    case Significance::better: return "better";
    case Significance::worse: return "worse";
  }
  return "none";
}

Significance parse_significance(std::string_view text) {
  if (text == "better") return Significance::better;
  if (text == "worse") return Significance::worse;
  if (text == "none") return Significance::none;
  throw Error(ErrorKind::parse, "unknown significance flag '" + std::string(text) + "'");
}

ComparisonReport aggregate_and_compare(const std::vector<StrategyRuns>& strategies, const std::string& baseline,
                                       double alpha) {
  if (!(alpha > 0.0 && alpha <= 0.5)) throw Error(ErrorKind::precondition, "alpha must lie in (0, 0.5]");
  using Key = std::pair<int, int>;
  auto index = [](const StrategyRuns& s) {
    std::map<Key, const LearningCurve*> out;
    for (const auto& run : s.runs) {
      if (!out.emplace(Key{run.repeat, run.fold}, &run).second) {
        throw Error(ErrorKind::pairing, s.strategy + " has run (" + std::to_string(run.repeat) + ", " +
                                            std::to_string(run.fold) + ") twice");
      }
    }
    return out;
  };

  auto base_it = std::find_if(strategies.begin(), strategies.end(),
                              [&](const StrategyRuns& s) { return s.strategy == baseline; });
  if (base_it == strategies.end()) throw Error(ErrorKind::pairing, "baseline '" + baseline + "' has no runs");
  const auto base = index(*base_it);
  if (base.empty()) throw Error(ErrorKind::pairing, "baseline '" + baseline + "' has no runs");

  ComparisonReport report;
  report.alpha = alpha;
  report.baseline = baseline;

  for (const auto& strategy : strategies) {
    const auto runs = index(strategy);
    if (runs.size() != base.size()) throw Error(ErrorKind::pairing, strategy.strategy + " and " + baseline + " have different run sets");
    std::size_t longest = 0;
    for (const auto& [key, curve] : runs) {
      auto partner = base.find(key);
      if (partner == base.end()) {
        throw Error(ErrorKind::pairing, strategy.strategy + " run (" + std::to_string(key.first) + ", " +
                                            std::to_string(key.second) + ") has no baseline partner");
      }
      const LearningCurve& other = *partner->second;
      if (other.f1.size() != curve->f1.size()) {
        throw Error(ErrorKind::pairing, "run (" + std::to_string(key.first) + ", " + std::to_string(key.second) +
                                            ") has different lengths for " + strategy.strategy + " and " + baseline);
      }
      const std::size_t shared = std::min(curve->cold_start_size, other.cold_start_size);
      if (curve->cold_start_size != other.cold_start_size ||
          !std::equal(curve->acquired_ids.begin(), curve->acquired_ids.begin() + static_cast<std::ptrdiff_t>(std::min(shared, curve->acquired_ids.size())),
                      other.acquired_ids.begin())) {
        throw Error(ErrorKind::pairing, "run (" + std::to_string(key.first) + ", " + std::to_string(key.second) +
                                            ") uses different cold-start draws");
      }
      longest = std::max(longest, curve->f1.size());
    }

    for (std::size_t step = 1; step <= longest; ++step) {
      std::vector<double> values, diffs;
      for (const auto& [key, curve] : runs) {
        if (curve->f1.size() < step) continue;
        values.push_back(curve->f1[step - 1]);
        diffs.push_back(curve->f1[step - 1] - base.at(key)->f1[step - 1]);
      }
      StepStats row;
      row.strategy = strategy.strategy;
      row.step = step;
      row.runs = values.size();
      double sum = 0.0;
      for (double v : values) sum += v;
      row.mean = sum / static_cast<double>(values.size());
      row.p10 = percentile_linear(values, 0.10);
      row.p90 = percentile_linear(values, 0.90);
      row.p_greater = wilcoxon_signed_rank(diffs, Alternative::greater);
      row.p_less = wilcoxon_signed_rank(diffs, Alternative::less);
      if (row.p_greater <= alpha) {
        row.flag = Significance::better;
      } else if (row.p_less <= alpha) {
        row.flag = Significance::worse;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace ascf
