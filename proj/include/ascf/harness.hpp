#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ascf/dataset.hpp"
#include "ascf/learners.hpp"
#include "ascf/stats.hpp"
#include "ascf/strategies.hpp"

namespace ascf {

enum class ColdStartKind { stratified_pair, random_n };

/// Seed acquisitions made before any strategy is consulted.
///   stratified_pair: one uniformly drawn training instance per class.
///   random_n: n uniform draws, extended until both classes are present.
struct ColdStart {
  ColdStartKind kind = ColdStartKind::stratified_pair;
  std::size_t n = 2;
};

ColdStart parse_cold_start(std::string_view text);
std::string to_string(const ColdStart& cold_start);

struct ProtocolConfig {
  int repeats = 10;
  int k = 5;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  ColdStart cold_start;
  std::optional<std::size_t> max_steps;
  LogisticOptions classifier;
  /// Worker threads for run_benchmark; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Test F1 after every acquisition of one (repeat, fold) run. Entry s - 1
/// belongs to |A| = s. Cold-start acquisitions made before both classes are
/// present carry the F1 of the first trainable model.
struct LearningCurve {
  int repeat = 0;
  int fold = 0;
  std::string strategy;
  std::vector<double> f1;
  std::vector<std::string> acquired_ids;
  std::size_t cold_start_size = 0;
};

/// Seed shared by every strategy for run (repeat, fold), which makes the
/// cold-start draw identical across strategies and keeps tests paired.
std::uint64_t run_seed_for(std::uint64_t seed, int repeat, int fold);

LearningCurve run_simulation(const Dataset& dataset, const Fold& split, const StrategyConfig& strategy,
                             const ProtocolConfig& protocol, std::uint64_t run_seed, int repeat = 0,
                             int fold = 0);

struct StrategyRuns {
  std::string strategy;
  std::vector<LearningCurve> runs;
};

struct BenchmarkResult {
  SplitPlan plan;
  /// The random baseline always comes first.
  std::vector<StrategyRuns> strategies;
};

/// Every strategy on every (repeat, fold) of a stratified split plan. Runs are
/// distributed over worker threads; output does not depend on the thread count.
BenchmarkResult run_benchmark(const Dataset& dataset, std::vector<StrategyConfig> strategies,
                              const ProtocolConfig& protocol);

enum class Significance { none, better, worse };
std::string to_string(Significance flag);
Significance parse_significance(std::string_view text);

struct StepStats {
  std::string strategy;
  std::size_t step = 0;
  std::size_t runs = 0;
  double mean = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double p_greater = 1.0;
  double p_less = 1.0;
  Significance flag = Significance::none;
};

struct ComparisonReport {
  double alpha = 0.1;
  std::string baseline;
  std::vector<StepStats> rows;

  static constexpr const char* kPercentileMethod = "linear interpolation between closest ranks, h = (n-1)q";
};

/// Per step: mean and 10th/90th percentile of F1 over the runs reaching that
/// step; per non-baseline strategy: paired one-sided Wilcoxon tests in both
/// directions against the baseline. Throws pairing if the run sets differ.
ComparisonReport aggregate_and_compare(const std::vector<StrategyRuns>& strategies,
                                       const std::string& baseline, double alpha);

}  // namespace ascf
