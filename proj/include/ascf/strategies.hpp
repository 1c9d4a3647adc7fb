#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ascf/dataset.hpp"
#include "ascf/learners.hpp"
#include "ascf/rng.hpp"

namespace ascf {

enum class StrategyKind { random, u_ascf, s_ascf };
/// raw: average the per-dimension variances as they are; standardized: divide
/// each by the acquired-set sample variance of that x dimension first.
enum class VarianceMode { raw, standardized };
/// Denominator of the ensemble variance: B (population) or B - 1 (sample).
enum class VarianceEstimator { population, sample };
/// true_label: p = 1 - P(y_j | x_hat_j); predicted_class: p = 1 - max class posterior.
enum class PMode { true_label, predicted_class };
enum class TieBreak { lowest_id, seeded_random };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::random;
  int bootstrap = 10;
  VarianceMode variance_mode = VarianceMode::raw;
  VarianceEstimator variance_estimator = VarianceEstimator::population;
  PMode p_mode = PMode::true_label;
  TieBreak tie_break = TieBreak::lowest_id;
  LogisticOptions classifier;

  void validate() const;
  /// "random", "u-ascf" or "s-ascf".
  std::string name() const;
  nlohmann::json to_json() const;
};

StrategyKind parse_strategy_kind(std::string_view text);
VarianceMode parse_variance_mode(std::string_view text);
VarianceEstimator parse_variance_estimator(std::string_view text);
PMode parse_p_mode(std::string_view text);
TieBreak parse_tie_break(std::string_view text);
std::string to_string(StrategyKind kind);
std::string to_string(VarianceMode mode);
std::string to_string(VarianceEstimator estimator);
std::string to_string(PMode mode);
std::string to_string(TieBreak tie_break);

struct UtilityScore {
  std::size_t row = 0;
  double value = 0.0;
};

/// Average over the D classification dimensions of the spread of the ensemble
/// members' imputations at z. `dim_variance`, when given, holds one divisor
/// per dimension (already floored).
double u_ascf_utility(const BootstrapEnsemble& ensemble, const Eigen::Ref<const Eigen::VectorXd>& z,
                      VarianceEstimator estimator = VarianceEstimator::population,
                      const Eigen::VectorXd* dim_variance = nullptr);

/// Asymmetry parameter 0.5 + 1 / (2 n) for n already acquired instances.
double asymmetry_b(std::size_t n_acquired);

/// p (1 - p) / ((1 - 2b) p + b^2). At the single singular corner (b = 1,
/// p = 1) the limit p is returned.
double s_ascf_utility(double p, double b);

/// What a strategy may look at: the selection vectors of every row in the
/// pool and, if visible, their labels (-1 for an unknown label).
struct PoolView {
  const Eigen::MatrixXd& z;
  std::span<const int> labels;
};

/// Whether the acquired set is rich enough for the strategy to score
/// candidates: two acquired rows for u-ascf, both classes for s-ascf.
bool ready_to_score(const StrategyConfig& config, const AcquisitionState& state, const PoolView& pool);

/// Utility of every candidate, in candidate order. `model_seed` drives the
/// bootstrap resampling of u-ascf. Not defined for the random strategy.
std::vector<UtilityScore> score_candidates(const StrategyConfig& config, const AcquisitionState& state,
                                           const PoolView& pool, bool labels_visible,
                                           std::uint64_t model_seed);

/// Argmax with ties resolved per `tie_break` (lowest row first, or a uniform
/// draw among the tied rows).
std::size_t argmax_utility(std::span<const UtilityScore> scores, TieBreak tie_break, Rng& rng);

/// Next row to acquire. The random strategy draws uniformly from S; the others
/// score every candidate and take the argmax.
std::size_t select_next(const StrategyConfig& config, const AcquisitionState& state, const PoolView& pool,
                        bool labels_visible, Rng& rng);

}  // namespace ascf
