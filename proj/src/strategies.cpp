#include "ascf/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ascf/error.hpp"

namespace ascf {

void StrategyConfig::validate() const {
  if (kind == StrategyKind::u_ascf && bootstrap < 2) {
    throw Error(ErrorKind::precondition, "u-ascf needs a bootstrap ensemble of at least 2 members");
  }
  if (!(classifier.C > 0.0)) throw Error(ErrorKind::precondition, "classifier C must be positive");
}

std::string StrategyConfig::name() const { return to_string(kind); }

nlohmann::json StrategyConfig::to_json() const {
  nlohmann::json doc{{"strategy", name()}, {"tie_break", to_string(tie_break)}};
  if (kind == StrategyKind::u_ascf) {
    doc["bootstrap"] = bootstrap;
    doc["variance_mode"] = to_string(variance_mode);
    doc["variance_estimator"] = to_string(variance_estimator);
  }
  if (kind == StrategyKind::s_ascf) doc["p_mode"] = to_string(p_mode);
  return doc;
}

StrategyKind parse_strategy_kind(std::string_view text) {
  if (text == "random") return StrategyKind::random;
  if (text == "u-ascf" || text == "u_ascf") return StrategyKind::u_ascf;
  if (text == "s-ascf" || text == "s_ascf") return StrategyKind::s_ascf;
  throw Error(ErrorKind::precondition, "unknown strategy '" + std::string(text) + "'");
}

VarianceMode parse_variance_mode(std::string_view text) {
  if (text == "raw") return VarianceMode::raw;
  if (text == "standardized") return VarianceMode::standardized;
  throw Error(ErrorKind::precondition, "unknown variance mode '" + std::string(text) + "'");
}

VarianceEstimator parse_variance_estimator(std::string_view text) {
  if (text == "population") return VarianceEstimator::population;
  if (text == "sample") return VarianceEstimator::sample;
  throw Error(ErrorKind::precondition, "unknown variance estimator '" + std::string(text) + "'");
}

PMode parse_p_mode(std::string_view text) {
  if (text == "true-label" || text == "true_label") return PMode::true_label;
  if (text == "predicted-class" || text == "predicted_class") return PMode::predicted_class;
  throw Error(ErrorKind::precondition, "unknown p mode '" + std::string(text) + "'");
}

TieBreak parse_tie_break(std::string_view text) {
  if (text == "lowest-id" || text == "lowest_id") return TieBreak::lowest_id;
  if (text == "seeded-random" || text == "seeded_random") return TieBreak::seeded_random;
  throw Error(ErrorKind::precondition, "unknown tie break '" + std::string(text) + "'");
}

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::random: return "random";
    case StrategyKind::u_ascf: return "u-ascf";
    case StrategyKind::s_ascf: return "s-ascf";
  }
  return "?";
}
std::string to_string(VarianceMode mode) { return mode == VarianceMode::raw ? "raw" : "standardized"; }
std::string to_string(VarianceEstimator e) { return e == VarianceEstimator::population ? "population" : "sample"; }
std::string to_string(PMode mode) { return mode == PMode::true_label ? "true-label" : "predicted-class"; }
std::string to_string(TieBreak t) { return t == TieBreak::lowest_id ? "lowest-id" : "seeded-random"; }

double u_ascf_utility(const BootstrapEnsemble& ensemble, const Eigen::Ref<const Eigen::VectorXd>& z,
                      VarianceEstimator estimator, const Eigen::VectorXd* dim_variance) {
  const std::size_t b = ensemble.size();
  if (b < 2) throw Error(ErrorKind::precondition, "ensemble needs at least 2 members");
  const Eigen::Index d = ensemble.members.front().weights.rows();
  Eigen::MatrixXd predictions(static_cast<Eigen::Index>(b), d);
  for (std::size_t i = 0; i < b; ++i) predictions.row(static_cast<Eigen::Index>(i)) = ensemble.members[i].predict(z).transpose();

  const Eigen::RowVectorXd mean = predictions.colwise().mean();
  const double denom = estimator == VarianceEstimator::population ? static_cast<double>(b) : static_cast<double>(b - 1);
  Eigen::VectorXd variance = ((predictions.rowwise() - mean).array().square().colwise().sum() / denom).transpose();
  if (dim_variance) {
    if (dim_variance->size() != d) throw Error(ErrorKind::shape, "one variance divisor per dimension required");
    variance = variance.cwiseQuotient(*dim_variance);
  }
  return variance.mean();
}

double asymmetry_b(std::size_t n_acquired) {
  if (n_acquired == 0) throw Error(ErrorKind::precondition, "asymmetry parameter needs at least one acquired instance");
  return 0.5 + 1.0 / (2.0 * static_cast<double>(n_acquired));
}

double s_ascf_utility(double p, double b) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::domain, "misclassification probability outside [0, 1]");
  const double denominator = (-2.0 * b + 1.0) * p + b * b;
  if (denominator < 1e-12) return p;
  return p * (1.0 - p) / denominator;
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> labels_of(std::span<const int> labels, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

}  // namespace

bool ready_to_score(const StrategyConfig& config, const AcquisitionState& state, const PoolView& pool) {
  switch (config.kind) {
    case StrategyKind::random: return true;
    case StrategyKind::u_ascf: return state.acquired().size() >= 2;
    case StrategyKind::s_ascf: {
      if (pool.labels.empty()) return false;
      bool seen[2] = {false, false};
      for (std::size_t r : state.acquired()) {
        const int y = pool.labels[r];
        if (y == 0 || y == 1) seen[y] = true;
      }
      return seen[0] && seen[1];
    }
  }
  return false;
}

std::vector<UtilityScore> score_candidates(const StrategyConfig& config, const AcquisitionState& state,
                                           const PoolView& pool, bool labels_visible,
                                           std::uint64_t model_seed) {
  config.validate();
  const auto& candidates = state.candidates();
  if (candidates.empty()) throw Error(ErrorKind::exhausted, "no candidates left");
  if (config.kind == StrategyKind::random) {
    throw Error(ErrorKind::contract, "the random strategy does not score candidates");
  }

  const std::vector<std::size_t> acquired = state.acquired_sorted();
  const Eigen::MatrixXd z_acq = rows_of(pool.z, acquired);
  const Eigen::MatrixXd x_acq = state.revealed_matrix();
  std::vector<UtilityScore> scores;
  scores.reserve(candidates.size());

  if (config.kind == StrategyKind::u_ascf) {
    if (acquired.size() < 2) throw Error(ErrorKind::precondition, "u-ascf needs at least 2 acquired instances");
    const BootstrapEnsemble ensemble = fit_bootstrap_ensemble(z_acq, x_acq, config.bootstrap, model_seed);
    Eigen::VectorXd divisor;
    if (config.variance_mode == VarianceMode::standardized) {
      const Eigen::RowVectorXd mean = x_acq.colwise().mean();
      divisor = ((x_acq.rowwise() - mean).array().square().colwise().sum() /
                 static_cast<double>(x_acq.rows() - 1))
                    .transpose()
                    .cwiseMax(1e-12);
    }
    for (std::size_t row : candidates) {
      const double u = u_ascf_utility(ensemble, pool.z.row(static_cast<Eigen::Index>(row)).transpose(),
                                      config.variance_estimator,
                                      config.variance_mode == VarianceMode::standardized ? &divisor : nullptr);
      scores.push_back({row, u});
    }
    return scores;
  }

  // s-ascf
  if (!labels_visible || pool.labels.empty()) {
    throw Error(ErrorKind::contract, "s-ascf needs the candidates' labels");
  }
  const std::vector<int> y_acq = labels_of(pool.labels, acquired);
  const ProbClassifier f = fit_logistic(x_acq, y_acq, config.classifier);
  const LinearModel h = fit_linear(z_acq, x_acq);
  const double b = asymmetry_b(acquired.size());
  for (std::size_t row : candidates) {
    const Eigen::VectorXd x_hat = h.predict(pool.z.row(static_cast<Eigen::Index>(row)).transpose());
    const double posterior = f.posterior(x_hat);
    double p = 0.0;
    if (config.p_mode == PMode::true_label) {
      const int y = pool.labels[row];
      if (y != 0 && y != 1) throw Error(ErrorKind::contract, "candidate row " + std::to_string(row) + " has no label");
      p = 1.0 - (y == 1 ? posterior : 1.0 - posterior);
    } else {
      p = 1.0 - std::max(posterior, 1.0 - posterior);
    }
    scores.push_back({row, s_ascf_utility(std::clamp(p, 0.0, 1.0), b)});
  }
  return scores;
}

std::size_t argmax_utility(std::span<const UtilityScore> scores, TieBreak tie_break, Rng& rng) {
  if (scores.empty()) throw Error(ErrorKind::exhausted, "no candidates to choose from");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : scores) best = std::max(best, s.value);
  std::vector<std::size_t> tied;
  for (const auto& s : scores) {
    if (s.value == best) tied.push_back(s.row);
  }
  std::sort(tied.begin(), tied.end());
  if (tie_break == TieBreak::lowest_id || tied.size() == 1) return tied.front();
  return tied[rng.uniform_index(tied.size())];
}

std::size_t select_next(const StrategyConfig& config, const AcquisitionState& state, const PoolView& pool,
                        bool labels_visible, Rng& rng) {
  const auto& candidates = state.candidates();
  if (candidates.empty()) throw Error(ErrorKind::exhausted, "no candidates left");
  if (config.kind == StrategyKind::s_ascf && !labels_visible) {
    throw Error(ErrorKind::contract, "s-ascf needs the candidates' labels");
  }
  if (config.kind == StrategyKind::random) return candidates[rng.uniform_index(candidates.size())];
  const std::uint64_t model_seed = rng.next();
  if (candidates.size() == 1) return candidates.front();
  const auto scores = score_candidates(config, state, pool, labels_visible, model_seed);
  return argmax_utility(scores, config.tie_break, rng);
}

}  // namespace ascf
