#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ascf/dataset.hpp"

namespace ascf {

// ---------------------------------------------------------------------------
// Auxiliary regressor h: z -> x
// ---------------------------------------------------------------------------

/// Multi-output affine map x_hat = weights * z + intercepts.
struct LinearModel {
  Eigen::MatrixXd weights;     // D x M
  Eigen::VectorXd intercepts;  // D

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// One prediction per row of `z` (n x M) -> n x D.
  Eigen::MatrixXd predict_rows(const Eigen::Ref<const Eigen::MatrixXd>& z) const;

  nlohmann::json to_json() const;
};

/// Least squares fit of every output column of `x` on `z` with a free
/// intercept. Inputs are centred and the slope block is solved with a complete
/// orthogonal decomposition, so rank-deficient and underdetermined designs get
/// the minimum-norm weights (the intercept itself is not part of the norm).
LinearModel fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& z,
                       const Eigen::Ref<const Eigen::MatrixXd>& x);

struct BootstrapEnsemble {
  std::vector<LinearModel> members;
  std::vector<std::uint64_t> member_seeds;
  /// Fewer than two distinct training rows: all members coincide.
  bool degenerate = false;

  std::size_t size() const noexcept { return members.size(); }
};

/// B members, member b fitted on n rows drawn with replacement using the seed
/// derive_seed(seed, b).
BootstrapEnsemble fit_bootstrap_ensemble(const Eigen::Ref<const Eigen::MatrixXd>& z,
                                         const Eigen::Ref<const Eigen::MatrixXd>& x, int B,
                                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Primary classifier f: x -> y
// ---------------------------------------------------------------------------

/// Per-dimension centring and scaling fitted on training rows. Dimensions
/// with zero variance are inactive and always map to 0.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // 0 marks an inactive dimension

  static Standardizer fit(const Eigen::Ref<const Eigen::MatrixXd>& x);
  Eigen::MatrixXd transform(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
  Eigen::VectorXd transform_one(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct LogisticOptions {
  double C = 1.0;
  double tol = 1e-6;
  int max_iter = 200;
};

/// L2-regularised logistic regression on standardized inputs. `weights` live
/// in the standardized space; the intercept is unpenalised.
struct ProbClassifier {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double C = 1.0;
  Standardizer standardizer;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// P(y = positive | x), strictly inside (0, 1).
  double posterior(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::VectorXd>& x) const { return posterior(x) >= 0.5 ? 1 : 0; }
  std::vector<int> predict_rows(const Eigen::Ref<const Eigen::MatrixXd>& x) const;

  nlohmann::json to_json() const;
};

/// Penalised negative log-likelihood
///   0.5 * |w|^2 + C * sum_i [log(1 + exp(t_i)) - y_i * t_i],  t = X w + b
/// over an already standardized design. params = (w_1..w_D, b).
double logistic_objective(const Eigen::Ref<const Eigen::MatrixXd>& x_std, std::span<const int> y,
                          const Eigen::Ref<const Eigen::VectorXd>& params, double C);
Eigen::VectorXd logistic_gradient(const Eigen::Ref<const Eigen::MatrixXd>& x_std, std::span<const int> y,
                                  const Eigen::Ref<const Eigen::VectorXd>& params, double C);

/// Damped Newton iterations with Armijo backtracking; throws single_class when
/// `y` holds only one class. Non-convergence is reported through the result.
ProbClassifier fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& x, std::span<const int> y,
                            const LogisticOptions& options = {});

// ---------------------------------------------------------------------------
// Recursive feature elimination
// ---------------------------------------------------------------------------

struct RfeResult {
  /// Classification-feature columns, eliminated first to last; the final
  /// survivor comes last.
  std::vector<std::size_t> ranking;
  std::size_t optimal_count = 0;
  /// Mean cross-validated F1 for each surviving-set size that was evaluated,
  /// indexed by size - 1 (NaN for sizes skipped when step > 1).
  std::vector<double> cv_f1;
};

/// Repeatedly fits the classifier on the surviving features, drops the
/// `step` features with the smallest absolute standardized coefficient and
/// records k-fold F1. optimal_count maximises mean F1, ties to fewer features.
RfeResult rfe_select(const Dataset& dataset, int k, std::uint64_t seed, int step = 1,
                     const LogisticOptions& options = {});

}  // namespace ascf
