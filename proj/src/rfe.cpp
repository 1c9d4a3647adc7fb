#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ascf/error.hpp"
#include "ascf/learners.hpp"
#include "ascf/stats.hpp"

namespace ascf {

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    }
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

RfeResult rfe_select(const Dataset& dataset, int k, std::uint64_t seed, int step,
                     const LogisticOptions& options) {
  if (step < 1) throw Error(ErrorKind::precondition, "step must be at least 1");
  const auto d = static_cast<std::size_t>(dataset.classification_dim());
  if (d < 1) throw Error(ErrorKind::precondition, "no classification features to rank");

  const SplitPlan plan = make_splits(dataset, 1, k, seed);
  std::vector<std::size_t> all_rows(dataset.size());
  std::iota(all_rows.begin(), all_rows.end(), 0);

  RfeResult result;
  result.cv_f1.assign(d, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> surviving(d);
  std::iota(surviving.begin(), surviving.end(), 0);

  while (!surviving.empty()) {
    double total = 0.0;
    for (const Fold& fold : plan.assignments) {
      const auto model = fit_logistic(gather(dataset.x(), fold.train, surviving),
                                      gather_labels(dataset.y(), fold.train), options);
      const auto predicted = model.predict_rows(gather(dataset.x(), fold.test, surviving));
      total += f1_score(gather_labels(dataset.y(), fold.test), predicted);
    }
    result.cv_f1[surviving.size() - 1] = total / static_cast<double>(plan.assignments.size());

    if (surviving.size() == 1) {
      result.ranking.push_back(surviving.front());
      break;
    }
    const auto model = fit_logistic(gather(dataset.x(), all_rows, surviving), dataset.y(), options);
    std::vector<std::size_t> order(surviving.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(model.weights(static_cast<Eigen::Index>(a))) <
             std::abs(model.weights(static_cast<Eigen::Index>(b)));
    });
    const std::size_t drop = std::min(static_cast<std::size_t>(step), surviving.size() - 1);
    std::vector<std::size_t> removed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop));
    for (std::size_t pos : removed) result.ranking.push_back(surviving[pos]);
    std::sort(removed.begin(), removed.end(), std::greater<>());
    for (std::size_t pos : removed) surviving.erase(surviving.begin() + static_cast<std::ptrdiff_t>(pos));
  }

  double best = -1.0;
  for (std::size_t count = 1; count <= d; ++count) {
    const double score = result.cv_f1[count - 1];
    if (!std::isnan(score) && score > best) {
      best = score;
      result.optimal_count = count;
    }
  }
  return result;
}

}  // namespace ascf
