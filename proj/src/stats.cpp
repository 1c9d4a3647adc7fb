#include "ascf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ascf/error.hpp"

namespace ascf {

double f1_score(std::span<const int> y_true, std::span<const int> y_pred, int positive) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorKind::shape, "label sequences differ in length");
  if (y_true.empty()) throw Error(ErrorKind::precondition, "f1_score needs at least one label");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] == positive;
    const bool pred = y_pred[i] == positive;
    tp += truth && pred;
    fp += !truth && pred;
    fn += truth && !pred;
  }
  if (tp + fp == 0 || tp + fn == 0 || tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<long> doubled_average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<long> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank ((i+1) + (j+1)) / 2
    const long doubled = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
    i = j + 1;
  }
  return ranks;
}

double wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative) {
  if (diffs.empty()) throw Error(ErrorKind::precondition, "wilcoxon_signed_rank needs at least one difference");
  std::vector<double> magnitude;
  std::vector<bool> positive;
  for (double d : diffs) {
    if (!std::isfinite(d)) throw Error(ErrorKind::domain, "non-finite difference");
    if (d == 0.0) continue;
    magnitude.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  const std::size_t n = magnitude.size();
  if (n == 0) return 1.0;

  const std::vector<long> ranks = doubled_average_ranks(magnitude);
  long w_plus = 0;  // doubled
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i]) w_plus += ranks[i];
  }

  if (n <= kExactLimit) {
    const long total = std::accumulate(ranks.begin(), ranks.end(), 0L);
    // counts[s] = number of sign patterns whose doubled W+ equals s
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : ranks) {
      for (long s = reach; s >= 0; --s) {
        if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    double tail = 0.0;
    if (alternative == Alternative::greater) {
      for (long s = w_plus; s <= total; ++s) tail += counts[static_cast<std::size_t>(s)];
    } else {
      for (long s = 0; s <= w_plus; ++s) tail += counts[static_cast<std::size_t>(s)];
    }
    return tail / std::ldexp(1.0, static_cast<int>(n));
  }

  const double nn = static_cast<double>(n);
  const double w = 0.5 * static_cast<double>(w_plus);
  const double mean = nn * (nn + 1.0) / 4.0;
  double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  {
    std::vector<long> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      variance -= (t * t * t - t) / 48.0;
      i = j;
    }
  }
  const double sd = std::sqrt(variance);
  double p = 0.0;
  if (alternative == Alternative::greater) {
    const double z = (w - mean - 0.5) / sd;
    p = 0.5 * std::erfc(z / std::sqrt(2.0));
  } else {
    const double z = (w - mean + 0.5) / sd;
    p = 0.5 * std::erfc(-z / std::sqrt(2.0));
  }
  return std::min(1.0, p);
}

double percentile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::precondition, "percentile of an empty sample");
  if (q < 0.0 || q > 1.0) throw Error(ErrorKind::domain, "percentile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

}  // namespace ascf
