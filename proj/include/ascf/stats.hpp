#pragma once

#include <span>
#include <vector>

namespace ascf {

/// Harmonic mean of precision and recall for the `positive` label. Returns 0
/// whenever precision or recall is undefined or both are zero.
double f1_score(std::span<const int> y_true, std::span<const int> y_pred, int positive = 1);

enum class Alternative { greater, less };

/// One-sided Wilcoxon signed-rank p-value for paired differences.
///
/// Zero differences are dropped and tied magnitudes get average ranks. With at
/// most `kExactLimit` nonzero differences the null distribution of W+ is
/// enumerated exactly (by convolution over the ranks, equivalent to walking
/// all 2^n sign patterns); above that a normal approximation with tie and
/// continuity corrections is used. All-zero input gives p = 1.
///
///   greater: P(W+ >= observed)      less: P(W+ <= observed)
double wilcoxon_signed_rank(std::span<const double> diffs, Alternative alternative);

inline constexpr std::size_t kExactLimit = 25;

/// Average ranks (1-based) of `values`, ties sharing the mean of their
/// positions. Returned doubled so they stay integral.
std::vector<long> doubled_average_ranks(std::span<const double> values);

/// Percentile with linear interpolation between closest ranks (the
/// h = (n - 1) q rule). q in [0, 1]; values need not be sorted.
double percentile_linear(std::vector<double> values, double q);

}  // namespace ascf
