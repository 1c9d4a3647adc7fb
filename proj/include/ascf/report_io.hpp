#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "ascf/harness.hpp"

namespace ascf {

/// curves.csv: strategy,repeat,fold,step,f1,acquired_id (one row per
/// acquisition). Values are written in shortest round-trip form so a report
/// recomputed from the file matches the original bit for bit.
void write_curves_csv(std::ostream& out, const std::vector<StrategyRuns>& strategies);
void write_curves_csv(const std::filesystem::path& path, const std::vector<StrategyRuns>& strategies);
std::vector<StrategyRuns> read_curves_csv(const std::filesystem::path& path);

/// Inclusive step window, e.g. "1:25". Either bound may be omitted.
struct StepRange {
  std::size_t first = 1;
  std::size_t last = static_cast<std::size_t>(-1);

  bool contains(std::size_t step) const { return step >= first && step <= last; }
};
StepRange parse_step_range(std::string_view text);

/// report.csv: strategy,step,mean,p10,p90,p_greater,p_less,flag
void write_report_csv(std::ostream& out, const ComparisonReport& report,
                      const std::optional<StepRange>& steps = std::nullopt);
void write_report_csv(const std::filesystem::path& path, const ComparisonReport& report,
                      const std::optional<StepRange>& steps = std::nullopt);

/// Human-readable per-step significance table.
void print_report_table(std::ostream& out, const ComparisonReport& report,
                        const std::optional<StepRange>& steps = std::nullopt);

/// Combines strategy run collections from several sources. A strategy seen
/// more than once must carry identical runs, otherwise a pairing error is
/// raised (the sources used different splits or seeds).
std::vector<StrategyRuns> merge_runs(std::vector<std::vector<StrategyRuns>> sources);

/// Writes `content` to `path` through a temporary file in the same directory
/// followed by a rename, so readers only ever see the old or the new file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Test seam for fault injection: called after each chunk written to the
/// temporary file and once more just before the rename. nullptr disables it.
using AtomicWriteHook = void (*)(std::size_t bytes_written);
void set_atomic_write_hook(AtomicWriteHook hook);

}  // namespace ascf
