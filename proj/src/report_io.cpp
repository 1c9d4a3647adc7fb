#include "ascf/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <unistd.h>

#include "ascf/csv.hpp"
#include "ascf/error.hpp"

namespace ascf {

namespace {

const std::vector<std::string> kCurveHeader = {"strategy", "repeat", "fold", "step", "f1", "acquired_id"};
const std::vector<std::string> kReportHeader = {"strategy", "step", "mean", "p10", "p90", "p_greater", "p_less", "flag"};

long parse_integer(const std::string& cell, const char* what, std::size_t line) {
  auto value = parse_double(cell);
  if (!value || *value != static_cast<double>(static_cast<long>(*value))) {
    throw Error(ErrorKind::parse, std::string("curves row ") + std::to_string(line) + ": bad " + what + " '" + cell + "'");
  }
  return static_cast<long>(*value);
}

}  // namespace

void write_curves_csv(std::ostream& out, const std::vector<StrategyRuns>& strategies) {
  write_csv_row(out, kCurveHeader);
  for (const auto& strategy : strategies) {
    for (const auto& run : strategy.runs) {
      for (std::size_t s = 0; s < run.f1.size(); ++s) {
        write_csv_row(out, {strategy.strategy, std::to_string(run.repeat), std::to_string(run.fold),
                            std::to_string(s + 1), format_double(run.f1[s]), run.acquired_ids[s]});
      }
    }
  }
}

void write_curves_csv(const std::filesystem::path& path, const std::vector<StrategyRuns>& strategies) {
  std::ostringstream buffer;
  write_curves_csv(buffer, strategies);
  write_file_atomic(path, buffer.str());
}

std::vector<StrategyRuns> read_curves_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  if (table.header != kCurveHeader) throw Error(ErrorKind::parse, path.string() + " is not a curves.csv file");
  std::vector<StrategyRuns> out;
  std::map<std::string, std::size_t> strategy_index;
  std::map<std::tuple<std::size_t, long, long>, std::size_t> run_index;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = i + 1;
    auto [sit, new_strategy] = strategy_index.emplace(row[0], out.size());
    if (new_strategy) out.push_back({row[0], {}});
    StrategyRuns& strategy = out[sit->second];
    const long repeat = parse_integer(row[1], "repeat", line);
    const long fold = parse_integer(row[2], "fold", line);
    const long step = parse_integer(row[3], "step", line);
    auto f1 = parse_double(row[4]);
    if (!f1) throw Error(ErrorKind::parse, "curves row " + std::to_string(line) + ": bad f1 '" + row[4] + "'");
    auto [rit, new_run] = run_index.emplace(std::tuple{sit->second, repeat, fold}, strategy.runs.size());
    if (new_run) {
      LearningCurve curve;
      curve.repeat = static_cast<int>(repeat);
      curve.fold = static_cast<int>(fold);
      curve.strategy = row[0];
      strategy.runs.push_back(std::move(curve));
    }
    LearningCurve& curve = strategy.runs[rit->second];
    if (static_cast<std::size_t>(step) != curve.f1.size() + 1) {
      throw Error(ErrorKind::parse, "curves row " + std::to_string(line) + ": steps of a run must be consecutive from 1");
    }
    curve.f1.push_back(*f1);
    curve.acquired_ids.push_back(row[5]);
  }
  return out;
}

StepRange parse_step_range(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw Error(ErrorKind::precondition, "step range must look like FIRST:LAST");
  StepRange range;
  auto bound = [&](std::string_view part, std::size_t fallback) {
    part = trim(part);
    if (part.empty()) return fallback;
    auto value = parse_double(part);
    if (!value || *value < 1 || *value != static_cast<double>(static_cast<std::size_t>(*value))) {
      throw Error(ErrorKind::precondition, "bad step bound '" + std::string(part) + "'");
    }
    return static_cast<std::size_t>(*value);
  };
  range.first = bound(text.substr(0, colon), 1);
  range.last = bound(text.substr(colon + 1), static_cast<std::size_t>(-1));
  if (range.first > range.last) throw Error(ErrorKind::precondition, "empty step range");
  return range;
}

void write_report_csv(std::ostream& out, const ComparisonReport& report, const std::optional<StepRange>& steps) {
  write_csv_row(out, kReportHeader);
  for (const auto& row : report.rows) {
    if (steps && !steps->contains(row.step)) continue;
    write_csv_row(out, {row.strategy, std::to_string(row.step), format_double(row.mean), format_double(row.p10),
                        format_double(row.p90), format_double(row.p_greater), format_double(row.p_less),
                        to_string(row.flag)});
  }
}

void write_report_csv(const std::filesystem::path& path, const ComparisonReport& report,
                      const std::optional<StepRange>& steps) {
  std::ostringstream buffer;
  write_report_csv(buffer, report, steps);
  write_file_atomic(path, buffer.str());
}

void print_report_table(std::ostream& out, const ComparisonReport& report, const std::optional<StepRange>& steps) {
  out << std::left << std::setw(10) << "strategy" << std::right << std::setw(6) << "step" << std::setw(6) << "runs"
      << std::setw(9) << "mean" << std::setw(9) << "p10" << std::setw(9) << "p90" << std::setw(11) << "p_greater"
      << std::setw(11) << "p_less" << "  flag\n";
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::fixed;
  for (const auto& row : report.rows) {
    if (steps && !steps->contains(row.step)) continue;
    if (row.strategy == report.baseline) continue;
    out << std::left << std::setw(10) << row.strategy << std::right << std::setw(6) << row.step << std::setw(6)
        << row.runs << std::setprecision(4) << std::setw(9) << row.mean << std::setw(9) << row.p10 << std::setw(9)
        << row.p90 << std::setprecision(5) << std::setw(11) << row.p_greater << std::setw(11) << row.p_less << "  "
        << (row.flag == Significance::none ? "" : to_string(row.flag)) << '\n';
  }
  out.flags(old_flags);
  out.precision(old_precision);
}

std::vector<StrategyRuns> merge_runs(std::vector<std::vector<StrategyRuns>> sources) {
  std::vector<StrategyRuns> merged;
  for (auto& source : sources) {
    for (auto& strategy : source) {
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const StrategyRuns& s) { return s.strategy == strategy.strategy; });
      if (it == merged.end()) {
        merged.push_back(std::move(strategy));
        continue;
      }
      bool same = it->runs.size() == strategy.runs.size();
      for (std::size_t i = 0; same && i < strategy.runs.size(); ++i) {
        const auto& a = it->runs[i];
        const auto& b = strategy.runs[i];
        same = a.repeat == b.repeat && a.fold == b.fold && a.f1 == b.f1 && a.acquired_ids == b.acquired_ids;
      }
      if (!same) {
        throw Error(ErrorKind::pairing, "runs of '" + strategy.strategy +
                                            "' differ between inputs; they were produced with different splits or seeds");
      }
    }
  }
  return merged;
}

namespace {
AtomicWriteHook g_write_hook = nullptr;
}  // namespace

void set_atomic_write_hook(AtomicWriteHook hook) { g_write_hook = hook; }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::FILE* fh = std::fopen(tmp.c_str(), "wb");
    if (!fh) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    constexpr std::size_t kChunk = 512;
    bool ok = true;
    for (std::size_t at = 0; ok && at < content.size(); at += kChunk) {
      const std::size_t len = std::min(kChunk, content.size() - at);
      ok = std::fwrite(content.data() + at, 1, len, fh) == len && std::fflush(fh) == 0;
      if (g_write_hook) g_write_hook(at + len);
    }
    ok = ok && ::fsync(::fileno(fh)) == 0;
    std::fclose(fh);
    if (!ok) {
      std::filesystem::remove(tmp);
      throw Error(ErrorKind::io, "short write to " + tmp.string());
    }
  }
  if (g_write_hook) g_write_hook(content.size());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::io, "cannot replace " + path.string() + ": " + ec.message());
  }
}

}  // namespace ascf
