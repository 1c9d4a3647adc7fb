// ascf: benchmark simulation, report merging and staged acquisition sessions.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "ascf/csv.hpp"
#include "ascf/dataset.hpp"
#include "ascf/error.hpp"
#include "ascf/harness.hpp"
#include "ascf/learners.hpp"
#include "ascf/report_io.hpp"
#include "ascf/session.hpp"
#include "ascf/strategies.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for flag values that parse but make no sense; exits 2 like CLI11 errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const ascf::Error& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto t = ascf::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

struct StrategyFlags {
  std::string strategy = "u-ascf,s-ascf";
  int bootstrap = 10;
  std::string p_mode = "true-label";
  std::string variance_mode = "raw";
  std::string variance_estimator = "population";
  std::string tie_break = "lowest-id";

  void add_to(CLI::App* app, const std::string& strategy_help) {
    app->add_option("--strategy", strategy, strategy_help)->capture_default_str();
    app->add_option("--bootstrap", bootstrap, "U-ASCF ensemble size B")->capture_default_str();
    app->add_option("--p-mode", p_mode, "S-ASCF misclassification estimate: true-label | predicted-class")
        ->capture_default_str();
    app->add_option("--variance-mode", variance_mode, "U-ASCF variance scaling: raw | standardized")
        ->capture_default_str();
    app->add_option("--variance-estimator", variance_estimator, "population | sample")->capture_default_str();
    app->add_option("--tie-break", tie_break, "lowest-id | seeded-random")->capture_default_str();
  }

  ascf::StrategyConfig config(const std::string& name) const {
    return as_usage([&] {
      ascf::StrategyConfig c;
      c.kind = ascf::parse_strategy_kind(name);
      c.bootstrap = bootstrap;
      c.p_mode = ascf::parse_p_mode(p_mode);
      c.variance_mode = ascf::parse_variance_mode(variance_mode);
      c.variance_estimator = ascf::parse_variance_estimator(variance_estimator);
      c.tie_break = ascf::parse_tie_break(tie_break);
      c.validate();
      return c;
    });
  }
};

ascf::FeatureManifest load_manifest(const std::string& path) {
  try {
    return ascf::FeatureManifest::load(path);
  } catch (const ascf::Error& e) {
    throw UsageError(std::string("manifest ") + path + ": " + e.what());
  }
}

std::string versions_compiler() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

json versions() {
  return {{"ascf", ASCF_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"compiler", versions_compiler()}};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string data;
  std::string manifest;
  std::string out;
  StrategyFlags strategy;
  int k = 5;
  int repeats = 10;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;
  unsigned threads = 0;
  std::string missing = "drop";
  std::string cold_start = "stratified-pair";
};

int run_simulate(const SimulateArgs& args) {
  std::vector<std::string> names = split_list(args.strategy.strategy);
  if (names.size() == 1 && names[0] == "all") names = {"u-ascf", "s-ascf"};
  if (names.empty()) throw UsageError("--strategy lists no strategy");
  std::vector<ascf::StrategyConfig> configs{args.strategy.config("random")};
  for (const auto& name : names) {
    auto c = args.strategy.config(name);
    if (c.kind == ascf::StrategyKind::random) continue;
    for (const auto& seen : configs) {
      if (seen.kind == c.kind) throw UsageError("strategy '" + name + "' listed twice");
    }
    configs.push_back(c);
  }

  ascf::ProtocolConfig protocol;
  as_usage([&] {
    protocol.repeats = args.repeats;
    protocol.k = args.k;
    protocol.alpha = args.alpha;
    protocol.seed = args.seed;
    protocol.cold_start = ascf::parse_cold_start(args.cold_start);
    if (args.max_steps > 0) protocol.max_steps = args.max_steps;
    protocol.threads = args.threads;
    protocol.validate();
    return 0;
  });
  const auto policy = as_usage([&] { return ascf::parse_missing_policy(args.missing); });
  const auto manifest = load_manifest(args.manifest);

  const ascf::Dataset dataset = ascf::load_dataset(args.data, manifest, policy);
  std::size_t positives = 0;
  for (int y : dataset.y()) positives += static_cast<std::size_t>(y == 1);
  std::cerr << args.data << ": " << dataset.report.summary() << "; " << positives << " positive ('"
            << dataset.positive_label() << "'), " << dataset.size() - positives << " negative\n";

  const auto result = ascf::run_benchmark(dataset, configs, protocol);
  const auto report = ascf::aggregate_and_compare(result.strategies, "random", protocol.alpha);

  fs::create_directories(args.out);
  const fs::path out(args.out);
  ascf::write_curves_csv(out / "curves.csv", result.strategies);
  ascf::write_report_csv(out / "report.csv", report);

  json meta;
  meta["data"] = {{"path", args.data},
                  {"rows_read", dataset.report.rows_read},
                  {"dropped_rows", dataset.report.dropped_rows},
                  {"instances", dataset.size()},
                  {"positive_label", dataset.positive_label()},
                  {"negative_label", dataset.negative_label()},
                  {"positives", positives},
                  {"negatives", dataset.size() - positives}};
  meta["manifest"] = manifest.to_json();
  meta["protocol"] = protocol.to_json();
  meta["protocol"].erase("threads");
  meta["missing_policy"] = args.missing;
  json strategies = json::array();
  for (const auto& c : configs) strategies.push_back(c.to_json());
  meta["strategies"] = strategies;
  meta["baseline"] = "random";
  meta["decisions"] = {{"variance_mode", args.strategy.variance_mode},
                       {"variance_estimator", args.strategy.variance_estimator},
                       {"p_mode", args.strategy.p_mode},
                       {"tie_break", args.strategy.tie_break},
                       {"percentile_method", ascf::ComparisonReport::kPercentileMethod},
                       {"wilcoxon", "paired signed-rank, zeros dropped, average ranks for ties, exact null for n <= " +
                                        std::to_string(ascf::kExactLimit) +
                                        ", normal approximation with tie and continuity correction above"},
                       {"tests", "two one-sided tests per step (greater, less) against random"},
                       {"step_semantics", "step s = |A| after the s-th acquisition; cold-start steps taken before "
                                          "both classes are present carry the first trainable F1"},
                       {"run_seed", "derive_seed(seed, run stream, repeat, fold), shared by all strategies"}};
  meta["splits"] = {{"repeats", result.plan.repeats}, {"k", result.plan.k}, {"seed", result.plan.seed}};
  meta["versions"] = versions();
  ascf::write_file_atomic(out / "metadata.json", meta.dump(2) + "\n");

  for (const auto& c : configs) {
    if (c.kind == ascf::StrategyKind::random) continue;
    std::size_t better = 0, worse = 0, steps = 0;
    for (const auto& row : report.rows) {
      if (row.strategy != c.name()) continue;
      ++steps;
      better += row.flag == ascf::Significance::better;
      worse += row.flag == ascf::Significance::worse;
    }
    std::cout << c.name() << ": " << steps << " steps, " << better << " significantly better, " << worse
              << " significantly worse than random (alpha " << ascf::format_double(protocol.alpha) << ")\n";
  }
  std::cout << "wrote " << (out / "curves.csv").string() << ", " << (out / "report.csv").string() << ", "
            << (out / "metadata.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string steps;
  std::string out;
  double alpha = 0.0;
};

int run_report(const ReportArgs& args) {
  std::optional<ascf::StepRange> range;
  if (!args.steps.empty()) range = as_usage([&] { return ascf::parse_step_range(args.steps); });
  double alpha = args.alpha;
  std::vector<std::vector<ascf::StrategyRuns>> sources;
  for (const auto& dir : args.inputs) {
    const fs::path base(dir);
    const fs::path curves = fs::is_directory(base) ? base / "curves.csv" : base;
    sources.push_back(ascf::read_curves_csv(curves));
    const fs::path meta = curves.parent_path() / "metadata.json";
    if (alpha <= 0.0 && fs::exists(meta)) {
      std::ifstream in(meta);
      const auto doc = json::parse(in, nullptr, false);
      if (!doc.is_discarded() && doc.contains("protocol") && doc["protocol"].contains("alpha")) {
        alpha = doc["protocol"]["alpha"].get<double>();
      }
    }
  }
  if (alpha <= 0.0) alpha = 0.1;
  const auto merged = ascf::merge_runs(std::move(sources));
  const auto report = ascf::aggregate_and_compare(merged, "random", alpha);
  if (!args.out.empty()) {
    fs::path out(args.out);
    if (fs::is_directory(out)) out /= "report.csv";
    ascf::write_report_csv(out, report, range);
  }
  ascf::print_report_table(std::cout, report, range);
  return 0;
}

// ---------------------------------------------------------------- rfe

int run_rfe(const std::string& data, const std::string& manifest_path, const std::string& missing, int k,
            std::uint64_t seed) {
  const auto policy = as_usage([&] { return ascf::parse_missing_policy(missing); });
  const auto manifest = load_manifest(manifest_path);
  const auto dataset = ascf::load_dataset(data, manifest, policy);
  const auto result = ascf::rfe_select(dataset, k, seed);
  const auto& names = manifest.classification;
  std::cout << "eliminated (first to last):";
  for (auto col : result.ranking) std::cout << ' ' << names[col];
  std::cout << "\noptimal feature count: " << result.optimal_count << "\nselected:";
  for (std::size_t i = result.ranking.size() - result.optimal_count; i < result.ranking.size(); ++i) {
    std::cout << ' ' << names[result.ranking[i]];
  }
  std::cout << '\n';
  for (std::size_t n = 1; n <= result.cv_f1.size(); ++n) {
    std::printf("  %2zu features  cv F1 %.4f\n", n, result.cv_f1[n - 1]);
  }
  return 0;
}

// ---------------------------------------------------------------- session

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& cell : split_list(text)) {
    auto v = ascf::parse_double(cell);
    if (!v) throw UsageError("--values: '" + cell + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

void print_suggestion(const ascf::Session::Suggestion& s) {
  if (s.mode == "random") {
    std::cout << "notice: not enough acquisitions to score candidates yet; random pick\n";
    std::cout << "next " << s.ids.front() << '\n';
    return;
  }
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    std::printf("%s %s utility %.6g\n", i == 0 ? "next" : "  runner-up", s.ids[i].c_str(), s.utilities[i]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active selection of classification features"};
  app.set_version_flag("--version", std::string(ASCF_VERSION));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Cross-validated acquisition benchmark against random selection");
  simulate->add_option("--data", sim.data, "Dataset CSV")->required();
  simulate->add_option("--manifest", sim.manifest, "Feature-role manifest (JSON)")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  sim.strategy.add_to(simulate, "Comma-separated strategies or 'all'; random always runs");
  simulate->add_option("--k", sim.k, "Folds")->capture_default_str();
  simulate->add_option("--repeats", sim.repeats, "Cross-validation repeats")->capture_default_str();
  simulate->add_option("--alpha", sim.alpha, "Significance level")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--max-steps", sim.max_steps, "Stop each run after this many acquisitions (0: no cap)");
  simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)")->capture_default_str();
  simulate->add_option("--missing", sim.missing, "Rows with missing values: reject | drop")->capture_default_str();
  simulate->add_option("--cold-start", sim.cold_start, "stratified-pair | random-N")->capture_default_str();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Recompute and print the significance table from curves.csv");
  report->add_option("--in", rep.inputs, "simulate output directory or curves.csv (repeatable)")->required();
  report->add_option("--steps", rep.steps, "Step window FIRST:LAST");
  report->add_option("--out", rep.out, "Write report.csv here (file or directory)");
  report->add_option("--alpha", rep.alpha, "Significance level (default: from metadata.json, else 0.1)");

  std::string rfe_data, rfe_manifest, rfe_missing = "drop";
  int rfe_k = 5;
  std::uint64_t rfe_seed = 0;
  auto* rfe = app.add_subcommand("rfe", "Rank classification features by recursive elimination");
  rfe->add_option("--data", rfe_data, "Dataset CSV")->required();
  rfe->add_option("--manifest", rfe_manifest, "Feature-role manifest (JSON)")->required();
  rfe->add_option("--missing", rfe_missing, "reject | drop")->capture_default_str();
  rfe->add_option("--k", rfe_k, "Folds")->capture_default_str();
  rfe->add_option("--seed", rfe_seed, "Fold seed")->capture_default_str();

  auto* session = app.add_subcommand("session", "Staged acquisition campaign with persistent state");
  session->require_subcommand(1);
  std::string state;
  session->add_option("--state", state, "Session state file")->required();

  std::string init_candidates, init_manifest, init_missing = "reject";
  std::uint64_t init_seed = 0;
  StrategyFlags init_strategy;
  init_strategy.strategy = "s-ascf";
  auto* init = session->add_subcommand("init", "Create a session from a candidates CSV");
  init->add_option("--candidates,--data", init_candidates, "Candidates CSV (id, selection columns, optional label)")
      ->required();
  init->add_option("--manifest", init_manifest, "Feature-role manifest (JSON)")->required();
  init->add_option("--seed", init_seed, "Seed for random picks and bootstrap draws")->capture_default_str();
  init->add_option("--missing", init_missing, "reject | drop")->capture_default_str();
  init_strategy.add_to(init, "random | u-ascf | s-ascf");

  std::size_t top = 5;
  auto* suggest = session->add_subcommand("suggest", "Suggest the next candidate to measure");
  suggest->add_option("--top", top, "Ranked candidates to print")->capture_default_str();

  std::string rec_id, rec_values, rec_label, rec_time;
  auto* record = session->add_subcommand("record", "Record the measured classification values of a candidate");
  record->add_option("--id", rec_id, "Candidate id")->required();
  record->add_option("--values", rec_values, "Comma-separated classification values, manifest order")->required();
  record->add_option("--label", rec_label, "Label, if it was not in the candidates file");
  record->add_option("--timestamp", rec_time, "Override the recorded UTC timestamp");

  auto* status = session->add_subcommand("status", "Acquisition counts and last suggestion");
  std::string export_out;
  auto* exporter = session->add_subcommand("export", "Write the acquired instances as a training CSV");
  exporter->add_option("--out", export_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*report) return run_report(rep);
    if (*rfe) return run_rfe(rfe_data, rfe_manifest, rfe_missing, rfe_k, rfe_seed);

    const fs::path state_path(state);
    ascf::SessionLock lock(state_path);
    if (*init) {
      if (fs::exists(state_path)) throw UsageError(state + " already exists");
      const auto manifest = load_manifest(init_manifest);
      const auto config = init_strategy.config(init_strategy.strategy);
      const auto policy = as_usage([&] { return ascf::parse_missing_policy(init_missing); });
      auto s = ascf::Session::init(init_candidates, manifest, config, init_seed, policy);
      s.save(state_path);
      std::cout << "session with " << s.registry().size() << " candidates, strategy " << config.name() << '\n';
      return 0;
    }
    auto s = ascf::Session::load(state_path);
    if (*suggest) {
      auto suggestion = s.suggest(top);
      if (!suggestion) {
        std::cout << "exhausted: no candidates left\n";
        return 0;
      }
      s.save(state_path);
      print_suggestion(*suggestion);
      return 0;
    }
    if (*record) {
      const auto values = parse_values(rec_values);
      std::optional<std::string> label;
      if (!rec_label.empty()) label = rec_label;
      const auto& a = s.record(rec_id, values, label, rec_time);
      s.save(state_path);
      std::cout << "recorded " << a.id << (a.overridden ? " (overrides the suggestion)" : "") << '\n';
      return 0;
    }
    if (*status) {
      const auto st = s.status();
      std::cout << "acquired " << st.acquired << "\ncandidates " << st.candidates << '\n';
      if (st.last_suggestion) {
        std::cout << "last suggestion " << *st.last_suggestion << " (" << st.last_suggestion_outcome << ")\n";
      } else {
        std::cout << "last suggestion none\n";
      }
      return 0;
    }
    if (*exporter) {
      if (export_out.empty()) {
        s.export_csv(std::cout);
      } else {
        std::ostringstream buffer;
        s.export_csv(buffer);
        ascf::write_file_atomic(export_out, buffer.str());
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ascf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
