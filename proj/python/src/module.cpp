#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ascf/dataset.hpp"
#include "ascf/error.hpp"
#include "ascf/harness.hpp"
#include "ascf/learners.hpp"
#include "ascf/report_io.hpp"
#include "ascf/session.hpp"
#include "ascf/stats.hpp"
#include "ascf/strategies.hpp"

namespace py = pybind11;
using namespace ascf;

namespace {

FeatureManifest manifest_from(const py::object& source) {
  if (py::isinstance<py::dict>(source)) {
    auto text = py::module_::import("json").attr("dumps")(source).cast<std::string>();
    return FeatureManifest::from_json(nlohmann::json::parse(text));
  }
  return FeatureManifest::load(source.cast<std::filesystem::path>());
}

StrategyConfig strategy_from(const std::string& name, int bootstrap, const std::string& p_mode,
                             const std::string& variance_mode, const std::string& variance_estimator,
                             const std::string& tie_break) {
  StrategyConfig c;
  c.kind = parse_strategy_kind(name);
  c.bootstrap = bootstrap;
  c.p_mode = parse_p_mode(p_mode);
  c.variance_mode = parse_variance_mode(variance_mode);
  c.variance_estimator = parse_variance_estimator(variance_estimator);
  c.tie_break = parse_tie_break(tie_break);
  c.validate();
  return c;
}

Alternative parse_alternative(const std::string& text) {
  if (text == "greater") return Alternative::greater;
  if (text == "less") return Alternative::less;
  throw Error(ErrorKind::precondition, "alternative must be 'greater' or 'less'");
}

}  // namespace

PYBIND11_MODULE(_ascf, m) {
  m.doc() = "Active selection of classification features: learners, strategies and benchmark harness";
  m.attr("__version__") = ASCF_VERSION;

  py::register_exception<Error>(m, "AscfError", PyExc_ValueError);

  py::class_<FeatureManifest>(m, "FeatureManifest")
      .def_readonly("selection", &FeatureManifest::selection)
      .def_readonly("classification", &FeatureManifest::classification)
      .def_readonly("label", &FeatureManifest::label)
      .def_readonly("positive_label", &FeatureManifest::positive_label)
      .def_readonly("id", &FeatureManifest::id);
  m.def("load_manifest", &manifest_from, py::arg("manifest"), "Manifest from a dict or a JSON file path");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("ids", &Dataset::ids)
      .def_property_readonly("z", &Dataset::z)
      .def_property_readonly("x", &Dataset::x)
      .def_property_readonly("y", &Dataset::y)
      .def_property_readonly("positive_label", &Dataset::positive_label)
      .def_property_readonly("negative_label", &Dataset::negative_label)
      .def_readonly("manifest", &Dataset::manifest)
      .def_property_readonly("dropped_rows", [](const Dataset& d) { return d.report.dropped_rows; })
      .def("index_of", &Dataset::index_of)
      .def("__len__", &Dataset::size);
  m.def(
      "load_dataset",
      [](const std::filesystem::path& path, const py::object& manifest, const std::string& missing) {
        return load_dataset(path, manifest_from(manifest), parse_missing_policy(missing));
      },
      py::arg("path"), py::arg("manifest"), py::arg("missing") = "reject");

  m.def(
      "make_splits",
      [](const std::vector<int>& labels, int repeats, int k, std::uint64_t seed) {
        const auto plan = make_splits(labels, repeats, k, seed);
        std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
        for (const auto& f : plan.assignments) out.emplace_back(f.train, f.test);
        return out;
      },
      py::arg("labels"), py::arg("repeats"), py::arg("k"), py::arg("seed"),
      "List of (train, test) row index lists, repeat-major");

  py::class_<LinearModel>(m, "LinearModel")
      .def_readonly("weights", &LinearModel::weights)
      .def_readonly("intercepts", &LinearModel::intercepts)
      .def("predict", &LinearModel::predict_rows, py::arg("z"));
  m.def("fit_linear", &fit_linear, py::arg("z"), py::arg("x"));

  py::class_<BootstrapEnsemble>(m, "BootstrapEnsemble")
      .def_readonly("members", &BootstrapEnsemble::members)
      .def_readonly("degenerate", &BootstrapEnsemble::degenerate)
      .def("__len__", &BootstrapEnsemble::size);
  m.def("fit_bootstrap_ensemble", &fit_bootstrap_ensemble, py::arg("z"), py::arg("x"), py::arg("B") = 10,
        py::arg("seed") = 0);

  py::class_<ProbClassifier>(m, "ProbClassifier")
      .def_readonly("weights", &ProbClassifier::weights)
      .def_readonly("intercept", &ProbClassifier::intercept)
      .def_readonly("converged", &ProbClassifier::converged)
      .def_readonly("iterations", &ProbClassifier::iterations)
      .def("posterior",
           [](const ProbClassifier& c, const Eigen::MatrixXd& x) {
             Eigen::VectorXd p(x.rows());
             for (Eigen::Index i = 0; i < x.rows(); ++i) p(i) = c.posterior(x.row(i).transpose());
             return p;
           })
      .def("predict", &ProbClassifier::predict_rows);
  m.def(
      "fit_logistic",
      [](const Eigen::MatrixXd& x, const std::vector<int>& y, double C, double tol, int max_iter) {
        return fit_logistic(x, y, LogisticOptions{C, tol, max_iter});
      },
      py::arg("x"), py::arg("y"), py::arg("C") = 1.0, py::arg("tol") = 1e-6, py::arg("max_iter") = 200);

  m.def(
      "u_ascf_utility",
      [](const BootstrapEnsemble& e, const Eigen::VectorXd& z, const std::string& estimator) {
        return u_ascf_utility(e, z, parse_variance_estimator(estimator));
      },
      py::arg("ensemble"), py::arg("z"), py::arg("estimator") = "population");
  m.def("s_ascf_utility", &s_ascf_utility, py::arg("p"), py::arg("b"));
  m.def("asymmetry_b", &asymmetry_b, py::arg("n_acquired"));

  m.def(
      "f1_score", [](const std::vector<int>& t, const std::vector<int>& p) { return f1_score(t, p); },
      py::arg("y_true"), py::arg("y_pred"));
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& d, const std::string& alt) { return wilcoxon_signed_rank(d, parse_alternative(alt)); },
      py::arg("diffs"), py::arg("alternative") = "greater");
  m.def("percentile", &percentile_linear, py::arg("values"), py::arg("q"));

  py::class_<LearningCurve>(m, "LearningCurve")
      .def_readonly("repeat", &LearningCurve::repeat)
      .def_readonly("fold", &LearningCurve::fold)
      .def_readonly("strategy", &LearningCurve::strategy)
      .def_readonly("f1", &LearningCurve::f1)
      .def_readonly("acquired_ids", &LearningCurve::acquired_ids)
      .def_readonly("cold_start_size", &LearningCurve::cold_start_size);

  m.def(
      "run_benchmark",
      [](const Dataset& dataset, const std::vector<std::string>& strategies, int repeats, int k, std::uint64_t seed,
         std::optional<std::size_t> max_steps, int bootstrap, const std::string& p_mode,
         const std::string& variance_mode, const std::string& variance_estimator, const std::string& tie_break,
         const std::string& cold_start, unsigned threads) {
        std::vector<StrategyConfig> configs;
        for (const auto& name : strategies) {
          configs.push_back(strategy_from(name, bootstrap, p_mode, variance_mode, variance_estimator, tie_break));
        }
        ProtocolConfig protocol;
        protocol.repeats = repeats;
        protocol.k = k;
        protocol.seed = seed;
        protocol.max_steps = max_steps;
        protocol.cold_start = parse_cold_start(cold_start);
        protocol.threads = threads;
        BenchmarkResult result;
        {
          py::gil_scoped_release release;
          result = run_benchmark(dataset, configs, protocol);
        }
        py::dict out;
        for (const auto& s : result.strategies) out[py::str(s.strategy)] = s.runs;
        return out;
      },
      py::arg("dataset"), py::arg("strategies") = std::vector<std::string>{"u-ascf", "s-ascf"},
      py::arg("repeats") = 10, py::arg("k") = 5, py::arg("seed") = 0, py::arg("max_steps") = py::none(),
      py::arg("bootstrap") = 10, py::arg("p_mode") = "true-label", py::arg("variance_mode") = "raw",
      py::arg("variance_estimator") = "population", py::arg("tie_break") = "lowest-id",
      py::arg("cold_start") = "stratified-pair", py::arg("threads") = 0,
      "Runs of every strategy (random always included), keyed by strategy name");

  m.def(
      "aggregate_and_compare",
      [](const py::dict& runs, const std::string& baseline, double alpha) {
        std::vector<StrategyRuns> strategies;
        for (const auto& [name, curves] : runs) {
          strategies.push_back({name.cast<std::string>(), curves.cast<std::vector<LearningCurve>>()});
        }
        const auto report = aggregate_and_compare(strategies, baseline, alpha);
        py::list rows;
        for (const auto& r : report.rows) {
          py::dict row;
          row["strategy"] = r.strategy;
          row["step"] = r.step;
          row["runs"] = r.runs;
          row["mean"] = r.mean;
          row["p10"] = r.p10;
          row["p90"] = r.p90;
          row["p_greater"] = r.p_greater;
          row["p_less"] = r.p_less;
          row["flag"] = to_string(r.flag);
          rows.append(row);
        }
        return rows;
      },
      py::arg("runs"), py::arg("baseline") = "random", py::arg("alpha") = 0.1);

  py::class_<Session>(m, "Session")
      .def_static(
          "init",
          [](const std::filesystem::path& csv, const py::object& manifest, const std::string& strategy,
             std::uint64_t seed) {
            return Session::init(csv, manifest_from(manifest), strategy_from(strategy, 10, "true-label", "raw",
                                                                             "population", "lowest-id"),
                                 seed);
          },
          py::arg("candidates"), py::arg("manifest"), py::arg("strategy") = "s-ascf", py::arg("seed") = 0)
      .def_static("load", &Session::load)
      .def("save", &Session::save)
      .def("suggest",
           [](Session& s, std::size_t top) -> py::object {
             auto sug = s.suggest(top);
             if (!sug) return py::none();
             py::dict out;
             out["mode"] = sug->mode;
             out["ids"] = sug->ids;
             out["utilities"] = sug->utilities;
             return out;
           },
           py::arg("top") = 5)
      .def(
          "record",
          [](Session& s, const std::string& id, const std::vector<double>& x, std::optional<std::string> label) {
            s.record(id, x, label);
          },
          py::arg("id"), py::arg("x"), py::arg("label") = py::none())
      .def_property_readonly("acquired", [](const Session& s) {
        std::vector<std::string> ids;
        for (const auto& a : s.acquisitions()) ids.push_back(a.id);
        return ids;
      });
}
