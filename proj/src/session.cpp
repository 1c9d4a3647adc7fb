#include "ascf/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include "ascf/csv.hpp"
#include "ascf/error.hpp"
#include "ascf/report_io.hpp"

namespace ascf {

namespace {

constexpr std::uint64_t kSuggestStream = 0x53554747ULL;  // "SUGG"

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

StrategyConfig strategy_from_json(const nlohmann::json& doc) {
  StrategyConfig config;
  config.kind = parse_strategy_kind(doc.at("strategy").get<std::string>());
  if (doc.contains("tie_break")) config.tie_break = parse_tie_break(doc.at("tie_break").get<std::string>());
  if (doc.contains("bootstrap")) config.bootstrap = doc.at("bootstrap").get<int>();
  if (doc.contains("variance_mode")) config.variance_mode = parse_variance_mode(doc.at("variance_mode").get<std::string>());
  if (doc.contains("variance_estimator")) {
    config.variance_estimator = parse_variance_estimator(doc.at("variance_estimator").get<std::string>());
  }
  if (doc.contains("p_mode")) config.p_mode = parse_p_mode(doc.at("p_mode").get<std::string>());
  config.validate();
  return config;
}

bool missing_cell(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "?" || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan";
}

}  // namespace

Session Session::init(const std::filesystem::path& candidates_csv, const FeatureManifest& manifest,
                      const StrategyConfig& strategy, std::uint64_t seed, MissingPolicy missing) {
  manifest.validate();
  strategy.validate();
  const CsvTable table = read_csv(candidates_csv);
  std::vector<std::size_t> sel_cols;
  for (const auto& name : manifest.selection) {
    auto pos = table.column(name);
    if (!pos) throw Error(ErrorKind::manifest, "column '" + name + "' not found in the candidates header");
    sel_cols.push_back(*pos);
  }
  const auto label_col = table.column(manifest.label);
  std::optional<std::size_t> id_col;
  if (manifest.id) {
    id_col = table.column(*manifest.id);
    if (!id_col) throw Error(ErrorKind::manifest, "column '" + *manifest.id + "' not found in the candidates header");
  }

  Session session;
  session.manifest_ = manifest;
  session.strategy_ = strategy;
  session.seed_ = seed;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const bool incomplete = std::any_of(sel_cols.begin(), sel_cols.end(), [&](std::size_t c) { return missing_cell(row[c]); }) ||
                            (id_col && missing_cell(row[*id_col]));
    if (incomplete) {
      if (missing == MissingPolicy::reject) {
        throw Error(ErrorKind::missing_value, "candidate row " + std::to_string(r + 1) + " has a missing value");
      }
      continue;
    }
    Candidate c;
    c.id = id_col ? std::string(trim(row[*id_col])) : std::to_string(r);
    for (std::size_t col : sel_cols) {
      auto v = parse_double(row[col]);
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorKind::parse, "row " + std::to_string(r + 1) + ", column '" + table.header[col] +
                                          "': non-numeric value '" + row[col] + "'");
      }
      c.z.push_back(*v);
    }
    if (label_col && !missing_cell(row[*label_col])) c.label = std::string(trim(row[*label_col]));
    if (!ids.insert(c.id).second) throw Error(ErrorKind::parse, "duplicate candidate id '" + c.id + "'");
    session.registry_.push_back(std::move(c));
  }
  session.label_codes();  // validates the label values
  return session;
}

nlohmann::json Session::to_json() const {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["manifest"] = manifest_.to_json();
  doc["strategy"] = strategy_.to_json();
  doc["seed"] = seed_;
  auto& candidates = doc["candidates"] = nlohmann::json::array();
  for (const auto& c : registry_) {
    candidates.push_back({{"id", c.id}, {"z", c.z}, {"y", c.label ? nlohmann::json(*c.label) : nlohmann::json(nullptr)}});
  }
  auto& acquired = doc["acquired"] = nlohmann::json::array();
  for (const auto& a : acquired_) {
    acquired.push_back({{"id", a.id}, {"x", a.x}, {"timestamp", a.timestamp}, {"suggested", a.suggested},
                        {"overridden", a.overridden}});
  }
  auto& history = doc["suggestions"] = nlohmann::json::array();
  for (const auto& s : history_) {
    history.push_back({{"mode", s.mode}, {"ids", s.ids}, {"utilities", s.utilities}, {"n_acquired", s.n_acquired}});
  }
  return doc;
}

Session Session::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::parse, "unsupported session schema version " + doc.at("schema_version").dump());
    }
    Session session;
    session.manifest_ = FeatureManifest::from_json(doc.at("manifest"));
    session.strategy_ = strategy_from_json(doc.at("strategy"));
    session.seed_ = doc.at("seed").get<std::uint64_t>();
    for (const auto& c : doc.at("candidates")) {
      Candidate cand{c.at("id").get<std::string>(), c.at("z").get<std::vector<double>>(), std::nullopt};
      if (!c.at("y").is_null()) cand.label = c.at("y").get<std::string>();
      session.registry_.push_back(std::move(cand));
    }
    for (const auto& a : doc.at("acquired")) {
      session.acquired_.push_back({a.at("id").get<std::string>(), a.at("x").get<std::vector<double>>(),
                                   a.at("timestamp").get<std::string>(), a.at("suggested").get<bool>(),
                                   a.at("overridden").get<bool>()});
    }
    for (const auto& s : doc.at("suggestions")) {
      session.history_.push_back({s.at("mode").get<std::string>(), s.at("ids").get<std::vector<std::string>>(),
                                  s.at("utilities").get<std::vector<double>>(), s.at("n_acquired").get<std::size_t>()});
    }
    session.replay();  // acquired must be a subset of the registry
    return session;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed session state: ") + e.what());
  }
}

Session Session::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open session state " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

void Session::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

std::size_t Session::registry_index(const std::string& id) const {
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    if (registry_[i].id == id) return i;
  }
  throw Error(ErrorKind::unknown_id, "'" + id + "' is not in the candidate registry");
}

std::vector<int> Session::label_codes() const {
  std::vector<std::string> known;
  for (const auto& c : registry_) {
    if (c.label) known.push_back(*c.label);
  }
  std::set<std::string> distinct(known.begin(), known.end());
  std::vector<int> codes(registry_.size(), -1);
  if (distinct.empty()) return codes;
  if (distinct.size() > 2) throw Error(ErrorKind::label, "binary labels required, found " + std::to_string(distinct.size()));
  std::string positive;
  if (manifest_.positive_label) {
    positive = *manifest_.positive_label;
  } else if (distinct.size() == 2) {
    positive = *distinct.rbegin();
  } else {
    throw Error(ErrorKind::label, "only one label value is known; declare positive_label in the manifest");
  }
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    if (registry_[i].label) codes[i] = *registry_[i].label == positive ? 1 : 0;
  }
  return codes;
}

AcquisitionState Session::replay() const {
  std::vector<std::size_t> pool(registry_.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  AcquisitionState state(std::move(pool));
  for (const auto& a : acquired_) {
    if (a.x.size() != manifest_.classification.size()) {
      throw Error(ErrorKind::shape, "acquisition '" + a.id + "' has " + std::to_string(a.x.size()) +
                                        " classification values, manifest declares " +
                                        std::to_string(manifest_.classification.size()));
    }
    state = acquire(std::move(state), registry_index(a.id),
                    Eigen::Map<const Eigen::VectorXd>(a.x.data(), static_cast<Eigen::Index>(a.x.size())));
  }
  return state;
}

std::optional<Session::Suggestion> Session::suggest(std::size_t top) {
  const AcquisitionState state = replay();
  if (state.candidates().empty()) return std::nullopt;

  Eigen::MatrixXd z(static_cast<Eigen::Index>(registry_.size()), static_cast<Eigen::Index>(manifest_.selection.size()));
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    for (std::size_t j = 0; j < registry_[i].z.size(); ++j) {
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = registry_[i].z[j];
    }
  }
  const std::vector<int> labels = label_codes();
  const bool labels_visible = std::any_of(labels.begin(), labels.end(), [](int y) { return y >= 0; });
  const PoolView pool{z, labels_visible ? std::span<const int>(labels) : std::span<const int>()};

  Rng rng(derive_seed(seed_, kSuggestStream, history_.size()));
  Suggestion suggestion;
  suggestion.n_acquired = acquired_.size();
  if (strategy_.kind == StrategyKind::random || !ready_to_score(strategy_, state, pool)) {
    suggestion.mode = "random";
    suggestion.ids.push_back(registry_[state.candidates()[rng.uniform_index(state.candidates().size())]].id);
  } else {
    const std::uint64_t model_seed = rng.next();
    auto scores = score_candidates(strategy_, state, pool, labels_visible, model_seed);
    const std::size_t best = argmax_utility(scores, strategy_.tie_break, rng);
    std::stable_sort(scores.begin(), scores.end(), [&](const UtilityScore& a, const UtilityScore& b) {
      if (a.row == best || b.row == best) return a.row == best && b.row != best;
      if (a.value != b.value) return a.value > b.value;
      return a.row < b.row;
    });
    suggestion.mode = "utility";
    for (std::size_t i = 0; i < std::min(top, scores.size()); ++i) {
      suggestion.ids.push_back(registry_[scores[i].row].id);
      suggestion.utilities.push_back(scores[i].value);
    }
  }
  history_.push_back(suggestion);
  return suggestion;
}

const Session::Acquisition& Session::record(const std::string& id, const std::vector<double>& x,
                                            const std::optional<std::string>& label, std::string timestamp) {
  const std::size_t row = registry_index(id);
  if (std::any_of(acquired_.begin(), acquired_.end(), [&](const Acquisition& a) { return a.id == id; })) {
    throw Error(ErrorKind::already_acquired, "'" + id + "' was already recorded");
  }
  if (x.size() != manifest_.classification.size()) {
    throw Error(ErrorKind::shape, "expected " + std::to_string(manifest_.classification.size()) +
                                      " classification values, got " + std::to_string(x.size()));
  }
  if (std::any_of(x.begin(), x.end(), [](double v) { return !std::isfinite(v); })) {
    throw Error(ErrorKind::domain, "classification values must be finite");
  }
  if (label) {
    if (registry_[row].label && *registry_[row].label != *label) {
      throw Error(ErrorKind::label, "'" + id + "' is registered with label '" + *registry_[row].label + "'");
    }
    registry_[row].label = *label;
    label_codes();
  }

  Acquisition a;
  a.id = id;
  a.x = x;
  a.timestamp = timestamp.empty() ? utc_now() : std::move(timestamp);
  if (!history_.empty() && history_.back().n_acquired == acquired_.size() && !history_.back().ids.empty()) {
    a.suggested = history_.back().ids.front() == id;
    a.overridden = !a.suggested;
  }
  acquired_.push_back(std::move(a));
  return acquired_.back();
}

Session::Status Session::status() const {
  Status s;
  s.acquired = acquired_.size();
  s.candidates = registry_.size() - acquired_.size();
  if (!history_.empty() && !history_.back().ids.empty()) {
    const Suggestion& last = history_.back();
    s.last_suggestion = last.ids.front();
    if (last.n_acquired >= acquired_.size()) {
      s.last_suggestion_outcome = "pending";
    } else {
      s.last_suggestion_outcome = acquired_[last.n_acquired].suggested ? "honored" : "overridden";
    }
  }
  return s;
}

void Session::export_csv(std::ostream& out) const {
  std::vector<std::string> header{manifest_.id.value_or("id")};
  header.insert(header.end(), manifest_.selection.begin(), manifest_.selection.end());
  header.insert(header.end(), manifest_.classification.begin(), manifest_.classification.end());
  header.push_back(manifest_.label);
  write_csv_row(out, header);
  for (const auto& a : acquired_) {
    const Candidate& c = registry_[registry_index(a.id)];
    std::vector<std::string> cells{a.id};
    for (double v : c.z) cells.push_back(format_double(v));
    for (double v : a.x) cells.push_back(format_double(v));
    cells.push_back(c.label.value_or(""));
    write_csv_row(out, cells);
  }
}

SessionLock::SessionLock(const std::filesystem::path& state_path) {
  const std::string lock_path = state_path.string() + ".lock";
  fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error(ErrorKind::io, "cannot open lock file " + lock_path);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorKind::busy, "session " + state_path.string() + " is in use by another process");
  }
}

SessionLock::~SessionLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace ascf
