#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ascf/dataset.hpp"
#include "ascf/strategies.hpp"

namespace ascf {

/// A staged acquisition campaign persisted as one JSON file: the candidate
/// registry (id, z, optional label), the acquisitions recorded so far and
/// every suggestion made. Records are append-only.
class Session {
 public:
  static constexpr int kSchemaVersion = 1;

  struct Candidate {
    std::string id;
    std::vector<double> z;
    std::optional<std::string> label;
  };

  struct Acquisition {
    std::string id;
    std::vector<double> x;
    std::string timestamp;
    /// Whether this id was the top entry of the suggestion pending at record time.
    bool suggested = false;
    /// A suggestion was pending and a different id was recorded.
    bool overridden = false;
  };

  struct Suggestion {
    /// "utility" or "random" (random strategy or cold-start fallback).
    std::string mode;
    std::vector<std::string> ids;
    std::vector<double> utilities;  // empty for random picks
    std::size_t n_acquired = 0;
  };

  /// Builds the registry from a candidates CSV. Classification columns are
  /// not needed there; the label column is optional.
  static Session init(const std::filesystem::path& candidates_csv, const FeatureManifest& manifest,
                      const StrategyConfig& strategy, std::uint64_t seed,
                      MissingPolicy missing = MissingPolicy::reject);

  static Session from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  static Session load(const std::filesystem::path& path);
  /// Atomic replace through a temporary file and rename.
  void save(const std::filesystem::path& path) const;

  /// Scores the remaining candidates and appends the suggestion to the
  /// history. Empty optional when the pool is exhausted. Falls back to a
  /// seeded random pick (mode "random") before the strategy can score.
  std::optional<Suggestion> suggest(std::size_t top = 5);

  /// Appends an acquisition. Throws unknown_id, already_acquired or shape.
  const Acquisition& record(const std::string& id, const std::vector<double>& x,
                            const std::optional<std::string>& label = std::nullopt,
                            std::string timestamp = {});

  struct Status {
    std::size_t acquired = 0;
    std::size_t candidates = 0;
    std::optional<std::string> last_suggestion;
    /// "pending", "honored" or "overridden"; empty with no suggestion yet.
    std::string last_suggestion_outcome;
  };
  Status status() const;

  /// Acquired instances as a CSV in the dataset ingestion layout
  /// (id, selection columns, classification columns, label).
  void export_csv(std::ostream& out) const;

  const FeatureManifest& manifest() const noexcept { return manifest_; }
  const StrategyConfig& strategy() const noexcept { return strategy_; }
  const std::vector<Candidate>& registry() const noexcept { return registry_; }
  const std::vector<Acquisition>& acquisitions() const noexcept { return acquired_; }
  const std::vector<Suggestion>& suggestions() const noexcept { return history_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Acquisition state over the registry rows, replayed from the records.
  AcquisitionState replay() const;

 private:
  std::size_t registry_index(const std::string& id) const;
  /// Registry labels as 1 / 0, -1 where unknown.
  std::vector<int> label_codes() const;

  FeatureManifest manifest_;
  StrategyConfig strategy_;
  std::uint64_t seed_ = 0;
  std::vector<Candidate> registry_;
  std::vector<Acquisition> acquired_;
  std::vector<Suggestion> history_;
};

/// Advisory exclusive lock on `<state>.lock`, released when the holder exits
/// for any reason. Throws ErrorKind::busy when another process holds it.
class SessionLock {
 public:
  explicit SessionLock(const std::filesystem::path& state_path);
  ~SessionLock();
  SessionLock(const SessionLock&) = delete;
  SessionLock& operator=(const SessionLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace ascf
