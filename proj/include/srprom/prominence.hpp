#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srprom/types.hpp"

namespace srprom::stats {

enum class Answer { Artifact, NoArtifact, LoadError };

Answer answer_from_string(const std::string& s);
std::string to_string(Answer a);

struct Response {
  std::string question_id;
  Answer answer = Answer::NoArtifact;
  friend bool operator==(const Response&, const Response&) = default;
};

/// One crowd assignment: a group of questions answered by one worker, with
/// the outcomes of the hidden control questions (true = answered correctly).
struct Assignment {
  std::string worker_id;
  std::string assignment_id;
  std::vector<Response> responses;
  std::vector<bool> control_outcomes;

  int control_mistakes() const;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Assignments with this many failed controls are discarded.
inline constexpr int kMaxControlMistakes = 2;
inline constexpr double kProminentCutoff = 0.5;

enum class QcScope {
  Assignment,  // discard only the failing assignment
  Worker,      // discard every assignment of a worker who failed any assignment
};

std::string to_string(QcScope s);
QcScope qc_scope_from_string(const std::string& s);

struct Vote {
  std::string question_id;
  bool positive = false;
  friend bool operator==(const Vote&, const Vote&) = default;
};

/// Keeps assignments that pass the control check. Idempotent; preserves input order.
std::vector<Assignment> filter_assignments(const std::vector<Assignment>& assignments, QcScope scope = QcScope::Assignment);

/// Votes from already-filtered assignments; load errors are dropped.
std::vector<Vote> collect_votes(const std::vector<Assignment>& valid);

/// filter_assignments followed by collect_votes.
std::vector<Vote> qc_filter(const std::vector<Assignment>& assignments, QcScope scope = QcScope::Assignment);

struct VoteTally {
  int positive = 0;
  int total = 0;
};

/// Per-question positive/total counts, keyed by question id.
std::map<std::string, VoteTally> tally(const std::vector<Vote>& votes);

/// Fraction of positive votes; nullopt for an empty list.
std::optional<double> prominence(const std::vector<bool>& votes);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  double half_width() const { return 0.5 * (high - low); }
};

struct BootstrapParams {
  int assessors = 30;     // k: votes drawn per resample
  int resamples = 1000;   // n
  double level = 0.95;
  std::uint64_t seed = 0;
};

/// Percentile interval of resampled prominences. Resample i draws from its
/// own engine seeded with (seed, i), so results do not depend on how the
/// resamples are scheduled.
ConfidenceInterval bootstrap_ci(const std::vector<bool>& votes, const BootstrapParams& params);

/// Linear-interpolation quantile of sorted data (q in [0,1]).
double quantile_sorted(const std::vector<double>& sorted, double q);

struct ComponentSummary {
  std::size_t masks = 0;
  std::optional<double> mean_prominence;
  std::size_t prominent = 0;
  double prominent_fraction = 0.0;
};

/// Counts over records that carry a prominence value.
ComponentSummary component_summary(const std::vector<ArtifactRecord>& records);

/// Distinct worker ids before and after QC.
struct WorkerCounts {
  std::size_t total = 0;
  std::size_t valid = 0;
};
WorkerCounts count_workers(const std::vector<Assignment>& all, const std::vector<Assignment>& valid);

// Vote files: JSON lines, one assignment per line:
//   {"worker": "w1", "assignment": "a1",
//    "responses": [{"question": "q", "answer": "artifact" | "no-artifact" | "load-error"}],
//    "controls": [true, true, false, true]}
std::vector<Assignment> parse_votes_jsonl(std::string_view text);
std::vector<Assignment> read_votes(const std::filesystem::path& path);
std::string format_votes_jsonl(const std::vector<Assignment>& assignments);

}  // namespace srprom::stats
