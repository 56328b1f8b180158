#include "srprom/prominence.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "srprom/io.hpp"

namespace srprom::stats {

Answer answer_from_string(const std::string& s) {
  if (s == "artifact") return Answer::Artifact;
  if (s == "no-artifact") return Answer::NoArtifact;
  if (s == "load-error") return Answer::LoadError;
  throw ValidationError("unknown answer '" + s + "'");
}

std::string to_string(Answer a) {
  switch (a) {
    case Answer::Artifact:
      return "artifact";
    case Answer::NoArtifact:
      return "no-artifact";
    case Answer::LoadError:
      return "load-error";
  }
  return "?";
}

std::string to_string(QcScope s) { return s == QcScope::Assignment ? "assignment" : "worker"; }

QcScope qc_scope_from_string(const std::string& s) {
  if (s == "assignment") return QcScope::Assignment;
  if (s == "worker") return QcScope::Worker;
  throw ValidationError("unknown QC scope '" + s + "' (expected assignment or worker)");
}

int Assignment::control_mistakes() const {
  return static_cast<int>(std::count(control_outcomes.begin(), control_outcomes.end(), false));
}

std::vector<Assignment> filter_assignments(const std::vector<Assignment>& assignments, QcScope scope) {
  std::set<std::string> banned;
  if (scope == QcScope::Worker) {
    for (const auto& a : assignments) {
      if (a.control_mistakes() >= kMaxControlMistakes) banned.insert(a.worker_id);
    }
  }
  std::vector<Assignment> out;
  for (const auto& a : assignments) {
    if (a.control_mistakes() >= kMaxControlMistakes) continue;
    if (banned.count(a.worker_id)) continue;
    out.push_back(a);
  }
  return out;
}

std::vector<Vote> collect_votes(const std::vector<Assignment>& valid) {
  std::vector<Vote> votes;
  for (const auto& a : valid) {
    for (const auto& r : a.responses) {
      if (r.answer == Answer::LoadError) continue;
      votes.push_back({r.question_id, r.answer == Answer::Artifact});
    }
  }
  return votes;
}

std::vector<Vote> qc_filter(const std::vector<Assignment>& assignments, QcScope scope) {
  return collect_votes(filter_assignments(assignments, scope));
}

std::map<std::string, VoteTally> tally(const std::vector<Vote>& votes) {
  std::map<std::string, VoteTally> out;
  for (const auto& v : votes) {
    auto& t = out[v.question_id];
    ++t.total;
    if (v.positive) ++t.positive;
  }
  return out;
}

std::optional<double> prominence(const std::vector<bool>& votes) {
  if (votes.empty()) return std::nullopt;
  const auto pos = std::count(votes.begin(), votes.end(), true);
  return static_cast<double>(pos) / static_cast<double>(votes.size());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of empty data");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ConfidenceInterval bootstrap_ci(const std::vector<bool>& votes, const BootstrapParams& params) {
  if (votes.empty()) throw ValidationError("bootstrap_ci: no votes");
  if (params.assessors < 1) throw ValidationError("bootstrap_ci: k must be >= 1");
  if (params.resamples < 1) throw ValidationError("bootstrap_ci: n must be >= 1");
  if (!(params.level > 0.0 && params.level < 1.0)) throw ValidationError("bootstrap_ci: level must be in (0,1)");

  std::vector<double> stats(static_cast<std::size_t>(params.resamples));
  for (int i = 0; i < params.resamples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 engine(seq);
    std::uniform_int_distribution<std::size_t> pick(0, votes.size() - 1);
    int pos = 0;
    for (int j = 0; j < params.assessors; ++j) pos += votes[pick(engine)] ? 1 : 0;
    stats[static_cast<std::size_t>(i)] = static_cast<double>(pos) / params.assessors;
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - params.level) / 2.0;
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

ComponentSummary component_summary(const std::vector<ArtifactRecord>& records) {
  ComponentSummary s;
  double sum = 0.0;
  for (const auto& r : records) {
    if (!r.prominence) continue;
    ++s.masks;
    sum += *r.prominence;
    if (*r.prominence >= kProminentCutoff) ++s.prominent;
  }
  if (s.masks > 0) {
    s.mean_prominence = sum / static_cast<double>(s.masks);
    s.prominent_fraction = static_cast<double>(s.prominent) / static_cast<double>(s.masks);
  }
  return s;
}

WorkerCounts count_workers(const std::vector<Assignment>& all, const std::vector<Assignment>& valid) {
  std::set<std::string> a;
  std::set<std::string> v;
  for (const auto& x : all) a.insert(x.worker_id);
  for (const auto& x : valid) v.insert(x.worker_id);
  return {a.size(), v.size()};
}

std::vector<Assignment> parse_votes_jsonl(std::string_view text) {
  std::vector<Assignment> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Assignment a;
      a.worker_id = j.at("worker").get<std::string>();
      a.assignment_id = j.value("assignment", std::string{});
      for (const auto& r : j.at("responses")) {
        a.responses.push_back({r.at("question").get<std::string>(), answer_from_string(r.at("answer").get<std::string>())});
      }
      for (const auto& c : j.at("controls")) a.control_outcomes.push_back(c.get<bool>());
      out.push_back(std::move(a));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("vote file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("vote file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Assignment> read_votes(const std::filesystem::path& path) {
  return parse_votes_jsonl(io::read_file_bytes(path));
}

std::string format_votes_jsonl(const std::vector<Assignment>& assignments) {
  std::string out;
  for (const auto& a : assignments) {
    nlohmann::ordered_json j;
    j["worker"] = a.worker_id;
    j["assignment"] = a.assignment_id;
    j["responses"] = nlohmann::ordered_json::array();
    for (const auto& r : a.responses) j["responses"].push_back({{"question", r.question_id}, {"answer", to_string(r.answer)}});
    j["controls"] = nlohmann::ordered_json::array();
    for (bool c : a.control_outcomes) j["controls"].push_back(c);
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace srprom::stats
