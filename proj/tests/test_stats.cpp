#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "srprom/prominence.hpp"
#include "test_util.hpp"

using namespace srprom;
using namespace srprom::stats;

namespace {

Assignment make_assignment(const std::string& worker, const std::string& id, int n_questions, int wrong_controls,
                           Answer answer = Answer::Artifact) {
  Assignment a;
  a.worker_id = worker;
  a.assignment_id = id;
  for (int i = 0; i < n_questions; ++i) a.responses.push_back({id + "_q" + std::to_string(i), answer});
  for (int i = 0; i < 4; ++i) a.control_outcomes.push_back(i >= wrong_controls);
  return a;
}

std::vector<bool> votes_with(int positive, int total) {
  std::vector<bool> v(static_cast<std::size_t>(total), false);
  std::fill(v.begin(), v.begin() + positive, true);
  return v;
}

double median_half_width(int k, std::uint64_t seed0) {
  const auto votes = votes_with(125, 250);
  std::vector<double> widths;
  for (std::uint64_t s = 0; s < 20; ++s) {
    BootstrapParams p;
    p.assessors = k;
    p.resamples = 1000;
    p.seed = seed0 + s;
    widths.push_back(bootstrap_ci(votes, p).half_width());
  }
  return oracle::median(widths);
}

}  // namespace

// --- QC -------------------------------------------------------------------------

TEST(Qc, TwoWrongControlsDiscardAssignment) {
  const auto votes = qc_filter({make_assignment("w", "a", 16, 2)});
  EXPECT_TRUE(votes.empty());
  EXPECT_TRUE(qc_filter({make_assignment("w", "a", 16, 3)}).empty());
}

TEST(Qc, OneWrongControlKeepsAll) {
  const auto votes = qc_filter({make_assignment("w", "a", 16, 1)});
  EXPECT_EQ(votes.size(), 16u);
  for (const auto& v : votes) EXPECT_TRUE(v.positive);
}

TEST(Qc, LoadErrorsAreNotVotes) {
  auto a = make_assignment("w", "a", 4, 0, Answer::NoArtifact);
  a.responses[1].answer = Answer::LoadError;
  a.responses[2].answer = Answer::Artifact;
  const auto votes = qc_filter({a});
  ASSERT_EQ(votes.size(), 3u);
  const auto t = tally(votes);
  EXPECT_EQ(t.count("a_q1"), 0u);
  EXPECT_EQ(t.at("a_q2").positive, 1);
  EXPECT_EQ(t.at("a_q0").positive, 0);
  EXPECT_EQ(t.at("a_q0").total, 1);
}

TEST(Qc, WorkerScopeDropsEveryAssignmentOfFailingWorker) {
  const std::vector<Assignment> in = {make_assignment("w1", "a1", 5, 0), make_assignment("w1", "a2", 5, 2),
                                      make_assignment("w2", "a3", 5, 1)};
  EXPECT_EQ(filter_assignments(in, QcScope::Assignment).size(), 2u);
  const auto worker = filter_assignments(in, QcScope::Worker);
  ASSERT_EQ(worker.size(), 1u);
  EXPECT_EQ(worker[0].worker_id, "w2");
  const auto counts = count_workers(in, worker);
  EXPECT_EQ(counts.total, 2u);
  EXPECT_EQ(counts.valid, 1u);
}

TEST(Qc, IdempotentAndOrderIndependent) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> wrong(0, 4), worker(0, 5);
  std::vector<Assignment> in;
  for (int i = 0; i < 40; ++i)
    in.push_back(make_assignment("w" + std::to_string(worker(rng)), "a" + std::to_string(i), 5, wrong(rng)));
  for (auto scope : {QcScope::Assignment, QcScope::Worker}) {
    const auto once = filter_assignments(in, scope);
    EXPECT_EQ(filter_assignments(once, scope), once);
    auto shuffled = in;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto t1 = tally(qc_filter(in, scope));
    auto t2 = tally(qc_filter(shuffled, scope));
    ASSERT_EQ(t1.size(), t2.size());
    for (const auto& [q, c] : t1) {
      EXPECT_EQ(t2.at(q).positive, c.positive);
      EXPECT_EQ(t2.at(q).total, c.total);
    }
  }
}

// --- prominence -------------------------------------------------------------------

TEST(Prominence, Examples) {
  EXPECT_DOUBLE_EQ(*prominence(votes_with(18, 30)), 0.6);
  EXPECT_DOUBLE_EQ(*prominence(votes_with(0, 30)), 0.0);
  EXPECT_FALSE(prominence({}).has_value());
}

TEST(Prominence, PermutationInvariantAndStrictlyIncreasing) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    std::uniform_int_distribution<int> n(1, 60);
    const int total = n(rng);
    std::uniform_int_distribution<int> p(0, total);
    auto v = votes_with(p(rng), total);
    const double base = *prominence(v);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(*prominence(v), base);
    v.push_back(true);
    if (base < 1.0) {
      EXPECT_GT(*prominence(v), base);
    }
  }
}

// --- bootstrap --------------------------------------------------------------------

TEST(Bootstrap, DegenerateVotes) {
  BootstrapParams p;
  p.seed = 9;
  for (int k : {1, 30, 100}) {
    p.assessors = k;
    const auto ci = bootstrap_ci(votes_with(250, 250), p);
    EXPECT_EQ(ci.low, 1.0);
    EXPECT_EQ(ci.high, 1.0);
  }
}

TEST(Bootstrap, Reproducible) {
  const auto votes = votes_with(90, 250);
  BootstrapParams p;
  p.seed = 1234;
  const auto a = bootstrap_ci(votes, p);
  const auto b = bootstrap_ci(votes, p);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
}

TEST(Bootstrap, HalfWidthsMatchReportedSpread) {
  const double w100 = median_half_width(100, 77);
  const double w30 = median_half_width(30, 77);
  const double w10 = median_half_width(10, 77);
  EXPECT_NEAR(w100, 0.10, 0.03);
  EXPECT_NEAR(w30, 0.20, 0.05);
  EXPECT_LT(w100, w10);
}

TEST(Bootstrap, RejectsBadParams) {
  BootstrapParams p;
  EXPECT_THROW(bootstrap_ci({}, p), ValidationError);
  p.assessors = 0;
  EXPECT_THROW(bootstrap_ci({true}, p), ValidationError);
  p.assessors = 5;
  p.level = 1.0;
  EXPECT_THROW(bootstrap_ci({true}, p), ValidationError);
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> s = {1, 2, 4, 8};
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.25), 1.75);
}

// --- summaries ---------------------------------------------------------------------

TEST(Summary, InclusiveCutoff) {
  ArtifactRecord r;
  r.prominence = 0.5;
  const auto s = component_summary({r});
  EXPECT_EQ(s.masks, 1u);
  EXPECT_EQ(s.prominent, 1u);
  EXPECT_DOUBLE_EQ(s.prominent_fraction, 1.0);
}

TEST(Summary, EmptyHasNoMean) {
  const auto s = component_summary({});
  EXPECT_EQ(s.masks, 0u);
  EXPECT_FALSE(s.mean_prominence.has_value());
  ArtifactRecord no_votes;
  EXPECT_EQ(component_summary({no_votes}).masks, 0u);
}

TEST(Summary, MeanAndCounts) {
  std::vector<ArtifactRecord> rs;
  for (double p : {0.1, 0.49, 0.5, 0.9}) {
    ArtifactRecord r;
    r.prominence = p;
    rs.push_back(r);
  }
  const auto s = component_summary(rs);
  EXPECT_NEAR(*s.mean_prominence, 0.4975, 1e-15);
  EXPECT_EQ(s.prominent, 2u);
}

// --- vote files --------------------------------------------------------------------

TEST(VotesJsonl, RoundTripAndErrors) {
  std::vector<Assignment> in = {make_assignment("w1", "a1", 3, 1), make_assignment("w2", "a2", 2, 0)};
  in[0].responses[2].answer = Answer::LoadError;
  in[1].responses[0].answer = Answer::NoArtifact;
  const auto text = format_votes_jsonl(in);
  EXPECT_EQ(parse_votes_jsonl(text), in);
  EXPECT_EQ(parse_votes_jsonl(text + "\n\n"), in);

  testutil::TempDir dir("votes");
  {
    std::ofstream(dir / "v.jsonl") << text;
  }
  EXPECT_EQ(read_votes(dir / "v.jsonl"), in);
  EXPECT_THROW(read_votes(dir / "missing.jsonl"), IoError);

  EXPECT_THROW(parse_votes_jsonl("{\"worker\":\"w\"}\n"), ValidationError);
  EXPECT_THROW(parse_votes_jsonl(
                   R"({"worker":"w","assignment":"a","responses":[{"question":"q","answer":"maybe"}],"controls":[]})"),
               ValidationError);
  EXPECT_THROW(parse_votes_jsonl("not json\n"), ValidationError);
}
