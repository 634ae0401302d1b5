#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "ledger/metrics.hpp"
#include "ledger/rng.hpp"

using namespace ledger;

namespace {

std::vector<ScoredLabel> random_scores(Rng& rng, std::size_t n, int levels) {
  std::vector<ScoredLabel> out(n);
  for (auto& s : out) {
    s.truth = static_cast<int>(rng.below(2));
    // Coarse levels force plenty of ties.
    s.score = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) / (levels - 1);
    if (s.truth && rng.bernoulli(0.3)) s.score = std::min(1.0, s.score + 0.2);
  }
  return out;
}

// Probability that a random positive outscores a random negative, ties
// counting one half, over all pairs.
double mann_whitney(const std::vector<ScoredLabel>& s) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : s) {
    if (!p.truth) continue;
    for (const auto& n : s) {
      if (n.truth) continue;
      ++pairs;
      wins += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST(Confusion, CountsAtThreshold) {
  const std::vector<ScoredLabel> s = {{0.9, 1}, {0.5, 1}, {0.49, 1}, {0.7, 0}, {0.1, 0}, {0.5, 0}};
  const auto c = confusion(s, 0.5);
  EXPECT_EQ(c, (Confusion{2, 2, 1, 1}));
  EXPECT_EQ(c.total(), s.size());
}

TEST(Prf1, Formula) {
  const auto r = prf1(Confusion{72, 28, 800, 17});
  EXPECT_NEAR(r.precision, 0.72, 1e-12);
  EXPECT_NEAR(r.recall, 72.0 / 89.0, 1e-12);
  EXPECT_NEAR(r.f1, 2 * 0.72 * (72.0 / 89.0) / (0.72 + 72.0 / 89.0), 1e-12);
  EXPECT_FALSE(r.precision_undefined);
}

TEST(Prf1, ZeroOverZeroIsFlagged) {
  const auto none_flagged = prf1(Confusion{0, 0, 10, 5});
  EXPECT_EQ(none_flagged.precision, 0.0);
  EXPECT_TRUE(none_flagged.precision_undefined);
  EXPECT_FALSE(none_flagged.recall_undefined);
  EXPECT_EQ(none_flagged.f1, 0.0);

  const auto no_positives = prf1(Confusion{0, 3, 7, 0});
  EXPECT_TRUE(no_positives.recall_undefined);
  EXPECT_EQ(no_positives.recall, 0.0);
  EXPECT_EQ(no_positives.f1, 0.0);
}

// The published precision/recall pairs reproduce the published F1 column.
TEST(Prf1, PublishedRows) {
  struct Row {
    double p, r, f1;
  };
  for (const auto row : {Row{0.444, 0.890, 0.593}, Row{0.656, 0.855, 0.742}, Row{0.756, 0.645, 0.696},
                         Row{0.722, 0.807, 0.762}}) {
    EXPECT_NEAR(f1_score(row.p, row.r), row.f1, 0.001) << row.p << "/" << row.r;
  }
  EXPECT_NEAR(f1_score(0.722, 0.807), 0.762, 0.0005);
}

TEST(Roc, MatchesMannWhitneyWithTies) {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    auto s = random_scores(rng, 2 + rng.below(80), 2 + static_cast<int>(rng.below(10)));
    s[0].truth = 1;
    s[1].truth = 0;
    EXPECT_NEAR(roc_auc(s).auc, mann_whitney(s), 1e-12);
  }
}

TEST(Roc, EndpointsAndMonotone) {
  Rng rng(32);
  for (int t = 0; t < 100; ++t) {
    auto s = random_scores(rng, 2 + rng.below(60), 5);
    s[0].truth = 1;
    s[1].truth = 0;
    const auto roc = roc_auc(s);
    ASSERT_GE(roc.points.size(), 2u);
    EXPECT_EQ(roc.points.front().fpr, 0.0);
    EXPECT_EQ(roc.points.front().tpr, 0.0);
    EXPECT_EQ(roc.points.back().fpr, 1.0);
    EXPECT_EQ(roc.points.back().tpr, 1.0);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
      EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
      EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
      EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
    }
    EXPECT_GE(roc.auc, 0.0);
    EXPECT_LE(roc.auc, 1.0);
  }
}

TEST(Roc, KnownCurves) {
  const std::vector<ScoredLabel> perfect = {{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}};
  EXPECT_EQ(roc_auc(perfect).auc, 1.0);
  const std::vector<ScoredLabel> reversed = {{0.1, 1}, {0.2, 1}, {0.8, 0}, {0.9, 0}};
  EXPECT_EQ(roc_auc(reversed).auc, 0.0);
  const std::vector<ScoredLabel> all_tied = {{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}};
  EXPECT_EQ(roc_auc(all_tied).auc, 0.5);
  EXPECT_EQ(roc_auc(all_tied).points.size(), 2u);
}

TEST(Roc, DegenerateLabels) {
  const std::vector<ScoredLabel> only_pos = {{0.3, 1}, {0.6, 1}};
  EXPECT_THROW(roc_auc(only_pos), DegenerateLabels);
  const auto report = evaluate(only_pos, 0.5);
  EXPECT_TRUE(std::isnan(report.auc));
  EXPECT_TRUE(to_json(report)["auc"].is_null());
}

TEST(Evaluate, CountsSumToSize) {
  Rng rng(33);
  const auto s = random_scores(rng, 137, 20);
  const auto r = evaluate(s, 0.5);
  EXPECT_EQ(r.counts.total(), 137u);
  const auto j = to_json(r, true);
  EXPECT_EQ(j["n"], 137);
  EXPECT_EQ(j["tp"].get<std::size_t>() + j["fp"].get<std::size_t>() + j["tn"].get<std::size_t>() +
                j["fn"].get<std::size_t>(),
            137u);
  EXPECT_NEAR(j["auc"].get<double>(), mann_whitney(s), 1e-12);
}

TEST(Evaluate, RocCsv) {
  const std::vector<ScoredLabel> s = {{0.75, 1}, {0.25, 0}};
  std::ostringstream out;
  write_roc_csv(out, roc_auc(s).points);
  EXPECT_EQ(out.str(), "threshold,fpr,tpr\ninf,0,0\n0.75,0,1\n0.25,1,1\n");
}
