#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "ledger/rng.hpp"
#include "ledger/triage.hpp"
#include "support.hpp"

using namespace ledger;
using testing_support::TempDir;

namespace {

std::vector<std::string> order_of(const std::vector<QueueEntry>& q) {
  std::vector<std::string> out;
  for (const auto& e : q) out.push_back(e.post_id);
  return out;
}

}  // namespace

TEST(RankQueue, HigherScoreFirst) {
  const auto q = rank_queue({{"a", 0.2}, {"b", 0.9}});
  EXPECT_EQ(order_of(q), (std::vector<std::string>{"b", "a"}));
  EXPECT_TRUE(q[0].flag);
  EXPECT_FALSE(q[1].flag);
  for (const auto& e : q) EXPECT_EQ(e.status, ReviewStatus::Pending);
}

TEST(RankQueue, TiesBreakOnPostId) {
  const auto q = rank_queue({{"zeta", 0.5}, {"alpha", 0.5}, {"mid", 0.5}});
  EXPECT_EQ(order_of(q), (std::vector<std::string>{"alpha", "mid", "zeta"}));
  for (const auto& e : q) EXPECT_TRUE(e.flag);
}

TEST(RankQueue, ScoresOutsideUnitIntervalRejected) {
  EXPECT_THROW(rank_queue({{"a", 1.5}}), ValidationError);
  EXPECT_THROW(rank_queue({{"a", -0.1}}), ValidationError);
  EXPECT_THROW(rank_queue({{"a", std::nan("")}}), ValidationError);
}

// Independent oracle: insertion sort with an explicit (score desc, id asc)
// comparison, then check ranking twice changes nothing.
TEST(RankQueue, MatchesSortOracleAndIsIdempotent) {
  Rng rng(21);
  std::vector<ScoredPost> posts;
  for (int i = 0; i < 1000; ++i) {
    // Few distinct scores so the tiebreak is exercised.
    posts.push_back({"p" + std::to_string(rng.below(100000)), static_cast<double>(rng.below(40)) / 39.0});
  }
  auto oracle = posts;
  for (std::size_t i = 1; i < oracle.size(); ++i) {
    for (std::size_t j = i; j > 0; --j) {
      const auto& a = oracle[j - 1];
      const auto& b = oracle[j];
      const bool out_of_order = a.score < b.score || (a.score == b.score && a.post_id > b.post_id);
      if (!out_of_order) break;
      std::swap(oracle[j - 1], oracle[j]);
    }
  }
  const auto q = rank_queue(posts);
  ASSERT_EQ(q.size(), oracle.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    ASSERT_EQ(q[i].post_id, oracle[i].post_id) << i;
    ASSERT_EQ(q[i].score, oracle[i].score) << i;
  }
  auto again = q;
  std::reverse(again.begin(), again.end());
  sort_queue(again);
  EXPECT_EQ(again, q);
}

TEST(Efficiency, PublishedHeadline) {
  const auto r = efficiency_report(0.722, 464.0 / 2081.0, 100);
  EXPECT_NEAR(r.expected_random, 22.3, 0.05);
  EXPECT_NEAR(r.expected_ranked, 72.2, 1e-9);
  EXPECT_NEAR(r.gain, 3.24, 0.005);
  EXPECT_GT(r.gain, 3.0);
}

TEST(Efficiency, EdgeCases) {
  const auto same = efficiency_report(0.3, 0.3, 50);
  EXPECT_DOUBLE_EQ(same.gain, 1.0);
  const auto none = efficiency_report(0.9, 0.1, 0);
  EXPECT_EQ(none.expected_random, 0.0);
  EXPECT_EQ(none.expected_ranked, 0.0);
  EXPECT_THROW(efficiency_report(0.5, 0.0, 10), ValidationError);
  EXPECT_THROW(efficiency_report(1.2, 0.5, 10), ValidationError);
}

TEST(Efficiency, GainAboveThreeWhenPrecisionTriplesBaseRate) {
  Rng rng(22);
  for (int i = 0; i < 10000; ++i) {
    const double base = rng.uniform(1e-4, 1.0 / 3.0);
    const double precision = std::min(1.0, 3.0 * base * (1.0 + rng.uniform(1e-9, 2.0)));
    if (!(precision > 3.0 * base)) continue;
    ASSERT_GT(efficiency_report(precision, base, 100).gain, 3.0) << precision << " " << base;
  }
}

TEST(Snippet, ContactWordsAndMedia) {
  PostRecord p;
  p.post_id = "x";
  p.hashtags = {"daigou"};
  p.comments = {"DM me or add WeChat", "wechat again, or WhatsApp"};
  p.media = MediaContent::image_file("imgs/x.png");
  const auto s = snippet_of(p);
  EXPECT_EQ(s.first_comment, "DM me or add WeChat");
  EXPECT_EQ(s.contact_mentions, (std::vector<std::string>{"dm", "wechat", "whatsapp"}));
  EXPECT_EQ(s.media_kind, "image");
  EXPECT_EQ(s.image_ref, "imgs/x.png");

  p.media = MediaContent::video(3);
  p.comments.clear();
  const auto v = snippet_of(p);
  EXPECT_EQ(v.media_kind, "video_placeholder");
  EXPECT_TRUE(v.image_ref.empty());
  EXPECT_TRUE(v.first_comment.empty());
}

TEST(QueueFile, RoundTripAndReorder) {
  TempDir dir;
  auto q = rank_queue({{"a", 0.1}, {"b", 0.8}, {"c", 0.8}});
  q[1].status = ReviewStatus::Rejected;
  q[1].reviewer = "officer7";
  q[1].reviewed_at = 1700000000;
  q[0].snippet.hashtags = {"口红"};
  q[0].snippet.contact_mentions = {"line"};
  auto shuffled = q;
  std::swap(shuffled[0], shuffled[2]);
  write_queue(dir / "q.jsonl", shuffled);
  EXPECT_EQ(read_queue(dir / "q.jsonl"), q);
}

TEST(QueueFile, BadStatusReportsLine) {
  TempDir dir;
  testing_support::spit(dir / "q.jsonl", "{\"post_id\":\"a\",\"score\":0.4}\n{\"post_id\":\"b\",\"score\":0.3,\"status\":\"Maybe\"}\n");
  try {
    read_queue(dir / "q.jsonl");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(BuildQueue, ScoresWithModel) {
  FusionModel m;
  m.config.dims = {0, kTextDim, 0};
  m.params = FusionParams(kTextDim);
  // Zero weights: every post scores sigmoid(ln 3).
  m.params.b = std::log(3.0);
  std::vector<PostRecord> posts(3);
  for (std::size_t i = 0; i < posts.size(); ++i) {
    posts[i].post_id = "p" + std::to_string(2 - i);
    posts[i].comments = {"hi"};
    posts[i].media = MediaContent::video(i);
  }
  const auto q = build_queue(m, Featurizer{}, posts);
  EXPECT_EQ(order_of(q), (std::vector<std::string>{"p0", "p1", "p2"}));
  for (const auto& e : q) {
    EXPECT_NEAR(e.score, 0.75, 1e-12);
    EXPECT_TRUE(e.flag);
  }
}
