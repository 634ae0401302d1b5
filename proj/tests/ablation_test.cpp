#include <map>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "ledger/ablation.hpp"
#include "ledger/synthgen.hpp"

using namespace ledger;

namespace {

std::map<std::string, EvalReport> run(const ModalitySignal& signal, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.modality_signal = signal;
  cfg.seed = seed;
  const auto split = split_corpus(generate_corpus(cfg), 400, 0.2, seed);
  FusionConfig base;
  base.seed = seed;
  std::map<std::string, EvalReport> out;
  for (auto& row : run_ablation(featurize_split(Featurizer{}, split), base)) out[row.name] = row.test;
  return out;
}

}  // namespace

TEST(Ablation, SeedsDifferPerBranch) {
  std::set<std::uint64_t> seeds;
  for (std::size_t k = 0; k < kAblationModalities.size(); ++k) seeds.insert(ablation_seed(11, k));
  EXPECT_EQ(seeds.size(), kAblationModalities.size());
  EXPECT_EQ(ablation_seed(11, 2), ablation_seed(11, 2));
  EXPECT_NE(ablation_seed(11, 0), ablation_seed(12, 0));
}

class CommentOnlySignal : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    rows_ = new std::map<std::string, EvalReport>(run({0.0, 1.0, 0.0}, 61));
    for (const auto& [name, e] : *rows_) {
      std::printf("%-12s P=%.3f R=%.3f F1=%.3f AUC=%.3f\n", name.c_str(), e.pr.precision, e.pr.recall, e.pr.f1, e.auc);
    }
  }
  static void TearDownTestSuite() {
    delete rows_;
    rows_ = nullptr;
  }
  const EvalReport& row(const char* name) const { return rows_->at(name); }

  static std::map<std::string, EvalReport>* rows_;
};

std::map<std::string, EvalReport>* CommentOnlySignal::rows_ = nullptr;

TEST_F(CommentOnlySignal, EveryModelScoresTheWholeTestSet) {
  ASSERT_EQ(rows_->size(), 4u);
  for (const auto& [name, e] : *rows_) EXPECT_EQ(e.counts.total(), 400u) << name;
}

TEST_F(CommentOnlySignal, CommentModelSeparatesAndOthersGuess) {
  EXPECT_GT(row("comments").auc, 0.95);
  for (const char* chance : {"hashtags", "images"}) {
    EXPECT_GE(row(chance).auc, 0.35) << chance;
    EXPECT_LE(row(chance).auc, 0.65) << chance;
  }
}

// The fused model sees the same comment features, so it should match the
// comment model. The uninformative image branch adds logit noise through its
// 2560 unit-variance inputs, which is why this can fall short.
TEST_F(CommentOnlySignal, FusedModelMatchesCommentModel) {
  EXPECT_NEAR(row("comments").pr.f1, row("multi-modal").pr.f1, 0.05);
}
