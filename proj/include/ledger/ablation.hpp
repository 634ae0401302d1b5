#pragma once

// Four-way modality ablation: the same head trained on hashtags only,
// comments only, images only and all three. Each model gets its own seed
// derived from the master seed and its branch index.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/features.hpp"
#include "ledger/fusion.hpp"
#include "ledger/ingestion.hpp"
#include "ledger/metrics.hpp"
#include "ledger/rng.hpp"

namespace ledger {

struct Modality {
  const char* name;
  BranchDims dims;
};

inline constexpr std::array<Modality, 4> kAblationModalities = {{
    {"hashtags", {kTextDim, 0, 0}},
    {"comments", {0, kTextDim, 0}},
    {"images", {0, 0, kImageDim}},
    {"multi-modal", kFullDims},
}};

struct FeaturizedSplit {
  std::vector<Sample> train, validation, test;
};

inline FeaturizedSplit featurize_split(const Featurizer& f, const DatasetSplit& s) {
  return {featurize(f, s.train), featurize(f, s.validation), featurize(f, s.test)};
}

struct AblationRow {
  std::string name;
  TrainReport train_report;
  EvalReport test;
};

inline EvalReport evaluate_model(const FusionParams& params, std::span<const Sample> test, double threshold) {
  const auto scored = score_samples(params, test);
  return evaluate(scored, threshold);
}

inline std::uint64_t ablation_seed(std::uint64_t master, std::size_t branch) {
  return Rng::stream(master, 0x61626c00u + branch).next();
}

// `split` holds full-width (4096) features; each model sees its branches.
inline std::vector<AblationRow> run_ablation(const FeaturizedSplit& split, const FusionConfig& base) {
  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < kAblationModalities.size(); ++k) {
    const auto& mod = kAblationModalities[k];
    FusionConfig cfg = base;
    cfg.dims = mod.dims;
    cfg.seed = ablation_seed(base.seed, k);
    const auto train_set = project(split.train, mod.dims);
    const auto val_set = project(split.validation, mod.dims);
    const auto test_set = project(split.test, mod.dims);
    auto trained = train(train_set, val_set, cfg);
    rows.push_back({mod.name, std::move(trained.report), evaluate_model(trained.params, test_set, cfg.threshold)});
  }
  return rows;
}

inline nlohmann::ordered_json ablation_to_json(const std::vector<AblationRow>& rows, const FusionConfig& base) {
  nlohmann::ordered_json j;
  j["config"] = to_json(base);
  auto& models = j["models"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    auto row = to_json(r.test, /*with_roc=*/true);
    row["model"] = r.name;
    models.push_back(std::move(row));
  }
  return j;
}

}  // namespace ledger
