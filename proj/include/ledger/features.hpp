#pragma once

// Per-post feature assembly: the three modality vectors and their
// concatenation into the joint 4096-d input of the classifier.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ledger/domain.hpp"
#include "ledger/image_features.hpp"
#include "ledger/sidecar.hpp"
#include "ledger/text_features.hpp"

namespace ledger {

struct FeatureBundle {
  TextVector hashtag_vec;
  TextVector comment_vec;
  ImageVector image_vec;
  std::optional<std::vector<double>> joint;
};

// Output order is (hashtag, comment, image).
inline std::vector<double> concat_features(const FeatureBundle& b) {
  if (b.hashtag_vec.values.size() != kTextDim) throw DimensionError(b.hashtag_vec.values.size(), kTextDim);
  if (b.comment_vec.values.size() != kTextDim) throw DimensionError(b.comment_vec.values.size(), kTextDim);
  if (b.image_vec.values.size() != kImageDim) throw DimensionError(b.image_vec.values.size(), kImageDim);
  std::vector<double> joint;
  joint.reserve(kJointDim);
  joint.insert(joint.end(), b.hashtag_vec.values.begin(), b.hashtag_vec.values.end());
  joint.insert(joint.end(), b.comment_vec.values.begin(), b.comment_vec.values.end());
  joint.insert(joint.end(), b.image_vec.values.begin(), b.image_vec.values.end());
  return joint;
}

// Branch widths as seen by a model. Inactive branches have width 0.
using BranchDims = std::array<std::size_t, 3>;

inline constexpr BranchDims kFullDims = {kTextDim, kTextDim, kImageDim};
inline constexpr std::array<std::size_t, 3> kBranchOffsets = {0, kTextDim, 2 * kTextDim};

inline std::size_t joint_dim(const BranchDims& dims) { return dims[0] + dims[1] + dims[2]; }

// Selects the active branches of a full 4096-d joint vector.
inline std::vector<double> project(const std::vector<double>& full, const BranchDims& dims) {
  if (full.size() != kJointDim) throw DimensionError(full.size(), kJointDim);
  std::vector<double> out;
  out.reserve(joint_dim(dims));
  for (std::size_t b = 0; b < 3; ++b) {
    if (dims[b] == 0) continue;
    if (dims[b] != kFullDims[b]) throw DimensionError(dims[b], kFullDims[b]);
    const auto first = full.begin() + static_cast<std::ptrdiff_t>(kBranchOffsets[b]);
    out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(dims[b]));
  }
  return out;
}

enum class FeatureSource { Baseline, Sidecar };

struct FeaturizerOptions {
  FeatureSource source = FeatureSource::Baseline;
  VideoPolicy video_policy = VideoPolicy::Noise;
  // Sidecar mode reads hashtags.emb, comments.emb and images.emb from here.
  std::filesystem::path sidecar_dir;
};

inline constexpr const char* kHashtagSidecar = "hashtags.emb";
inline constexpr const char* kCommentSidecar = "comments.emb";
inline constexpr const char* kImageSidecar = "images.emb";

class Featurizer {
 public:
  explicit Featurizer(FeaturizerOptions opts = {}) : opts_(std::move(opts)) {
    if (opts_.source == FeatureSource::Sidecar) {
      hashtags_ = EmbeddingTable::read(opts_.sidecar_dir / kHashtagSidecar);
      comments_ = EmbeddingTable::read(opts_.sidecar_dir / kCommentSidecar);
      images_ = EmbeddingTable::read(opts_.sidecar_dir / kImageSidecar);
    }
  }

  const FeaturizerOptions& options() const noexcept { return opts_; }

  FeatureBundle bundle(const PostRecord& p) const {
    FeatureBundle b;
    if (opts_.source == FeatureSource::Sidecar) {
      b.hashtag_vec = text_vector_from(hashtags_, p.post_id);
      b.comment_vec = text_vector_from(comments_, p.post_id);
      b.image_vec = image_vector_from(images_, p.post_id);
    } else {
      b.hashtag_vec = embed_hashtags(p);
      b.comment_vec = embed_comments(p);
      b.image_vec = featurize_media(p.media, opts_.video_policy);
    }
    b.joint = concat_features(b);
    return b;
  }

  std::vector<double> joint(const PostRecord& p) const { return *bundle(p).joint; }

 private:
  FeaturizerOptions opts_;
  EmbeddingTable hashtags_, comments_, images_;
};

// A featurized, labeled sample.
struct Sample {
  std::vector<double> x;
  int y = 0;
};

inline std::vector<Sample> featurize(const Featurizer& f, const std::vector<AnnotatedPost>& posts) {
  std::vector<Sample> out;
  out.reserve(posts.size());
  for (const auto& a : posts) out.push_back({f.joint(a.post), is_tax_evasion_positive(a) ? 1 : 0});
  return out;
}

inline std::vector<Sample> project(const std::vector<Sample>& full, const BranchDims& dims) {
  std::vector<Sample> out;
  out.reserve(full.size());
  for (const auto& s : full) out.push_back({project(s.x, dims), s.y});
  return out;
}

}  // namespace ledger
