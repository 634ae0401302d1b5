#pragma once

// Review queue: posts ranked by suspicion score for manual confirmation, and
// the expected-hits arithmetic behind ranking.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/domain.hpp"
#include "ledger/errors.hpp"
#include "ledger/features.hpp"
#include "ledger/fusion.hpp"
#include "ledger/jsonl.hpp"
#include "ledger/text_features.hpp"

namespace ledger {

enum class ReviewStatus { Pending, ConfirmedEvasion, Rejected };

inline std::string_view status_name(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::Pending:
      return "Pending";
    case ReviewStatus::ConfirmedEvasion:
      return "ConfirmedEvasion";
    case ReviewStatus::Rejected:
      return "Rejected";
  }
  return "Pending";
}

inline std::optional<ReviewStatus> parse_status(std::string_view s) {
  if (s == "Pending") return ReviewStatus::Pending;
  if (s == "ConfirmedEvasion") return ReviewStatus::ConfirmedEvasion;
  if (s == "Rejected") return ReviewStatus::Rejected;
  return std::nullopt;
}

// What a reviewer sees of the post without opening it.
struct PostSnippet {
  std::vector<std::string> hashtags;
  std::string first_comment;
  std::string media_kind;  // "image", "video_placeholder" or "precomputed_embedding"
  std::string image_ref;   // empty for videos and embeddings
  std::vector<std::string> contact_mentions;

  bool operator==(const PostSnippet&) const = default;
};

struct QueueEntry {
  std::string post_id;
  double score = 0.0;
  bool flag = false;
  ReviewStatus status = ReviewStatus::Pending;
  std::string reviewer;
  std::optional<std::int64_t> reviewed_at;  // unix seconds
  PostSnippet snippet;

  bool operator==(const QueueEntry&) const = default;
};

struct ScoredPost {
  std::string post_id;
  double score = 0.0;
};

// Score descending, then post_id ascending.
inline bool queue_before(const QueueEntry& a, const QueueEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.post_id < b.post_id;
}

inline void sort_queue(std::vector<QueueEntry>& q) { std::sort(q.begin(), q.end(), queue_before); }

inline std::vector<QueueEntry> rank_queue(const std::vector<ScoredPost>& scored, double threshold = 0.5) {
  std::vector<QueueEntry> q;
  q.reserve(scored.size());
  for (const auto& s : scored) {
    if (!(s.score >= 0.0 && s.score <= 1.0)) {
      throw ValidationError("score for '" + s.post_id + "' is outside [0,1]");
    }
    QueueEntry e;
    e.post_id = s.post_id;
    e.score = s.score;
    e.flag = s.score >= threshold;
    q.push_back(std::move(e));
  }
  sort_queue(q);
  return q;
}

inline constexpr std::string_view kContactWords[] = {"whatsapp", "wechat", "line", "telegram",
                                                     "kakaotalk", "phone", "dm", "wa"};

inline PostSnippet snippet_of(const PostRecord& p) {
  PostSnippet s;
  s.hashtags = p.hashtags;
  if (!p.comments.empty()) s.first_comment = p.comments.front();
  s.media_kind = std::string(jsonl::media_kind_name(p.media.kind));
  if (p.media.kind == MediaKind::Image && p.media.image_path) s.image_ref = *p.media.image_path;
  for (const auto& tok : tokenize(comment_text(p)).tokens) {
    const bool known = std::find(std::begin(kContactWords), std::end(kContactWords), tok) != std::end(kContactWords);
    if (known && std::find(s.contact_mentions.begin(), s.contact_mentions.end(), tok) == s.contact_mentions.end()) {
      s.contact_mentions.push_back(tok);
    }
  }
  return s;
}

// Scores every post with the model and returns the ranked queue.
inline std::vector<QueueEntry> build_queue(const FusionModel& model, const Featurizer& f,
                                           const std::vector<PostRecord>& posts) {
  std::vector<QueueEntry> q;
  q.reserve(posts.size());
  for (const auto& p : posts) {
    const auto pred = model.predict_full(f.joint(p));
    QueueEntry e;
    e.post_id = p.post_id;
    e.score = pred.score;
    e.flag = pred.flag;
    e.snippet = snippet_of(p);
    q.push_back(std::move(e));
  }
  sort_queue(q);
  return q;
}

inline nlohmann::ordered_json to_json(const QueueEntry& e) {
  nlohmann::ordered_json j;
  j["post_id"] = e.post_id;
  j["score"] = e.score;
  j["flag"] = e.flag;
  j["status"] = status_name(e.status);
  j["reviewer"] = e.reviewer;
  j["reviewed_at"] = e.reviewed_at ? nlohmann::ordered_json(*e.reviewed_at) : nlohmann::ordered_json(nullptr);
  j["hashtags"] = e.snippet.hashtags;
  j["first_comment"] = e.snippet.first_comment;
  j["media_kind"] = e.snippet.media_kind;
  j["image_ref"] = e.snippet.image_ref;
  j["contact_mentions"] = e.snippet.contact_mentions;
  return j;
}

inline QueueEntry queue_entry_from_json(const nlohmann::json& j) {
  QueueEntry e;
  try {
    e.post_id = j.at("post_id").get<std::string>();
    e.score = j.at("score").get<double>();
    e.flag = j.value("flag", e.score >= 0.5);
    const auto status = j.value("status", std::string("Pending"));
    const auto parsed = parse_status(status);
    if (!parsed) throw ValidationError("unknown status '" + status + "'");
    e.status = *parsed;
    e.reviewer = j.value("reviewer", std::string());
    if (auto it = j.find("reviewed_at"); it != j.end() && !it->is_null()) e.reviewed_at = it->get<std::int64_t>();
    e.snippet.hashtags = j.value("hashtags", std::vector<std::string>{});
    e.snippet.first_comment = j.value("first_comment", std::string());
    e.snippet.media_kind = j.value("media_kind", std::string());
    e.snippet.image_ref = j.value("image_ref", std::string());
    e.snippet.contact_mentions = j.value("contact_mentions", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("bad queue entry: ") + ex.what());
  }
  return e;
}

inline void write_queue(const std::filesystem::path& path, const std::vector<QueueEntry>& q) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& e : q) out << to_json(e).dump() << '\n';
}

// Entries come back in queue order whatever order the file holds.
inline std::vector<QueueEntry> read_queue(const std::filesystem::path& path) {
  std::vector<QueueEntry> q;
  jsonl::for_each_line(path, [&](std::size_t line_no, const nlohmann::json& j) {
    try {
      q.push_back(queue_entry_from_json(j));
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  });
  sort_queue(q);
  return q;
}

struct EfficiencyReport {
  double expected_random = 0.0;
  double expected_ranked = 0.0;
  double gain = 0.0;
};

// Expected confirmed cases when a reviewer works through `budget` posts in
// random order versus in ranked order. Assumes the ranked head keeps the
// model's overall precision, which precision@k need not do.
inline EfficiencyReport efficiency_report(double precision, double base_rate, std::size_t budget) {
  if (!(base_rate > 0.0 && base_rate <= 1.0)) throw ValidationError("base_rate must be in (0,1]");
  if (!(precision >= 0.0 && precision <= 1.0)) throw ValidationError("precision must be in [0,1]");
  const auto n = static_cast<double>(budget);
  return {base_rate * n, precision * n, precision / base_rate};
}

inline nlohmann::ordered_json to_json(const EfficiencyReport& r) {
  return {{"expected_random", r.expected_random}, {"expected_ranked", r.expected_ranked}, {"gain", r.gain}};
}

}  // namespace ledger
