#pragma once

// JSON wire form of posts and annotated posts, one object per JSONL line.
//
//   {"post_id", "username", "timestamp", "like_count", "comments": [...],
//    "hashtags": [...], "media": {"kind", "image_path" | "embedding" | "seed"},
//    "poster": {"followers", "following", "posts", "bio"},
//    "labels": {"availability", "relevance", "selling_intention", "source",
//               "hidden_economy", "image_type", "language",
//               "has_other_contact", "contact_channels"}}
//
// Relative image paths are resolved against the directory of the file they
// were read from, and written relative to the directory of the output file.

#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ledger/domain.hpp"

namespace ledger::jsonl {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Thrown by the converters for structurally invalid records; callers attach
// the line number.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string_view media_kind_name(MediaKind k) {
  switch (k) {
    case MediaKind::Image: return "image";
    case MediaKind::VideoPlaceholder: return "video_placeholder";
    case MediaKind::PrecomputedEmbedding: return "precomputed_embedding";
  }
  return "image";
}

inline fs::path resolve_path(const std::string& stored, const fs::path& base_dir) {
  fs::path p(stored);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal();
}

inline std::string relativize(const std::string& stored, const fs::path& base_dir) {
  if (base_dir.empty()) return stored;
  const fs::path abs = fs::absolute(fs::path(stored)).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(base_dir).lexically_normal());
  return rel.empty() ? abs.generic_string() : rel.generic_string();
}

inline json media_to_json(const MediaContent& m, const fs::path& base_dir) {
  json j;
  j["kind"] = media_kind_name(m.kind);
  switch (m.kind) {
    case MediaKind::Image:
      if (!m.image_path) throw FormatError("image media without a file path cannot be written");
      j["image_path"] = relativize(*m.image_path, base_dir);
      break;
    case MediaKind::VideoPlaceholder:
      j["seed"] = m.seed.value_or(0);
      break;
    case MediaKind::PrecomputedEmbedding:
      j["embedding"] = m.embedding.value_or(std::vector<double>{});
      break;
  }
  return j;
}

inline json post_to_json(const PostRecord& p, const fs::path& base_dir = {}) {
  json j;
  j["post_id"] = p.post_id;
  j["username"] = p.username;
  j["timestamp"] = p.timestamp;
  j["like_count"] = p.like_count;
  j["comments"] = p.comments;
  j["hashtags"] = p.hashtags;
  j["media"] = media_to_json(p.media, base_dir);
  if (p.poster) {
    j["poster"] = json{{"followers", p.poster->follower_count},
                       {"following", p.poster->following_count},
                       {"posts", p.poster->post_count},
                       {"bio", p.poster->bio}};
  }
  return j;
}

inline json labels_to_json(const LabelSet& ls) {
  json j;
  j["availability"] = labels::yes_no(ls.available);
  j["relevance"] = labels::yes_no(ls.relevant);
  j["selling_intention"] = labels::yes_no(ls.selling_intention);
  j["source"] = labels::source_code(ls.source);
  j["hidden_economy"] = labels::yes_no(ls.hidden_economy);
  j["image_type"] = labels::image_type_code(ls.image_type);
  j["language"] = ls.language;
  j["has_other_contact"] = labels::yes_no(ls.has_other_contact);
  j["contact_channels"] = ls.contact_channels;
  return j;
}

inline json annotated_to_json(const AnnotatedPost& a, const fs::path& base_dir = {}) {
  json j = post_to_json(a.post, base_dir);
  j["labels"] = labels_to_json(a.labels);
  return j;
}

namespace detail {

template <typename T>
T required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("field '") + key + "' has the wrong type");
  }
}

inline std::vector<std::string> string_array(const json& j, const char* key) {
  auto v = required<json>(j, key);
  if (!v.is_array()) throw FormatError(std::string("field '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) throw FormatError(std::string("field '") + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline MediaContent media_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw FormatError("field 'media' must be an object");
  const auto kind = detail::required<std::string>(j, "kind");
  if (kind == "image") {
    return MediaContent::image_file(
        resolve_path(detail::required<std::string>(j, "image_path"), base_dir).string());
  }
  if (kind == "video_placeholder") {
    return MediaContent::video(detail::required<std::uint64_t>(j, "seed"));
  }
  if (kind == "precomputed_embedding") {
    auto values = detail::required<std::vector<double>>(j, "embedding");
    if (values.size() != kImageDim) throw DimensionError(values.size(), kImageDim);
    return MediaContent::precomputed(std::move(values));
  }
  throw FormatError("unknown media kind '" + kind + "'");
}

inline PostRecord post_from_json(const json& j, const fs::path& base_dir = {}) {
  if (!j.is_object()) throw FormatError("record must be a JSON object");
  PostRecord p;
  p.post_id = detail::required<std::string>(j, "post_id");
  if (p.post_id.empty()) throw FormatError("post_id must be non-empty");
  p.username = detail::required<std::string>(j, "username");
  p.timestamp = detail::required<std::int64_t>(j, "timestamp");
  p.like_count = detail::required<std::uint64_t>(j, "like_count");
  p.comments = detail::string_array(j, "comments");
  p.hashtags = detail::string_array(j, "hashtags");
  for (const auto& tag : p.hashtags) {
    if (tag.find_first_of("# \t\r\n") != std::string::npos) {
      throw FormatError("hashtag '" + tag + "' contains whitespace or '#'");
    }
  }
  p.media = media_from_json(detail::required<json>(j, "media"), base_dir);
  if (auto it = j.find("poster"); it != j.end() && !it->is_null()) {
    PosterProfile pp;
    pp.follower_count = detail::required<std::uint64_t>(*it, "followers");
    pp.following_count = detail::required<std::uint64_t>(*it, "following");
    pp.post_count = detail::required<std::uint64_t>(*it, "posts");
    pp.bio = detail::required<std::string>(*it, "bio");
    p.poster = std::move(pp);
  }
  return p;
}

// Throws LabelError for schema violations and FormatError for type errors.
inline LabelSet labels_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("field 'labels' must be an object");
  RawLabels raw;
  for (std::string_view name : labels::kFields) {
    auto it = j.find(std::string(name));
    if (it == j.end()) continue;
    if (it->is_string()) {
      raw.emplace(std::string(name), it->get<std::string>());
    } else if (name == labels::kContactChannels && it->is_array()) {
      std::string joined;
      for (const auto& c : *it) {
        if (!c.is_string()) throw FormatError("contact_channels must hold strings");
        if (!joined.empty()) joined += ',';
        joined += c.get<std::string>();
      }
      raw.emplace(std::string(name), joined);
    } else {
      throw FormatError("label field '" + std::string(name) + "' must be a string");
    }
  }
  return validate_label_set(raw);
}

inline AnnotatedPost annotated_from_json(const json& j, const fs::path& base_dir = {}) {
  AnnotatedPost a;
  a.post = post_from_json(j, base_dir);
  a.labels = labels_from_json(detail::required<json>(j, "labels"));
  return a;
}

// Calls fn(line_no, parsed) for each non-blank line; malformed JSON raises
// ParseError with the 1-based line number.
inline void for_each_line(const fs::path& path,
                          const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    fn(line_no, j);
  }
}

}  // namespace ledger::jsonl
