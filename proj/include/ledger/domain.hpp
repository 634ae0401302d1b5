#pragma once

// Post records, the nine-field annotation schema and the predicates every
// other module shares.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ledger/errors.hpp"
#include "ledger/unicode.hpp"

namespace ledger {

inline constexpr std::size_t kTextDim = 768;
inline constexpr std::size_t kImageDim = 2560;
inline constexpr std::size_t kJointDim = 2 * kTextDim + kImageDim;

struct PosterProfile {
  std::uint64_t follower_count = 0;
  std::uint64_t following_count = 0;
  std::uint64_t post_count = 0;
  std::string bio;

  bool operator==(const PosterProfile&) const = default;
};

enum class MediaKind { Image, VideoPlaceholder, PrecomputedEmbedding };

// Image payloads are either a path to an image file or the encoded bytes
// themselves (in-memory corpora); at least one is set for kind == Image.
struct MediaContent {
  MediaKind kind = MediaKind::Image;
  std::optional<std::string> image_path;
  std::optional<std::vector<std::uint8_t>> image_bytes;
  std::optional<std::vector<double>> embedding;
  std::optional<std::uint64_t> seed;

  static MediaContent image_file(std::string path) {
    MediaContent m;
    m.kind = MediaKind::Image;
    m.image_path = std::move(path);
    return m;
  }
  static MediaContent image_data(std::vector<std::uint8_t> bytes) {
    MediaContent m;
    m.kind = MediaKind::Image;
    m.image_bytes = std::move(bytes);
    return m;
  }
  static MediaContent video(std::uint64_t seed) {
    MediaContent m;
    m.kind = MediaKind::VideoPlaceholder;
    m.seed = seed;
    return m;
  }
  static MediaContent precomputed(std::vector<double> values) {
    if (values.size() != kImageDim) throw DimensionError(values.size(), kImageDim);
    MediaContent m;
    m.kind = MediaKind::PrecomputedEmbedding;
    m.embedding = std::move(values);
    return m;
  }

  bool operator==(const MediaContent&) const = default;
};

struct PostRecord {
  std::string post_id;
  std::string username;
  std::int64_t timestamp = 0;
  std::uint64_t like_count = 0;
  std::vector<std::string> comments;  // comments[0] is the post text, if any
  std::vector<std::string> hashtags;  // lowercase, no '#'
  MediaContent media;
  std::optional<PosterProfile> poster;

  bool operator==(const PostRecord&) const = default;
};

enum class Source { Individual, Shop, Brand, MakeupArtist, Daigou, UnregisteredProducer };
enum class ImageType { BodyPart, Product, ProductAndBody, Advertisement, Screenshot };

struct LabelSet {
  bool available = true;
  bool relevant = false;
  bool selling_intention = false;
  Source source = Source::Individual;
  bool hidden_economy = false;
  ImageType image_type = ImageType::Product;
  std::string language;
  bool has_other_contact = false;
  std::vector<std::string> contact_channels;

  bool operator==(const LabelSet&) const = default;
};

struct AnnotatedPost {
  PostRecord post;
  LabelSet labels;

  bool operator==(const AnnotatedPost&) const = default;
};

namespace labels {

// Field names of the label schema, in table order.
inline constexpr std::string_view kAvailability = "availability";
inline constexpr std::string_view kRelevance = "relevance";
inline constexpr std::string_view kSellingIntention = "selling_intention";
inline constexpr std::string_view kSource = "source";
inline constexpr std::string_view kHiddenEconomy = "hidden_economy";
inline constexpr std::string_view kImageType = "image_type";
inline constexpr std::string_view kLanguage = "language";
inline constexpr std::string_view kHasOtherContact = "has_other_contact";
inline constexpr std::string_view kContactChannels = "contact_channels";

inline constexpr std::string_view kFields[] = {
    kAvailability, kRelevance,  kSellingIntention, kSource,         kHiddenEconomy,
    kImageType,    kLanguage,   kHasOtherContact,  kContactChannels};

inline std::string_view source_code(Source s) {
  switch (s) {
    case Source::Individual: return "I";
    case Source::Shop: return "S";
    case Source::Brand: return "B";
    case Source::MakeupArtist: return "M";
    case Source::Daigou: return "D";
    case Source::UnregisteredProducer: return "P";
  }
  return "I";
}

inline std::optional<Source> parse_source(std::string_view code) {
  if (code == "I") return Source::Individual;
  if (code == "S") return Source::Shop;
  if (code == "B") return Source::Brand;
  if (code == "M") return Source::MakeupArtist;
  if (code == "D") return Source::Daigou;
  if (code == "P") return Source::UnregisteredProducer;
  return std::nullopt;
}

inline std::string_view image_type_code(ImageType t) {
  switch (t) {
    case ImageType::BodyPart: return "B";
    case ImageType::Product: return "P";
    case ImageType::ProductAndBody: return "P+B";
    case ImageType::Advertisement: return "A";
    case ImageType::Screenshot: return "S";
  }
  return "P";
}

inline std::optional<ImageType> parse_image_type(std::string_view code) {
  if (code == "B") return ImageType::BodyPart;
  if (code == "P") return ImageType::Product;
  if (code == "P+B") return ImageType::ProductAndBody;
  if (code == "A") return ImageType::Advertisement;
  if (code == "S") return ImageType::Screenshot;
  return std::nullopt;
}

inline std::string_view yes_no(bool v) { return v ? "Y" : "N"; }

inline std::vector<std::string> split_channels(std::string_view raw) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find(',', start);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view item = raw.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

}  // namespace labels

using RawLabels = std::map<std::string, std::string, std::less<>>;

// Parses the wire form of a label set (single-letter codes, comma-separated
// contact channels) and enforces the schema's consistency rule.
inline LabelSet validate_label_set(const RawLabels& raw) {
  auto field = [&](std::string_view name) -> const std::string& {
    auto it = raw.find(name);
    if (it == raw.end()) throw LabelError(LabelError::Kind::MissingField, std::string(name));
    return it->second;
  };
  auto flag = [&](std::string_view name) {
    const std::string& v = field(name);
    if (v == "Y") return true;
    if (v == "N") return false;
    throw LabelError(LabelError::Kind::InvalidOption, std::string(name), v);
  };

  // Presence is checked for every field before any option is judged, so a
  // record missing a field reports that rather than a later bad token.
  for (std::string_view name : labels::kFields) field(name);

  LabelSet ls;
  ls.available = flag(labels::kAvailability);
  ls.relevant = flag(labels::kRelevance);
  ls.selling_intention = flag(labels::kSellingIntention);
  const std::string& source = field(labels::kSource);
  if (auto s = labels::parse_source(source)) {
    ls.source = *s;
  } else {
    throw LabelError(LabelError::Kind::InvalidOption, std::string(labels::kSource), source);
  }
  ls.hidden_economy = flag(labels::kHiddenEconomy);
  const std::string& image = field(labels::kImageType);
  if (auto t = labels::parse_image_type(image)) {
    ls.image_type = *t;
  } else {
    throw LabelError(LabelError::Kind::InvalidOption, std::string(labels::kImageType), image);
  }
  ls.language = field(labels::kLanguage);
  ls.has_other_contact = flag(labels::kHasOtherContact);
  ls.contact_channels = labels::split_channels(field(labels::kContactChannels));
  if (!ls.has_other_contact && !ls.contact_channels.empty()) {
    throw LabelError(LabelError::Kind::ContactInconsistency,
                     std::string(labels::kContactChannels), ls.contact_channels.front());
  }
  return ls;
}

inline RawLabels render_label_set(const LabelSet& ls) {
  std::string channels;
  for (std::size_t i = 0; i < ls.contact_channels.size(); ++i) {
    if (i) channels += ',';
    channels += ls.contact_channels[i];
  }
  RawLabels raw;
  raw.emplace(labels::kAvailability, labels::yes_no(ls.available));
  raw.emplace(labels::kRelevance, labels::yes_no(ls.relevant));
  raw.emplace(labels::kSellingIntention, labels::yes_no(ls.selling_intention));
  raw.emplace(labels::kSource, labels::source_code(ls.source));
  raw.emplace(labels::kHiddenEconomy, labels::yes_no(ls.hidden_economy));
  raw.emplace(labels::kImageType, labels::image_type_code(ls.image_type));
  raw.emplace(labels::kLanguage, ls.language);
  raw.emplace(labels::kHasOtherContact, labels::yes_no(ls.has_other_contact));
  raw.emplace(labels::kContactChannels, channels);
  return raw;
}

// The training and evaluation target. Nothing else in the label set feeds
// the classifier.
inline bool is_tax_evasion_positive(const AnnotatedPost& a) noexcept {
  return a.labels.hidden_economy;
}

// All '#'-prefixed tokens across the comments, lowercased, '#' stripped,
// deduplicated in first-occurrence order. A tag runs until the first
// character that is not a letter, digit or underscore.
inline std::vector<std::string> extract_hashtags(const std::vector<std::string>& comments) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& comment : comments) {
    const auto cps = unicode::decode(unicode::nfc(comment));
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (cps[i] != U'#') continue;
      std::string tag;
      std::size_t j = i + 1;
      for (; j < cps.size() && unicode::is_hashtag_char(cps[j]); ++j) {
        unicode::append(tag, unicode::to_lower(cps[j]));
      }
      if (!tag.empty() && seen.insert(tag).second) out.push_back(tag);
      i = j - 1;
    }
  }
  return out;
}

}  // namespace ledger
