#pragma once

// Seeded synthetic corpora with class-conditional signal planted in chosen
// modalities. Every post draws from a shared background vocabulary; each
// post also has `signal_slots` slots per text modality. For a positive post
// each slot independently carries a seller token with probability equal to
// that modality's signal strength and a benign token otherwise; negatives
// always get benign tokens. Seller and benign vocabularies are disjoint, so
// with strength 0 the classes are identically distributed in that modality.
//
// Images are 64x64 studio shots: a dark product on a light backdrop. Every
// positive image carries a checkerboard patch in the lower-right corner whose
// contrast is proportional to the image strength. A `video_fraction` of posts
// are videos, whose visual signal is lost to the noise placeholder.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/domain.hpp"
#include "ledger/image.hpp"
#include "ledger/ingestion.hpp"
#include "ledger/rng.hpp"

namespace ledger {

struct ModalitySignal {
  double hashtags = 0.0;
  double comments = 0.0;
  double image = 0.0;

  bool operator==(const ModalitySignal&) const = default;
};

struct VocabSizes {
  std::size_t background = 400;
  std::size_t benign = 6;
  std::size_t seller = 6;

  bool operator==(const VocabSizes&) const = default;
};

struct SynthConfig {
  std::size_t n_posts = 2081;
  double positive_rate = 464.0 / 2081.0;
  ModalitySignal modality_signal{0.4, 0.5, 0.5};
  VocabSizes vocab;
  std::size_t signal_slots = 4;
  double video_fraction = 0.10;
  std::size_t image_size = 64;
  std::uint64_t seed = 0;

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
    };
    if (n_posts == 0) throw ConfigError("n_posts must be positive");
    unit(positive_rate, "positive_rate");
    unit(modality_signal.hashtags, "modality_signal.hashtags");
    unit(modality_signal.comments, "modality_signal.comments");
    unit(modality_signal.image, "modality_signal.image");
    unit(video_fraction, "video_fraction");
    if (vocab.background == 0 || vocab.benign == 0 || vocab.seller == 0) {
      throw ConfigError("vocabulary sizes must be positive");
    }
    if (image_size < 16) throw ConfigError("image_size must be at least 16");
  }

  bool operator==(const SynthConfig&) const = default;
};

inline nlohmann::ordered_json to_json(const SynthConfig& c) {
  nlohmann::ordered_json j;
  j["n_posts"] = c.n_posts;
  j["positive_rate"] = c.positive_rate;
  j["modality_signal"] = {{"hashtags", c.modality_signal.hashtags},
                          {"comments", c.modality_signal.comments},
                          {"image", c.modality_signal.image}};
  j["vocab"] = {{"background", c.vocab.background}, {"benign", c.vocab.benign}, {"seller", c.vocab.seller}};
  j["signal_slots"] = c.signal_slots;
  j["video_fraction"] = c.video_fraction;
  j["image_size"] = c.image_size;
  j["seed"] = c.seed;
  return j;
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c = {}) {
  try {
    c.n_posts = j.value("n_posts", c.n_posts);
    c.positive_rate = j.value("positive_rate", c.positive_rate);
    if (j.contains("modality_signal")) {
      const auto& s = j.at("modality_signal");
      c.modality_signal.hashtags = s.value("hashtags", c.modality_signal.hashtags);
      c.modality_signal.comments = s.value("comments", c.modality_signal.comments);
      c.modality_signal.image = s.value("image", c.modality_signal.image);
    }
    if (j.contains("vocab")) {
      const auto& v = j.at("vocab");
      c.vocab.background = v.value("background", c.vocab.background);
      c.vocab.benign = v.value("benign", c.vocab.benign);
      c.vocab.seller = v.value("seller", c.vocab.seller);
    }
    c.signal_slots = j.value("signal_slots", c.signal_slots);
    c.video_fraction = j.value("video_fraction", c.video_fraction);
    c.image_size = j.value("image_size", c.image_size);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid synth config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace synth_detail {

inline constexpr std::array<const char*, 6> kContactChannels = {"whatsapp", "wechat", "line",
                                                                "telegram", "kakaotalk", "phone"};

inline constexpr std::array<const char*, 16> kBackgroundSeed = {
    "lipstick", "matte", "shade", "gloss", "lips", "color", "new", "love",
    "look", "beauty", "makeup", "red", "nude", "pink", "today", "swatch"};
inline constexpr std::array<const char*, 12> kBenignSeed = {
    "tutorial", "review", "favorite", "gift", "selfie", "weekend",
    "friends", "throwback", "inspo", "motd", "happy", "birthday"};
inline constexpr std::array<const char*, 12> kSellerSeed = {
    "dm", "order", "wholesale", "preorder", "restock", "price",
    "cod", "shipping", "daigou", "handmade", "readystock", "sale"};

inline constexpr std::array<const char*, 20> kSyllables = {
    "ka", "lo", "mi", "ra", "su", "ne", "ti", "vo", "pa", "ze",
    "ku", "ba", "do", "fi", "ga", "hu", "je", "ma", "no", "sa"};

// Pseudo-words keyed by (namespace, index); `taken` keeps vocabularies
// disjoint.
inline std::vector<std::string> make_vocab(std::size_t size, std::uint64_t ns,
                                           std::span<const char* const> seeds,
                                           std::set<std::string>& taken) {
  std::vector<std::string> out;
  for (const char* s : seeds) {
    if (out.size() >= size) break;
    if (taken.insert(s).second) out.emplace_back(s);
  }
  for (std::uint64_t i = 0; out.size() < size; ++i) {
    std::uint64_t h = mix64(ns * 0x9e3779b97f4a7c15ULL + i);
    const std::size_t syllables = 2 + h % 3;
    std::string word;
    for (std::size_t k = 0; k < syllables; ++k) {
      h = mix64(h);
      word += kSyllables[h % kSyllables.size()];
    }
    if (taken.insert(word).second) out.push_back(std::move(word));
  }
  return out;
}

struct Vocabularies {
  std::vector<std::string> background;
  std::vector<std::string> benign_words, seller_words;
  std::vector<std::string> benign_tags, seller_tags;
};

inline Vocabularies make_vocabularies(const VocabSizes& sizes) {
  std::set<std::string> taken;
  for (const char* c : kContactChannels) taken.insert(c);
  Vocabularies v;
  v.background = make_vocab(sizes.background, 1, kBackgroundSeed, taken);
  v.benign_words = make_vocab(sizes.benign, 2, kBenignSeed, taken);
  v.benign_tags = make_vocab(sizes.benign, 3, {}, taken);
  v.seller_words = make_vocab(sizes.seller, 4, kSellerSeed, taken);
  v.seller_tags = make_vocab(sizes.seller, 5, {}, taken);
  return v;
}

inline const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

inline std::uint8_t clamp_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Studio-style product shot: vignette-lit backdrop with one soft product
// blob near the frame center. Composition is shared across posts; color,
// lighting and a small placement jitter vary.
inline Image scene(Rng& rng, std::size_t size) {
  Image img(size, size);
  const double s = static_cast<double>(size);
  std::array<double, 3> backdrop{}, product{};
  for (auto& c : backdrop) c = rng.uniform(170.0, 230.0);
  for (auto& c : product) c = rng.uniform(30.0, 110.0);
  const double falloff = rng.uniform(0.2, 0.4);
  const double cx = s * (0.5 + rng.uniform(-0.04, 0.04));
  const double cy = s * (0.5 + rng.uniform(-0.04, 0.04));
  const double r = s * rng.uniform(0.18, 0.24);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / s - 0.5, v = (static_cast<double>(y) + 0.5) / s - 0.5;
      const double light = 1.0 - falloff * (u * u + v * v) * 2.0;
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double t = std::exp(-(dx * dx + dy * dy) / (2.0 * r * r));
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp_byte(light * (backdrop[c] * (1.0 - t) + product[c] * t));
    }
  }
  return img;
}

// Checkerboard banner of 4-pixel squares in the lower-right corner, clear of
// the product.
inline void plant_pattern(Image& img, double contrast) {
  const std::size_t lo = img.width * 21 / 32, hi = lo + img.width / 4;
  const double amp = 40.0 * contrast;
  for (std::size_t y = lo; y < hi; ++y) {
    for (std::size_t x = lo; x < hi; ++x) {
      const double sign = (((y - lo) / 4 + (x - lo) / 4) % 2 == 0) ? 1.0 : -1.0;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp_byte(img.at(y, x, c) + sign * amp);
    }
  }
}

inline std::string channel_label(const std::string& token) {
  if (token == "whatsapp") return "WhatsApp";
  if (token == "wechat") return "WeChat";
  if (token == "line") return "Line";
  if (token == "telegram") return "Telegram";
  if (token == "kakaotalk") return "KakaoTalk";
  return "Phone";
}

}  // namespace synth_detail

inline std::string synth_post_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%06zu", index + 1);
  return buf;
}

// Images come back as in-memory PNG bytes; write_synth_corpus() moves them
// to files.
inline CorpusManifest generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  using namespace synth_detail;
  const Vocabularies vocab = make_vocabularies(cfg.vocab);

  CorpusManifest m;
  m.seed = cfg.seed;
  m.provenance = "synth:seed=" + std::to_string(cfg.seed);
  m.records.reserve(cfg.n_posts);
  constexpr std::int64_t kStart = 1569110400;  // 2019-09-22T00:00:00Z

  for (std::size_t i = 0; i < cfg.n_posts; ++i) {
    Rng rng = Rng::stream(cfg.seed, 1000 + i);
    AnnotatedPost a;
    const bool positive = rng.bernoulli(cfg.positive_rate);
    PostRecord& p = a.post;
    p.post_id = synth_post_id(i);
    p.username = "user_" + std::to_string(rng.below(100000));
    p.timestamp = kStart + static_cast<std::int64_t>(rng.below(5 * 86400));
    p.like_count = rng.below(2000);

    // Comments: background words with signal slots at random positions.
    std::vector<std::string> words;
    const std::size_t n_bg = 3 + rng.below(4);
    for (std::size_t k = 0; k < n_bg; ++k) words.push_back(pick(vocab.background, rng));
    std::vector<std::string> channels;
    for (std::size_t k = 0; k < cfg.signal_slots; ++k) {
      std::string token;
      if (positive && rng.bernoulli(cfg.modality_signal.comments)) {
        // One seller slot in four names a contact channel.
        if (rng.below(4) == 0) {
          token = kContactChannels[rng.below(kContactChannels.size())];
          const auto label = channel_label(token);
          if (std::find(channels.begin(), channels.end(), label) == channels.end()) channels.push_back(label);
        } else {
          token = pick(vocab.seller_words, rng);
        }
      } else {
        token = pick(vocab.benign_words, rng);
      }
      const auto pos = static_cast<std::ptrdiff_t>(rng.below(words.size() + 1));
      words.insert(words.begin() + pos, token);
    }
    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text += ' ';
      text += w;
    }
    p.comments.push_back(text);
    const std::size_t n_replies = rng.below(3);
    for (std::size_t r = 0; r < n_replies; ++r) {
      std::string reply;
      const std::size_t len = 2 + rng.below(4);
      for (std::size_t k = 0; k < len; ++k) {
        if (!reply.empty()) reply += ' ';
        reply += pick(vocab.background, rng);
      }
      p.comments.push_back(reply);
    }

    // Hashtags: background tags plus signal slots.
    std::vector<std::string> tags;
    const std::size_t n_bg_tags = 1 + rng.below(3);
    for (std::size_t k = 0; k < n_bg_tags; ++k) tags.push_back(pick(vocab.background, rng));
    for (std::size_t k = 0; k < cfg.signal_slots; ++k) {
      const bool seller = positive && rng.bernoulli(cfg.modality_signal.hashtags);
      tags.push_back(pick(seller ? vocab.seller_tags : vocab.benign_tags, rng));
    }
    for (auto& t : tags) {
      if (std::find(p.hashtags.begin(), p.hashtags.end(), t) == p.hashtags.end()) p.hashtags.push_back(t);
    }

    // Media.
    if (rng.bernoulli(cfg.video_fraction)) {
      p.media = MediaContent::video(mix64(cfg.seed ^ (0xabcdefULL + i)));
    } else {
      Image img = scene(rng, cfg.image_size);
      if (positive && cfg.modality_signal.image > 0.0) plant_pattern(img, cfg.modality_signal.image);
      p.media = MediaContent::image_data(encode_png(img));
    }

    PosterProfile poster;
    poster.follower_count = rng.below(50000);
    poster.following_count = rng.below(3000);
    poster.post_count = rng.below(1500);
    poster.bio = positive ? "shop online" : "just me";
    p.poster = poster;

    LabelSet& ls = a.labels;
    ls.available = true;
    ls.relevant = true;
    ls.hidden_economy = positive;
    ls.language = "English";
    if (positive) {
      ls.selling_intention = true;
      ls.source = rng.bernoulli(0.5) ? Source::Daigou : Source::UnregisteredProducer;
      ls.image_type = rng.bernoulli(0.5) ? ImageType::Product : ImageType::ProductAndBody;
    } else {
      static constexpr Source kBenignSources[] = {Source::Individual, Source::Shop, Source::Brand,
                                                  Source::MakeupArtist};
      ls.source = kBenignSources[rng.below(4)];
      ls.selling_intention = ls.source != Source::Individual;
      static constexpr ImageType kBenignImages[] = {ImageType::BodyPart, ImageType::Product,
                                                    ImageType::Advertisement};
      ls.image_type = kBenignImages[rng.below(3)];
    }
    ls.has_other_contact = !channels.empty();
    ls.contact_channels = channels;
    m.records.push_back(std::move(a));
  }
  return m;
}

// Writes images under <dir>/images/ and the JSONL corpus referencing them.
inline void write_synth_corpus(const std::filesystem::path& out_path, CorpusManifest m) {
  const auto dir = std::filesystem::absolute(out_path).parent_path();
  const auto image_dir = dir / "images";
  bool made_dir = false;
  for (auto& r : m.records) {
    auto& media = r.post.media;
    if (media.kind != MediaKind::Image || !media.image_bytes) continue;
    if (!made_dir) {
      std::filesystem::create_directories(image_dir);
      made_dir = true;
    }
    const auto path = image_dir / (r.post.post_id + ".png");
    write_file_bytes(path, *media.image_bytes);
    media.image_bytes.reset();
    media.image_path = path.string();
  }
  write_corpus(out_path, m.records);
}

// A manifest of `total` text-only records of which `unavailable` are marked
// deleted and `duplicates` repeat the post_id of an available record, in
// seeded random order. Cleaning it removes exactly those two groups.
inline CorpusManifest make_cleaning_manifest(std::size_t total, std::size_t unavailable,
                                             std::size_t duplicates, std::uint64_t seed) {
  if (unavailable + duplicates >= total) throw ConfigError("cleaning manifest needs at least one unique post");
  const std::size_t unique = total - unavailable - duplicates;
  Rng rng(seed);
  auto record = [&](std::size_t index, bool available) {
    AnnotatedPost a;
    a.post.post_id = synth_post_id(index);
    a.post.username = "user_" + std::to_string(index % 997);
    a.post.timestamp = 1569110400 + static_cast<std::int64_t>(index);
    a.post.comments = {"post " + std::to_string(index)};
    a.post.media = MediaContent::video(index);
    a.labels.available = available;
    a.labels.relevant = true;
    a.labels.language = "English";
    a.labels.hidden_economy = rng.bernoulli(464.0 / 2081.0);
    return a;
  };
  std::vector<AnnotatedPost> records;
  records.reserve(total);
  for (std::size_t i = 0; i < unique; ++i) records.push_back(record(i, true));
  for (std::size_t i = 0; i < unavailable; ++i) records.push_back(record(unique + i, false));
  for (std::size_t i = 0; i < duplicates; ++i) records.push_back(records[rng.below(unique)]);
  rng.shuffle(std::span<AnnotatedPost>(records));

  CorpusManifest m;
  m.records = std::move(records);
  m.seed = seed;
  m.provenance = "cleaning-fixture";
  return m;
}

}  // namespace ledger
