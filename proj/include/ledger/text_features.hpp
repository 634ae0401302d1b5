#pragma once

// Text branch: multilingual tokenization and a signed feature-hashing
// embedder that stands in for a pretrained transformer while keeping its
// 768-wide output.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ledger/domain.hpp"
#include "ledger/rng.hpp"
#include "ledger/sidecar.hpp"
#include "ledger/unicode.hpp"

namespace ledger {

inline constexpr std::size_t kMaxSeqLen = 64;

struct TokenSequence {
  std::vector<std::string> tokens;

  bool operator==(const TokenSequence&) const = default;
};

enum class TextSource { HashedBaseline, Precomputed };

struct TextVector {
  std::vector<double> values = std::vector<double>(kTextDim, 0.0);
  TextSource source = TextSource::HashedBaseline;
};

// Splits on whitespace and punctuation; Han/kana characters become
// single-character tokens. Tokens are lowercased and NFC-normalized, and the
// sequence is cut at kMaxSeqLen.
inline TokenSequence tokenize(std::string_view text) {
  TokenSequence seq;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      seq.tokens.push_back(unicode::nfc(current));
      current.clear();
    }
  };
  for (char32_t cp : unicode::decode(unicode::nfc(text))) {
    if (seq.tokens.size() >= kMaxSeqLen) break;
    if (unicode::is_cjk(cp)) {
      flush();
      if (seq.tokens.size() >= kMaxSeqLen) break;
      std::string single;
      unicode::append(single, unicode::to_lower(cp));
      seq.tokens.push_back(std::move(single));
    } else if (unicode::is_word_char(cp)) {
      unicode::append(current, unicode::to_lower(cp));
    } else {
      flush();
    }
  }
  if (seq.tokens.size() < kMaxSeqLen) flush();
  return seq;
}

namespace hashing {

// FNV-1a, 64-bit.
inline constexpr std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t ngram_hash(std::string_view a) { return fnv1a(a); }

inline std::uint64_t ngram_hash(std::string_view a, std::string_view b) {
  std::string key;
  key.reserve(a.size() + b.size() + 1);
  key.append(a).push_back('\x1f');
  key.append(b);
  return fnv1a(key);
}

inline std::size_t bucket(std::uint64_t h) noexcept { return static_cast<std::size_t>(h % kTextDim); }

// Sign comes from the top bit of a second, independent mix of the hash.
inline double sign(std::uint64_t h) noexcept { return (mix64(h) >> 63) ? -1.0 : 1.0; }

}  // namespace hashing

inline TextVector embed_hashed(const TokenSequence& seq) {
  TextVector v;
  v.source = TextSource::HashedBaseline;
  auto add = [&](std::uint64_t h) { v.values[hashing::bucket(h)] += hashing::sign(h); };
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    add(hashing::ngram_hash(seq.tokens[i]));
    if (i + 1 < seq.tokens.size()) add(hashing::ngram_hash(seq.tokens[i], seq.tokens[i + 1]));
  }
  double norm2 = 0.0;
  for (double x : v.values) norm2 += x * x;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v.values) x *= inv;
  }
  return v;
}

inline std::string hashtag_text(const PostRecord& p) {
  std::string text;
  for (const auto& tag : p.hashtags) {
    if (!text.empty()) text += ' ';
    text += tag;
  }
  return text;
}

inline std::string comment_text(const PostRecord& p) {
  std::string text;
  for (const auto& c : p.comments) {
    if (!text.empty()) text += '\n';
    text += c;
  }
  return text;
}

inline TextVector embed_hashtags(const PostRecord& p) { return embed_hashed(tokenize(hashtag_text(p))); }
inline TextVector embed_comments(const PostRecord& p) { return embed_hashed(tokenize(comment_text(p))); }

inline TextVector text_vector_from(const EmbeddingTable& table, const std::string& post_id) {
  TextVector v;
  v.values = table.lookup(post_id, kTextDim);
  v.source = TextSource::Precomputed;
  return v;
}

inline TextVector load_text_embedding(const std::filesystem::path& path, const std::string& post_id) {
  return text_vector_from(EmbeddingTable::read(path), post_id);
}

}  // namespace ledger
