#pragma once

// Corpus loading, cleaning (availability filter + post_id dedup) and seeded
// train/validation/test splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>
#include <vector>

#include "ledger/domain.hpp"
#include "ledger/jsonl.hpp"
#include "ledger/rng.hpp"

namespace ledger {

struct CorpusManifest {
  std::vector<AnnotatedPost> records;
  std::string provenance;
  std::uint64_t seed = 0;
};

struct CleanReport {
  std::size_t removed_unavailable = 0;
  std::size_t removed_duplicates = 0;

  bool operator==(const CleanReport&) const = default;
};

struct CleanResult {
  CorpusManifest manifest;
  CleanReport report;
};

struct DatasetSplit {
  std::vector<AnnotatedPost> train;
  std::vector<AnnotatedPost> validation;
  std::vector<AnnotatedPost> test;
  std::uint64_t seed = 0;
};

inline CorpusManifest load_corpus(const std::filesystem::path& path) {
  CorpusManifest m;
  m.provenance = path.string();
  const auto base = std::filesystem::absolute(path).parent_path();
  jsonl::for_each_line(path, [&](std::size_t line_no, const jsonl::json& j) {
    try {
      m.records.push_back(jsonl::annotated_from_json(j, base));
    } catch (const LabelError& e) {
      throw CorpusLabelError(line_no, e);
    } catch (const jsonl::FormatError& e) {
      throw ParseError(line_no, e.what());
    } catch (const DimensionError& e) {
      throw ParseError(line_no, e.what());
    }
  });
  return m;
}

// Posts without (or ignoring) labels, e.g. an unlabeled scoring batch.
inline std::vector<PostRecord> load_posts(const std::filesystem::path& path) {
  std::vector<PostRecord> out;
  const auto base = std::filesystem::absolute(path).parent_path();
  jsonl::for_each_line(path, [&](std::size_t line_no, const jsonl::json& j) {
    try {
      out.push_back(jsonl::post_from_json(j, base));
    } catch (const jsonl::FormatError& e) {
      throw ParseError(line_no, e.what());
    } catch (const DimensionError& e) {
      throw ParseError(line_no, e.what());
    }
  });
  return out;
}

inline void write_corpus(const std::filesystem::path& path,
                         const std::vector<AnnotatedPost>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path();
  for (const auto& r : records) out << jsonl::annotated_to_json(r, base).dump() << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

// Drops unavailable posts, then repeated post_ids (first occurrence wins).
inline CleanResult clean_corpus(const CorpusManifest& m) {
  CleanResult result;
  result.manifest.provenance = m.provenance;
  result.manifest.seed = m.seed;
  std::unordered_set<std::string> seen;
  for (const auto& r : m.records) {
    if (!r.labels.available) {
      ++result.report.removed_unavailable;
      continue;
    }
    if (!seen.insert(r.post.post_id).second) {
      ++result.report.removed_duplicates;
      continue;
    }
    result.manifest.records.push_back(r);
  }
  return result;
}

// Validation size is taken from what remains after the test draw.
inline std::size_t validation_size(std::size_t corpus_size, std::size_t test_size,
                                   double val_fraction) {
  return static_cast<std::size_t>(
      std::llround(val_fraction * static_cast<double>(corpus_size - test_size)));
}

// Uniform sample without replacement: a seeded Fisher-Yates permutation of
// record indices; the first test_size go to test, the next block to
// validation, the rest to train. Each part keeps corpus order. With
// stratify, positives and negatives are permuted separately and the test
// and validation quotas are apportioned by class.
inline DatasetSplit split_corpus(const CorpusManifest& m, std::size_t test_size,
                                 double val_fraction, std::uint64_t seed,
                                 bool stratify = false) {
  const std::size_t n = m.records.size();
  if (test_size == 0 || test_size >= n) {
    throw SizeError("test size " + std::to_string(test_size) + " must be in (0, " +
                    std::to_string(n) + ")");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw SizeError("validation fraction must be in [0, 1)");
  }
  const std::size_t val_size = validation_size(n, test_size, val_fraction);

  // 0 = train, 1 = validation, 2 = test
  std::vector<int> assignment(n, 0);
  Rng rng(seed);
  auto assign = [&](std::vector<std::size_t>& pool, std::size_t n_test, std::size_t n_val) {
    rng.shuffle(std::span<std::size_t>(pool));
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (i < n_test) {
        assignment[pool[i]] = 2;
      } else if (i < n_test + n_val) {
        assignment[pool[i]] = 1;
      }
    }
  };

  if (!stratify) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    assign(all, test_size, val_size);
  } else {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) {
      (is_tax_evasion_positive(m.records[i]) ? pos : neg).push_back(i);
    }
    const double share = static_cast<double>(pos.size()) / static_cast<double>(n);
    const auto pos_test = std::min<std::size_t>(
        pos.size(), static_cast<std::size_t>(std::llround(share * static_cast<double>(test_size))));
    const auto pos_val = std::min<std::size_t>(
        pos.size() - pos_test,
        static_cast<std::size_t>(std::llround(share * static_cast<double>(val_size))));
    assign(pos, pos_test, pos_val);
    assign(neg, test_size - pos_test, val_size - pos_val);
  }

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    switch (assignment[i]) {
      case 0: split.train.push_back(m.records[i]); break;
      case 1: split.validation.push_back(m.records[i]); break;
      default: split.test.push_back(m.records[i]); break;
    }
  }
  return split;
}

inline void write_split(const std::filesystem::path& dir, const DatasetSplit& s) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "train.jsonl", s.train);
  write_corpus(dir / "validation.jsonl", s.validation);
  write_corpus(dir / "test.jsonl", s.test);
}

// Missing files read as empty parts; the trainer decides whether that is fatal.
inline DatasetSplit read_split(const std::filesystem::path& dir) {
  DatasetSplit s;
  auto part = [&](const char* name) {
    const auto p = dir / name;
    return std::filesystem::exists(p) ? load_corpus(p).records : std::vector<AnnotatedPost>{};
  };
  s.train = part("train.jsonl");
  s.validation = part("validation.jsonl");
  s.test = part("test.jsonl");
  return s;
}

}  // namespace ledger
