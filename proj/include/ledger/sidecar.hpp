#pragma once

// Embedding sidecar files: a "dim=N" header line, then one
// "post_id<TAB>f1,f2,...,fN" line per post.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ledger/errors.hpp"

namespace ledger {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  // Rows are validated lazily by lookup() so one malformed row does not
  // prevent reading the others; the header must still be well formed.
  static EmbeddingTable read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open embedding file " + path.string());
    EmbeddingTable table;
    std::string line;
    if (!std::getline(in, line) || line.rfind("dim=", 0) != 0) {
      throw Error(path.string() + ": expected 'dim=N' header");
    }
    table.dim_ = std::stoul(line.substr(4));
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw Error(path.string() + ": row without a tab separator");
      table.rows_[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return table;
  }

  std::size_t declared_dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool contains(const std::string& post_id) const { return rows_.count(post_id) != 0; }

  // Returns exactly `expected_dim` values or throws MissingEmbedding /
  // DimensionError (carrying the number of values actually found).
  std::vector<double> lookup(const std::string& post_id, std::size_t expected_dim) const {
    auto it = rows_.find(post_id);
    if (it == rows_.end()) throw MissingEmbedding(post_id);
    std::vector<double> values = parse_row(it->second);
    if (values.size() != expected_dim) throw DimensionError(values.size(), expected_dim);
    return values;
  }

 private:
  static std::vector<double> parse_row(std::string_view row) {
    std::vector<double> values;
    const char* p = row.data();
    const char* end = row.data() + row.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw Error("malformed float in embedding row");
      values.push_back(v);
      p = next;
      while (p < end && *p == ' ') ++p;
      if (p < end) {
        if (*p != ',') throw Error("malformed embedding row");
        ++p;
      }
    }
    return values;
  }

  std::size_t dim_ = 0;
  std::map<std::string, std::string, std::less<>> rows_;
};

class EmbeddingWriter {
 public:
  EmbeddingWriter(const std::filesystem::path& path, std::size_t dim)
      : out_(path, std::ios::binary | std::ios::trunc), dim_(dim) {
    if (!out_) throw Error("cannot write embedding file " + path.string());
    out_ << "dim=" << dim << '\n';
  }

  void add(const std::string& post_id, const std::vector<double>& values) {
    if (values.size() != dim_) throw DimensionError(values.size(), dim_);
    out_ << post_id << '\t';
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      // Shortest representation that round-trips exactly.
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, values[i]);
      out_.write(buf, ptr - buf);
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t dim_;
};

}  // namespace ledger
