#pragma once

// Model checkpoints.
//
// Binary layout (all integers and floats little-endian):
//   "LDGRFUS\0"                         8-byte magic
//   u32 version (= 1)
//   u32 dims[3]
//   f64 dropout_rate, weight_negative, weight_positive, learning_rate,
//       beta1, beta2, epsilon, threshold
//   u64 epochs, batch_size, seed, adam_step, n (= sum of dims)
//   f64 w[n], b, m_w[n], v_w[n], m_b, v_b
//
// save_model() also writes "<path>.json", a readable twin of the same data.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/errors.hpp"
#include "ledger/fusion.hpp"

namespace ledger::checkpoint {

inline constexpr char kMagic[8] = {'L', 'D', 'G', 'R', 'F', 'U', 'S', '\0'};
inline constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::vector<double> f64s(std::size_t n) {
    if ((bytes_.size() - pos_) / 8 < n) throw Error("checkpoint truncated");
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  void expect(const char* p, std::size_t n) {
    need(n);
    if (std::memcmp(bytes_.data() + pos_, p, n) != 0) throw Error("not a model checkpoint (bad magic)");
    pos_ += n;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("checkpoint truncated");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<char> encode(const FusionModel& m) {
  const auto& c = m.config;
  const auto& p = m.params;
  if (p.dim() != c.input_dim()) throw DimensionError(p.dim(), c.input_dim());
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  for (auto d : c.dims) w.u32(static_cast<std::uint32_t>(d));
  w.f64(c.dropout_rate);
  w.f64(c.class_weights.negative);
  w.f64(c.class_weights.positive);
  w.f64(c.adam.learning_rate);
  w.f64(c.adam.beta1);
  w.f64(c.adam.beta2);
  w.f64(c.adam.epsilon);
  w.f64(c.threshold);
  w.u64(c.epochs);
  w.u64(c.batch_size);
  w.u64(c.seed);
  w.u64(p.adam.step);
  w.u64(p.dim());
  w.f64s(p.w);
  w.f64(p.b);
  w.f64s(p.adam.m_w);
  w.f64s(p.adam.v_w);
  w.f64(p.adam.m_b);
  w.f64(p.adam.v_b);
  return w.bytes();
}

inline FusionModel decode(std::vector<char> bytes) {
  Reader r(std::move(bytes));
  r.expect(kMagic, sizeof kMagic);
  const auto version = r.u32();
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  FusionModel m;
  auto& c = m.config;
  for (auto& d : c.dims) d = r.u32();
  c.dropout_rate = r.f64();
  c.class_weights.negative = r.f64();
  c.class_weights.positive = r.f64();
  c.adam.learning_rate = r.f64();
  c.adam.beta1 = r.f64();
  c.adam.beta2 = r.f64();
  c.adam.epsilon = r.f64();
  c.threshold = r.f64();
  c.epochs = r.u64();
  c.batch_size = r.u64();
  c.seed = r.u64();
  m.params.adam.step = r.u64();
  const auto n = r.u64();
  if (n != c.input_dim()) throw DimensionError(n, c.input_dim());
  m.params.w = r.f64s(n);
  m.params.b = r.f64();
  m.params.adam.m_w = r.f64s(n);
  m.params.adam.v_w = r.f64s(n);
  m.params.adam.m_b = r.f64();
  m.params.adam.v_b = r.f64();
  if (!r.done()) throw Error("trailing bytes after checkpoint");
  c.validate();
  return m;
}

inline nlohmann::ordered_json to_json(const FusionModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "ledger-fusion";
  j["version"] = kVersion;
  j["config"] = ledger::to_json(m.config);
  j["params"] = {{"w", m.params.w},
                 {"b", m.params.b},
                 {"adam",
                  {{"step", m.params.adam.step},
                   {"m_w", m.params.adam.m_w},
                   {"v_w", m.params.adam.v_w},
                   {"m_b", m.params.adam.m_b},
                   {"v_b", m.params.adam.v_b}}}};
  return j;
}

inline void save_model(const std::filesystem::path& path, const FusionModel& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode(m);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  std::ofstream twin(path.string() + ".json", std::ios::trunc);
  twin << to_json(m).dump(1) << '\n';
}

inline FusionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model " + path.string());
  return decode(std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()));
}

}  // namespace ledger::checkpoint
