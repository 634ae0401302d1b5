#pragma once

// Late-fusion classifier head: concatenated modality features -> inverted
// dropout -> one dense logit -> sigmoid, trained with class-weighted binary
// cross-entropy and Adam.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/errors.hpp"
#include "ledger/features.hpp"
#include "ledger/metrics.hpp"
#include "ledger/rng.hpp"

namespace ledger {

struct ClassWeights {
  double negative = 0.4;
  double positive = 1.6;

  bool operator==(const ClassWeights&) const = default;
};

struct AdamSettings {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamSettings&) const = default;
};

struct FusionConfig {
  BranchDims dims = kFullDims;
  double dropout_rate = 0.5;
  ClassWeights class_weights;
  AdamSettings adam;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double threshold = 0.5;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return joint_dim(dims); }

  void validate() const {
    if (input_dim() == 0) throw ConfigError("at least one feature branch must be active");
    for (std::size_t b = 0; b < 3; ++b) {
      if (dims[b] != 0 && dims[b] != kFullDims[b]) {
        throw ConfigError("branch " + std::to_string(b) + " width must be 0 or " + std::to_string(kFullDims[b]));
      }
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must be in [0, 1)");
    if (!(class_weights.negative > 0.0 && class_weights.positive > 0.0)) {
      throw ConfigError("class weights must be positive");
    }
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0, 1]");
  }

  bool operator==(const FusionConfig&) const = default;
};

struct AdamState {
  std::vector<double> m_w, v_w;
  double m_b = 0.0, v_b = 0.0;
  std::uint64_t step = 0;

  bool operator==(const AdamState&) const = default;
};

struct FusionParams {
  std::vector<double> w;
  double b = 0.0;
  AdamState adam;

  FusionParams() = default;
  explicit FusionParams(std::size_t dim) : w(dim, 0.0) {
    adam.m_w.assign(dim, 0.0);
    adam.v_w.assign(dim, 0.0);
  }

  std::size_t dim() const noexcept { return w.size(); }
  bool operator==(const FusionParams&) const = default;
};

// Glorot-style uniform init, bias zero.
inline FusionParams init_params(std::size_t dim, std::uint64_t seed) {
  FusionParams p(dim);
  Rng rng = Rng::stream(seed, 1);
  const double limit = std::sqrt(6.0 / static_cast<double>(dim + 1));
  for (double& wi : p.w) wi = rng.uniform(-limit, limit);
  return p;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Per-unit multipliers: 0 for dropped units, 1/keep for kept ones.
using DropoutMask = std::vector<double>;

inline void sample_mask(DropoutMask& mask, std::size_t dim, double rate, Rng& rng) {
  mask.resize(dim);
  if (rate <= 0.0) {
    std::fill(mask.begin(), mask.end(), 1.0);
    return;
  }
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  for (double& m : mask) m = rng.uniform() < keep ? scale : 0.0;
}

inline DropoutMask sample_mask(std::size_t dim, double rate, Rng& rng) {
  DropoutMask m;
  sample_mask(m, dim, rate, rng);
  return m;
}

inline double logit(const FusionParams& p, std::span<const double> x) {
  if (x.size() != p.dim()) throw DimensionError(x.size(), p.dim());
  double z = p.b;
  for (std::size_t i = 0; i < x.size(); ++i) z += p.w[i] * x[i];
  return z;
}

inline double logit(const FusionParams& p, std::span<const double> x, std::span<const double> mask) {
  if (x.size() != p.dim()) throw DimensionError(x.size(), p.dim());
  if (mask.empty()) return logit(p, x);
  double z = p.b;
  for (std::size_t i = 0; i < x.size(); ++i) z += p.w[i] * x[i] * mask[i];
  return z;
}

inline double forward_eval(const FusionParams& p, std::span<const double> x) { return sigmoid(logit(p, x)); }

inline double forward_train(const FusionParams& p, std::span<const double> x, std::span<const double> mask) {
  return sigmoid(logit(p, x, mask));
}

inline constexpr double kProbClamp = 1e-7;

inline double weighted_loss(double p, int y, const ClassWeights& w) {
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y ? -w.positive * std::log(p) : -w.negative * std::log1p(-p);
}

// d(loss)/d(logit) for one sample.
inline double loss_slope(double p, int y, const ClassWeights& w) {
  return y ? w.positive * (p - 1.0) : w.negative * p;
}

struct Gradients {
  std::vector<double> w;
  double b = 0.0;
  double loss = 0.0;  // mean weighted loss of the batch
};

// Exact gradient of the mean weighted loss for a batch under fixed dropout
// masks. masks may be empty (no dropout) or hold one mask per sample.
inline Gradients gradients(const FusionParams& p, std::span<const Sample* const> batch,
                           std::span<const DropoutMask> masks, const ClassWeights& weights) {
  if (batch.empty()) throw Error("gradients of an empty batch");
  Gradients g;
  g.w.assign(p.dim(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& x = batch[s]->x;
    const int y = batch[s]->y;
    const std::span<const double> mask = masks.empty() ? std::span<const double>{} : std::span<const double>(masks[s]);
    const double prob = sigmoid(logit(p, x, mask));
    g.loss += weighted_loss(prob, y, weights) * inv_n;
    const double slope = loss_slope(prob, y, weights) * inv_n;
    g.b += slope;
    if (mask.empty()) {
      for (std::size_t i = 0; i < x.size(); ++i) g.w[i] += slope * x[i];
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) g.w[i] += slope * x[i] * mask[i];
    }
  }
  return g;
}

inline Gradients gradients(const FusionParams& p, std::span<const Sample> batch,
                           std::span<const DropoutMask> masks, const ClassWeights& weights) {
  std::vector<const Sample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return gradients(p, std::span<const Sample* const>(ptrs), masks, weights);
}

// Mean weighted loss under fixed masks; the finite-difference reference for
// gradients().
inline double batch_loss(const FusionParams& p, std::span<const Sample> batch,
                         std::span<const DropoutMask> masks, const ClassWeights& weights) {
  double loss = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::span<const double> mask = masks.empty() ? std::span<const double>{} : std::span<const double>(masks[s]);
    loss += weighted_loss(forward_train(p, batch[s].x, mask), batch[s].y, weights);
  }
  return loss / static_cast<double>(batch.size());
}

// Bias-corrected Adam update in place.
inline void adam_step(FusionParams& p, const Gradients& g, const AdamSettings& s) {
  if (g.w.size() != p.dim()) throw DimensionError(g.w.size(), p.dim());
  auto& st = p.adam;
  st.m_w.resize(p.dim(), 0.0);
  st.v_w.resize(p.dim(), 0.0);
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  auto update = [&](double& param, double grad, double& m, double& v) {
    m = s.beta1 * m + (1.0 - s.beta1) * grad;
    v = s.beta2 * v + (1.0 - s.beta2) * grad * grad;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  };
  for (std::size_t i = 0; i < p.dim(); ++i) update(p.w[i], g.w[i], st.m_w[i], st.v_w[i]);
  update(p.b, g.b, st.m_b, st.v_b);
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainReport {
  FusionConfig config;
  std::vector<EpochStats> epochs;

  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  TrainReport report;
  FusionParams params;
};

struct Prediction {
  double score = 0.5;
  bool flag = true;
};

inline Prediction predict(const FusionParams& p, std::span<const double> x, double threshold = 0.5) {
  const double score = forward_eval(p, x);
  return {score, score >= threshold};
}

inline std::vector<ScoredLabel> score_samples(const FusionParams& p, std::span<const Sample> samples) {
  std::vector<ScoredLabel> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({forward_eval(p, s.x), s.y});
  return out;
}

// Minibatch Adam over config.epochs with a fresh shuffle per epoch. Init,
// shuffling and dropout draw from separate streams of config.seed, so a run
// is a pure function of (data, config).
inline TrainResult train(std::span<const Sample> train_set, std::span<const Sample> validation_set,
                         const FusionConfig& config) {
  config.validate();
  if (train_set.empty()) throw EmptySplit("training split is empty");
  if (validation_set.empty()) throw EmptySplit("validation split is empty");
  const std::size_t dim = config.input_dim();
  for (const auto& s : train_set) {
    if (s.x.size() != dim) throw DimensionError(s.x.size(), dim);
  }
  for (const auto& s : validation_set) {
    if (s.x.size() != dim) throw DimensionError(s.x.size(), dim);
  }

  TrainResult result;
  result.report.config = config;
  result.params = init_params(dim, config.seed);
  Rng shuffle_rng = Rng::stream(config.seed, 2);
  Rng dropout_rng = Rng::stream(config.seed, 3);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const Sample*> batch;
  std::vector<DropoutMask> masks(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      ++batch_no;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(&train_set[order[k]]);
      for (std::size_t k = 0; k < batch.size(); ++k) sample_mask(masks[k], dim, config.dropout_rate, dropout_rng);
      const auto g = gradients(result.params, std::span<const Sample* const>(batch),
                               std::span<const DropoutMask>(masks.data(), batch.size()), config.class_weights);
      if (!std::isfinite(g.loss)) throw NonFiniteLoss(epoch, batch_no);
      epoch_loss += g.loss * static_cast<double>(batch.size());
      adam_step(result.params, g, config.adam);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(train_set.size());
    const auto scored = score_samples(result.params, validation_set);
    double val_loss = 0.0;
    for (const auto& s : scored) val_loss += weighted_loss(s.score, s.truth, config.class_weights);
    stats.val_loss = val_loss / static_cast<double>(scored.size());
    if (!std::isfinite(stats.val_loss)) throw NonFiniteLoss(epoch, 0);
    stats.val_f1 = prf1(confusion(scored, config.threshold)).f1;
    result.report.epochs.push_back(stats);
  }
  return result;
}

inline nlohmann::ordered_json to_json(const FusionConfig& c) {
  nlohmann::ordered_json j;
  j["dims"] = {c.dims[0], c.dims[1], c.dims[2]};
  j["dropout_rate"] = c.dropout_rate;
  j["class_weights"] = {{"negative", c.class_weights.negative}, {"positive", c.class_weights.positive}};
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["epsilon"] = c.adam.epsilon;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  return j;
}

// Fields absent from j keep the values already in `base`.
inline FusionConfig fusion_config_from_json(const nlohmann::json& j, FusionConfig base = {}) {
  try {
    if (j.contains("dims")) {
      const auto d = j.at("dims").get<std::vector<std::size_t>>();
      if (d.size() != 3) throw ConfigError("dims must have three entries");
      base.dims = {d[0], d[1], d[2]};
    }
    if (j.contains("dropout_rate")) base.dropout_rate = j.at("dropout_rate").get<double>();
    if (j.contains("class_weights")) {
      const auto& w = j.at("class_weights");
      base.class_weights.negative = w.value("negative", base.class_weights.negative);
      base.class_weights.positive = w.value("positive", base.class_weights.positive);
    }
    if (j.contains("learning_rate")) base.adam.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("beta1")) base.adam.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) base.adam.beta2 = j.at("beta2").get<double>();
    if (j.contains("epsilon")) base.adam.epsilon = j.at("epsilon").get<double>();
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) base.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("threshold")) base.threshold = j.at("threshold").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid fusion config: ") + e.what());
  }
  base.validate();
  return base;
}

inline nlohmann::ordered_json to_json(const TrainReport& r) {
  nlohmann::ordered_json j;
  j["config"] = to_json(r.config);
  auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"val_f1", e.val_f1}});
  }
  return j;
}

// A trained head plus the configuration it was trained under.
struct FusionModel {
  FusionConfig config;
  FusionParams params;

  // Scores a full 4096-d joint vector; inactive branches are dropped first.
  Prediction predict_full(const std::vector<double>& full_joint) const {
    if (config.input_dim() == kJointDim) return predict(params, full_joint, config.threshold);
    return predict(params, project(full_joint, config.dims), config.threshold);
  }

  bool operator==(const FusionModel&) const = default;
};

}  // namespace ledger
