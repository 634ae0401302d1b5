#pragma once

// Threshold metrics, ROC curves and AUC.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledger/errors.hpp"

namespace ledger {

struct ScoredLabel {
  double score = 0.0;
  int truth = 0;  // 1 = positive
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const Confusion&) const = default;
};

// A score at or above the threshold is a positive prediction.
inline Confusion confusion(std::span<const ScoredLabel> scores, double threshold) {
  Confusion c;
  for (const auto& s : scores) {
    const bool flag = s.score >= threshold;
    if (flag) {
      s.truth ? ++c.tp : ++c.fp;
    } else {
      s.truth ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the corresponding ratio was 0/0 and reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline PrecisionRecall prf1(const Confusion& c) {
  PrecisionRecall r;
  if (c.tp + c.fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    r.recall_undefined = true;
  } else {
    r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Sweeps thresholds over the distinct scores from the top down, starting at
// +inf (nothing flagged). Equal scores enter the curve together, so a tie
// between classes contributes a diagonal segment, i.e. half credit.
inline RocCurve roc_auc(std::span<const ScoredLabel> scores) {
  std::size_t pos = 0;
  for (const auto& s : scores) pos += s.truth ? 1 : 0;
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateLabels("ROC needs at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });

  RocCurve roc;
  roc.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]].score;
    for (; i < order.size() && scores[order[i]].score == threshold; ++i) {
      scores[order[i]].truth ? ++tp : ++fp;
    }
    roc.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
  }
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    const auto& a = roc.points[i - 1];
    const auto& b = roc.points[i];
    roc.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return roc;
}

struct EvalReport {
  Confusion counts;
  PrecisionRecall pr;
  double threshold = 0.5;
  std::vector<RocPoint> roc_points;
  double auc = std::numeric_limits<double>::quiet_NaN();  // NaN when one class is absent
};

inline EvalReport evaluate(std::span<const ScoredLabel> scores, double threshold) {
  EvalReport r;
  r.threshold = threshold;
  r.counts = confusion(scores, threshold);
  r.pr = prf1(r.counts);
  if (r.counts.tp + r.counts.fn > 0 && r.counts.fp + r.counts.tn > 0) {
    auto roc = roc_auc(scores);
    r.roc_points = std::move(roc.points);
    r.auc = roc.auc;
  }
  return r;
}

inline nlohmann::ordered_json to_json(const EvalReport& r, bool with_roc = false) {
  nlohmann::ordered_json j;
  j["n"] = r.counts.total();
  j["threshold"] = r.threshold;
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["tn"] = r.counts.tn;
  j["fn"] = r.counts.fn;
  j["precision"] = r.pr.precision;
  j["recall"] = r.pr.recall;
  j["f1"] = r.pr.f1;
  j["auc"] = std::isnan(r.auc) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.auc);
  if (r.pr.precision_undefined || r.pr.recall_undefined) {
    auto& flags = j["undefined"] = nlohmann::ordered_json::array();
    if (r.pr.precision_undefined) flags.push_back("precision");
    if (r.pr.recall_undefined) flags.push_back("recall");
  }
  if (with_roc) {
    auto& pts = j["roc"] = nlohmann::ordered_json::array();
    for (const auto& p : r.roc_points) {
      pts.push_back({std::isinf(p.threshold) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(p.threshold),
                     p.fpr, p.tpr});
    }
  }
  return j;
}

inline void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& points) {
  out << "threshold,fpr,tpr\n";
  out.precision(17);
  for (const auto& p : points) {
    if (std::isinf(p.threshold)) {
      out << "inf";
    } else {
      out << p.threshold;
    }
    out << ',' << p.fpr << ',' << p.tpr << '\n';
  }
}

}  // namespace ledger
