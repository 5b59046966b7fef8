#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/io.hpp"
#include "palign/predictor.hpp"

namespace palign {

struct ShareVector {
  std::array<double, 3> p{};  // indexed by Alternative

  void validate() const {
    double sum = 0;
    for (double x : p) {
      if (x < 0) throw DataError("share vector entry negative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("share vector does not sum to 1");
  }

  bool operator==(const ShareVector&) const = default;
};

inline ShareVector shares(const std::vector<Alternative>& labels) {
  if (labels.empty()) throw DataError("shares of empty label sequence");
  ShareVector s;
  for (auto y : labels) s.p[static_cast<std::size_t>(y)] += 1.0;
  for (auto& x : s.p) x /= static_cast<double>(labels.size());
  return s;
}

// The symmetrized divergence as printed in the evaluation formula:
// 1/2 (sum p log(p/q) + sum q log(q/p)), natural log, after epsilon-smoothing
// (add eps, renormalize) of both vectors. Returns exactly 0 for equal inputs.
inline double js_divergence(const ShareVector& p, const ShareVector& q,
                            double epsilon = 1e-6) {
  p.validate();
  q.validate();
  if (p.p == q.p) return 0.0;
  std::array<double, 3> ps{}, qs{};
  double pt = 0, qt = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    ps[i] = p.p[i] + epsilon;
    qs[i] = q.p[i] + epsilon;
    pt += ps[i];
    qt += qs[i];
  }
  double forward = 0, backward = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    ps[i] /= pt;
    qs[i] /= qt;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    forward += ps[i] * std::log(ps[i] / qs[i]);
    backward += qs[i] * std::log(qs[i] / ps[i]);
  }
  return 0.5 * (forward + backward);
}

enum class F1Weighting { Macro, WeightedByPredicted, WeightedByTrue };

using ConfusionMatrix = std::array<std::array<std::size_t, 3>, 3>;  // [truth][pred]

inline ConfusionMatrix confusion_matrix(const std::vector<Alternative>& truths,
                                        const std::vector<Alternative>& predictions) {
  if (truths.size() != predictions.size()) {
    throw DataError("confusion matrix: label sequences differ in length");
  }
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++m[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(predictions[i])];
  }
  return m;
}

// Per-class F1 with 0/0 defined as 0. The weighted default follows the printed
// definition: class weights are predicted counts over N.
inline double f1_scores(const std::vector<Alternative>& truths,
                        const std::vector<Alternative>& predictions,
                        F1Weighting weighting = F1Weighting::Macro) {
  if (truths.size() != predictions.size()) {
    throw DataError("f1_scores: label sequences differ in length");
  }
  if (truths.empty()) throw DataError("f1_scores: empty label sequences");
  const auto cm = confusion_matrix(truths, predictions);
  const auto n = static_cast<double>(truths.size());

  double value = 0;
  for (std::size_t y = 0; y < 3; ++y) {
    double tp = static_cast<double>(cm[y][y]);
    double pred_count = 0, true_count = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      pred_count += static_cast<double>(cm[j][y]);
      true_count += static_cast<double>(cm[y][j]);
    }
    const double precision = pred_count > 0 ? tp / pred_count : 0.0;
    const double recall = true_count > 0 ? tp / true_count : 0.0;
    const double f1 =
        precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    switch (weighting) {
      case F1Weighting::Macro: value += f1 / 3.0; break;
      case F1Weighting::WeightedByPredicted: value += (pred_count / n) * f1; break;
      case F1Weighting::WeightedByTrue: value += (true_count / n) * f1; break;
    }
  }
  return value;
}

// ---------------------------------------------------------------------------
// Per-method evaluation and the comparison report

struct MetricsReport {
  std::string method;
  ShareVector predicted_shares{};
  ShareVector truth_shares{};
  double divergence = 0.0;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  ConfusionMatrix confusion{};
  std::size_t failed_records = 0;
  std::size_t evaluated_records = 0;
};

// Evaluates one prediction set against the truth records (failed predictions
// are excluded from the metrics and reported).
inline MetricsReport evaluate_predictions(const PredictionSet& set,
                                          const std::vector<ChoiceRecord>& truths,
                                          double epsilon = 1e-6) {
  if (set.entries.size() != truths.size()) {
    throw DataError("evaluate: prediction set covers " + std::to_string(set.entries.size()) +
                    " records but the test set has " + std::to_string(truths.size()));
  }
  std::vector<Alternative> t, y;
  MetricsReport report;
  report.method = set.manifest.method;
  for (const auto& e : set.entries) {
    if (e.record_index >= truths.size()) {
      throw DataError("evaluate: prediction record_index out of range");
    }
    if (e.failed) {
      ++report.failed_records;
      continue;
    }
    t.push_back(truths[e.record_index].chosen);
    y.push_back(e.predicted);
  }
  if (t.empty()) throw DataError("evaluate: no successful predictions to score");
  report.evaluated_records = t.size();
  report.truth_shares = shares(t);
  report.predicted_shares = shares(y);
  report.divergence = js_divergence(report.predicted_shares, report.truth_shares, epsilon);
  report.macro_f1 = f1_scores(t, y, F1Weighting::Macro);
  report.weighted_f1 = f1_scores(t, y, F1Weighting::WeightedByPredicted);
  report.confusion = confusion_matrix(t, y);
  return report;
}

struct ComparisonReport {
  ShareVector truth_shares{};
  std::vector<MetricsReport> methods;
};

inline ComparisonReport comparison_report(
    const std::vector<std::pair<std::string, PredictionSet>>& named_sets,
    const std::vector<ChoiceRecord>& truths, double epsilon = 1e-6) {
  if (named_sets.empty()) throw DataError("comparison over zero methods");
  ComparisonReport report;
  std::vector<Alternative> t;
  for (const auto& rec : truths) t.push_back(rec.chosen);
  report.truth_shares = shares(t);
  for (const auto& [name, set] : named_sets) {
    auto m = evaluate_predictions(set, truths, epsilon);
    m.method = name;
    report.methods.push_back(std::move(m));
  }
  return report;
}

inline json to_json(const MetricsReport& r) {
  json cm = json::array();
  for (const auto& row : r.confusion) cm.push_back(row);
  return json{{"method", r.method},
              {"predicted_shares", r.predicted_shares.p},
              {"truth_shares", r.truth_shares.p},
              {"jensen_shannon_divergence", r.divergence},
              {"macro_f1", r.macro_f1},
              {"weighted_f1", r.weighted_f1},
              {"confusion_matrix", cm},
              {"failed_records", r.failed_records},
              {"evaluated_records", r.evaluated_records}};
}

inline json to_json(const ComparisonReport& r) {
  json methods = json::array();
  for (const auto& m : r.methods) methods.push_back(to_json(m));
  return json{{"kind", "comparison_report"},
              {"truth_shares", r.truth_shares.p},
              {"methods", methods}};
}

// Aligned-text rendering of the comparison table, one row per method.
inline std::string render_comparison_table(const ComparisonReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-24s %7s %11s %7s %8s %8s %8s\n", "method", "train",
                "swissmetro", "car", "jsd", "macroF1", "wghtF1");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-24s %6.1f%% %10.1f%% %6.1f%% %8s %8s %8s\n",
                "ground truth", 100 * r.truth_shares.p[0], 100 * r.truth_shares.p[1],
                100 * r.truth_shares.p[2], "0.000", "1.000", "1.000");
  out += buf;
  for (const auto& m : r.methods) {
    std::snprintf(buf, sizeof(buf), "%-24s %6.1f%% %10.1f%% %6.1f%% %8.3f %8.3f %8.3f\n",
                  m.method.c_str(), 100 * m.predicted_shares.p[0],
                  100 * m.predicted_shares.p[1], 100 * m.predicted_shares.p[2],
                  m.divergence, m.macro_f1, m.weighted_f1);
    out += buf;
  }
  return out;
}

}  // namespace palign
