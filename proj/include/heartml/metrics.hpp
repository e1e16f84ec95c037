#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "heartml/error.hpp"

namespace heartml {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Positive class is 1.
inline ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                               std::to_string(actual.size()) + " labels");
  }
  if (predicted.empty()) throw Error(ErrorKind::EmptyDataset, "no predictions to score");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == 1;
    const bool a = actual[i] == 1;
    if (p && a) ++cm.tp;
    else if (p) ++cm.fp;
    else if (a) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

/// Metrics are std::nullopt when their denominator is zero.
struct EvalReport {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  ConfusionMatrix matrix;
  std::string model_id;
  double threshold = 0.5;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline constexpr double kDefaultThreshold = 0.5;

inline EvalReport metrics(const ConfusionMatrix& cm, double threshold = kDefaultThreshold, std::string model_id = {}) {
  EvalReport r;
  r.matrix = cm;
  r.threshold = threshold;
  r.model_id = std::move(model_id);
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.accuracy = ratio(cm.tp + cm.tn, cm.total());
  r.precision = ratio(cm.tp, cm.tp + cm.fp);
  r.recall = ratio(cm.tp, cm.tp + cm.fn);
  // 2tp / (2tp + fp + fn) is the harmonic mean of precision and recall.
  if (r.precision && r.recall) r.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  return r;
}

}  // namespace heartml
