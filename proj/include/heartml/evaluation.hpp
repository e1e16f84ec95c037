#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heartml/dataset.hpp"
#include "heartml/error.hpp"
#include "heartml/metrics.hpp"
#include "heartml/model.hpp"

namespace heartml {

template <typename M>
concept ProbabilisticClassifier = requires(const M& m, std::span<const double> x) {
  { predict_proba(m, x) } -> std::convertible_to<double>;
};

/// Label 1 iff probability >= threshold.
template <ProbabilisticClassifier M>
std::vector<int> predict_labels(const M& model, const FeatureMatrix& m, double threshold) {
  std::vector<int> out;
  out.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out.push_back(predict_proba(model, m.row(i)) >= threshold ? 1 : 0);
  return out;
}

template <ProbabilisticClassifier M>
EvalReport evaluate_model(const M& model, const FeatureMatrix& m, double threshold = kDefaultThreshold,
                          std::string model_id = {}) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorKind::BadArgument, "threshold must lie in (0, 1)");
  const auto predicted = predict_labels(model, m, threshold);
  return metrics(confusion(predicted, m.labels), threshold, std::move(model_id));
}

struct MetricSummary {
  std::optional<double> mean;
  std::optional<double> std;  // population
  friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

/// Mean and population std; undefined if any input is undefined.
inline MetricSummary summarize_metric(std::span<const std::optional<double>> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) return {};
    sum += *v;
  }
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& v : values) ss += (*v - mean) * (*v - mean);
  return {mean, std::sqrt(ss / n)};
}

struct CVSummary {
  MetricSummary accuracy;
  MetricSummary precision;
  MetricSummary recall;
  MetricSummary f1;
  friend bool operator==(const CVSummary&, const CVSummary&) = default;
};

struct CVResult {
  std::vector<EvalReport> folds;
  CVSummary summary;
  friend bool operator==(const CVResult&, const CVResult&) = default;
};

inline CVSummary summarize_folds(std::span<const EvalReport> folds) {
  auto collect = [&](auto member) {
    std::vector<std::optional<double>> v;
    for (const auto& f : folds) v.push_back(f.*member);
    return summarize_metric(v);
  };
  return {collect(&EvalReport::accuracy), collect(&EvalReport::precision), collect(&EvalReport::recall),
          collect(&EvalReport::f1)};
}

/// Stratified k-fold evaluation. Preprocessing and the model are re-fit on
/// each fold's training rows; the fold's validation rows are only transformed.
inline CVResult cross_validate(const ModelSpec& spec, const Dataset& data, std::size_t k, std::uint64_t seed,
                               const PipelineHooks& hooks = {}) {
  validate(spec);
  const auto folds = kfold(data, k, seed);
  CVResult out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const Dataset train = data.subset(folds[f].train);
    const Dataset val = data.subset(folds[f].validation);
    const auto pipe = train_pipeline(spec, train, seed, hooks);
    const auto val_matrix = transform(pipe.preprocessor, val);
    out.folds.push_back(evaluate_model(pipe.model, val_matrix, spec.threshold,
                                       std::string(display_name(spec.algorithm)) + "/fold" + std::to_string(f)));
  }
  out.summary = summarize_folds(out.folds);
  return out;
}

enum class SelectionMetric { Accuracy, F1 };

struct GridSpec {
  std::map<std::string, std::vector<double>> params;  // iterated in name order
  SelectionMetric selection_metric = SelectionMetric::Accuracy;
  std::size_t k = 5;
  std::uint64_t seed = 42;
};

using ParamAssignment = std::vector<std::pair<std::string, double>>;

struct GridCandidate {
  ParamAssignment params;
  CVResult cv;
};

struct GridResult {
  std::size_t best = 0;
  std::vector<GridCandidate> candidates;

  const GridCandidate& best_candidate() const { return candidates.at(best); }
};

/// Cartesian product in canonical order: parameter names sorted, candidate
/// index tuples in lexicographic order (the last name varies fastest).
inline std::vector<ParamAssignment> expand_grid(const GridSpec& spec) {
  if (spec.params.empty()) throw Error(ErrorKind::EmptyGrid, "grid has no parameters");
  for (const auto& [name, values] : spec.params) {
    if (values.empty()) throw Error(ErrorKind::EmptyGrid, "parameter \"" + name + "\" has no candidates");
  }
  std::vector<std::pair<std::string, const std::vector<double>*>> axes;
  for (const auto& [name, values] : spec.params) axes.emplace_back(name, &values);

  std::vector<ParamAssignment> out;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    ParamAssignment a;
    for (std::size_t i = 0; i < axes.size(); ++i) a.emplace_back(axes[i].first, (*axes[i].second)[idx[i]]);
    out.push_back(std::move(a));
    std::size_t pos = axes.size();
    while (pos > 0) {
      --pos;
      if (++idx[pos] < axes[pos].second->size()) break;
      idx[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

inline ModelSpec apply(ModelSpec spec, const ParamAssignment& params) {
  for (const auto& [name, value] : params) set_param(spec, name, value);
  return spec;
}

inline std::optional<double> selection_score(const CVSummary& s, SelectionMetric metric) {
  return metric == SelectionMetric::Accuracy ? s.accuracy.mean : s.f1.mean;
}

/// Exhaustive grid search by cross-validation. The best candidate has the
/// highest mean selection metric; ties keep the earliest canonical candidate.
inline GridResult grid_search(const GridSpec& grid, const ModelSpec& base, const Dataset& data,
                              const PipelineHooks& hooks = {}) {
  const auto assignments = expand_grid(grid);
  // Fail on bad names or values before any fitting.
  for (const auto& a : assignments) validate(apply(base, a));

  GridResult out;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    auto cv = cross_validate(apply(base, assignments[i]), data, grid.k, grid.seed, hooks);
    const auto score = selection_score(cv.summary, grid.selection_metric);
    if (score && *score > best_score) {
      best_score = *score;
      out.best = i;
    }
    out.candidates.push_back({assignments[i], std::move(cv)});
  }
  return out;
}

}  // namespace heartml
