#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "heartml/boosting.hpp"
#include "heartml/dataset.hpp"
#include "heartml/error.hpp"
#include "heartml/metrics.hpp"
#include "heartml/naive_bayes.hpp"
#include "heartml/preprocess.hpp"
#include "heartml/rnn.hpp"

namespace heartml {

enum class Algorithm { RNN, NaiveBayes, GradientBoosting, XGBoost };

/// Table order used by `compare`.
inline constexpr std::array<Algorithm, 4> kAllAlgorithms{Algorithm::RNN, Algorithm::NaiveBayes,
                                                         Algorithm::GradientBoosting, Algorithm::XGBoost};

/// Short CLI name: nb, gb, xgb, rnn.
constexpr std::string_view short_name(Algorithm a) {
  switch (a) {
    case Algorithm::RNN: return "rnn";
    case Algorithm::NaiveBayes: return "nb";
    case Algorithm::GradientBoosting: return "gb";
    case Algorithm::XGBoost: return "xgb";
  }
  return "?";
}

constexpr std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::RNN: return "RNN";
    case Algorithm::NaiveBayes: return "NaiveBayes";
    case Algorithm::GradientBoosting: return "GradientBoosting";
    case Algorithm::XGBoost: return "XGBoost";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  for (auto a : kAllAlgorithms) {
    if (s == short_name(a)) return a;
  }
  throw Error(ErrorKind::BadArgument, "unknown algorithm \"" + std::string(s) + "\" (expected nb, gb, xgb or rnn)");
}

/// Algorithm choice plus every knob of the training pipeline.
struct ModelSpec {
  Algorithm algorithm = Algorithm::XGBoost;
  BoostConfig boost;
  RNNTrainConfig rnn;
  bool smote = true;
  std::size_t smote_k = 5;
  double threshold = kDefaultThreshold;
  // Share of the training partition held out for RNN early stopping.
  double validation_fraction = 0.2;
  UnseenPolicy unseen_policy = UnseenPolicy::Error;

  BoostConfig boost_config() const {
    BoostConfig c = boost;
    c.mode = algorithm == Algorithm::GradientBoosting ? BoostMode::FirstOrder : BoostMode::SecondOrder;
    return c;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

namespace detail {

inline unsigned as_count(std::string_view name, double v, double lo = 1.0) {
  if (!(v >= lo) || v != std::floor(v) || v > 1e9) {
    throw Error(ErrorKind::BadHyperparameter, std::string(name) + " must be an integer >= " + std::to_string(static_cast<int>(lo)));
  }
  return static_cast<unsigned>(v);
}

}  // namespace detail

/// Hyperparameter names accepted by set_param for an algorithm.
inline std::vector<std::string_view> parameter_names(Algorithm a) {
  std::vector<std::string_view> common{"threshold", "smote", "smote_k"};
  std::vector<std::string_view> own;
  switch (a) {
    case Algorithm::NaiveBayes:
      break;
    case Algorithm::GradientBoosting:
      own = {"n_rounds", "learning_rate", "max_depth", "min_child_weight"};
      break;
    case Algorithm::XGBoost:
      own = {"n_rounds", "learning_rate", "max_depth", "lambda", "gamma", "min_child_weight"};
      break;
    case Algorithm::RNN:
      own = {"learning_rate", "rms_decay", "epsilon", "max_epochs", "patience", "batch_size",
             "hidden_size", "init_scale", "validation_fraction"};
      break;
  }
  own.insert(own.end(), common.begin(), common.end());
  return own;
}

/// Set one named hyperparameter; unknown names raise UnknownParameter.
inline void set_param(ModelSpec& spec, std::string_view name, double value) {
  const auto names = parameter_names(spec.algorithm);
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(ErrorKind::UnknownParameter, "\"" + std::string(name) + "\" is not a hyperparameter of " +
                                                 std::string(short_name(spec.algorithm)));
  }
  if (name == "threshold") {
    spec.threshold = value;
  } else if (name == "smote") {
    spec.smote = value != 0.0;
  } else if (name == "smote_k") {
    spec.smote_k = detail::as_count(name, value);
  } else if (spec.algorithm == Algorithm::RNN) {
    auto& r = spec.rnn;
    if (name == "learning_rate") r.learning_rate = value;
    else if (name == "rms_decay") r.rms_decay = value;
    else if (name == "epsilon") r.epsilon = value;
    else if (name == "max_epochs") r.max_epochs = detail::as_count(name, value);
    else if (name == "patience") r.patience = detail::as_count(name, value);
    else if (name == "batch_size") r.batch_size = detail::as_count(name, value);
    else if (name == "hidden_size") r.hidden_size = detail::as_count(name, value);
    else if (name == "init_scale") r.init_scale = value;
    else if (name == "validation_fraction") spec.validation_fraction = value;
  } else {
    auto& b = spec.boost;
    if (name == "n_rounds") b.n_rounds = detail::as_count(name, value);
    else if (name == "learning_rate") b.learning_rate = value;
    else if (name == "max_depth") b.max_depth = detail::as_count(name, value);
    else if (name == "lambda") b.lambda = value;
    else if (name == "gamma") b.gamma = value;
    else if (name == "min_child_weight") b.min_child_weight = value;
  }
}

/// Range checks for everything in a spec, run before any work starts.
inline void validate(const ModelSpec& spec) {
  if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) {
    throw Error(ErrorKind::BadHyperparameter, "threshold must lie in (0, 1)");
  }
  if (spec.smote_k < 1) throw Error(ErrorKind::BadHyperparameter, "smote_k must be at least 1");
  switch (spec.algorithm) {
    case Algorithm::NaiveBayes:
      break;
    case Algorithm::GradientBoosting:
    case Algorithm::XGBoost:
      validate(spec.boost_config());
      break;
    case Algorithm::RNN:
      validate(spec.rnn);
      if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0)) {
        throw Error(ErrorKind::BadHyperparameter, "validation_fraction must lie in (0, 1)");
      }
      break;
  }
}

using FittedModel = std::variant<GaussianNBModel, BoostedEnsemble, RNNParams>;

inline double predict_proba(const GaussianNBModel& m, std::span<const double> x) { return predict_proba_nb(m, x)[1]; }
inline double predict_proba(const BoostedEnsemble& m, std::span<const double> x) { return predict_proba_boosted(m, x); }
inline double predict_proba(const RNNParams& m, std::span<const double> x) { return predict_proba_rnn(m, x); }
inline double predict_proba(const FittedModel& m, std::span<const double> x) {
  return std::visit([&](const auto& model) { return predict_proba(model, x); }, m);
}

/// Observation points for tests: each callback sees exactly the data handed
/// to the corresponding fitting step.
struct PipelineHooks {
  std::function<void(const Dataset&)> on_preprocessor_fit;
  std::function<void(const FeatureMatrix&)> on_model_fit;
  std::function<void(const FeatureMatrix&)> on_validation;
};

struct TrainedModel {
  FittedModel model;
  std::optional<TrainHistory> history;  // RNN only
};

struct TrainedPipeline {
  FittedPreprocessor preprocessor;
  FittedModel model;
  std::optional<TrainHistory> history;
};

/// SMOTE with k capped at minority - 1; a no-op when balancing is impossible
/// or unnecessary.
inline FeatureMatrix balance(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  const auto counts = m.class_counts();
  const std::size_t minority = std::min(counts[0], counts[1]);
  if (minority < 2 || counts[0] == counts[1]) return m;
  return smote(m, std::min(k, minority - 1), seed);
}

/// Fit the model of `spec` on an already transformed training matrix.
/// Order: (RNN) stratified validation carve-out, then SMOTE on the rest,
/// then fitting. `seed` drives every random step.
inline TrainedModel fit_model(const ModelSpec& spec, const FeatureMatrix& train, std::uint64_t seed,
                              const PipelineHooks& hooks = {}) {
  validate(spec);
  if (spec.algorithm == Algorithm::RNN) {
    const auto part = stratified_partition(std::span<const int>(train.labels), spec.validation_fraction, seed);
    FeatureMatrix fit_part = train.subset(part.train);
    const FeatureMatrix val_part = train.subset(part.test);
    if (spec.smote) fit_part = balance(fit_part, spec.smote_k, seed);
    if (hooks.on_model_fit) hooks.on_model_fit(fit_part);
    if (hooks.on_validation) hooks.on_validation(val_part);
    RNNTrainConfig cfg = spec.rnn;
    cfg.seed = seed;
    auto result = train_rnn(fit_part, val_part, cfg);
    return {std::move(result.params), std::move(result.history)};
  }

  const FeatureMatrix fit_part = spec.smote ? balance(train, spec.smote_k, seed) : train;
  if (hooks.on_model_fit) hooks.on_model_fit(fit_part);
  if (spec.algorithm == Algorithm::NaiveBayes) return {fit_nb(fit_part), std::nullopt};
  return {fit_boosted(fit_part, spec.boost_config()), std::nullopt};
}

/// fit preprocessor on train -> transform -> fit_model.
inline TrainedPipeline train_pipeline(const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                                      const PipelineHooks& hooks = {}) {
  validate(spec);
  if (hooks.on_preprocessor_fit) hooks.on_preprocessor_fit(train);
  auto pre = fit(train, spec.unseen_policy);
  const auto matrix = transform(pre, train);
  auto trained = fit_model(spec, matrix, seed, hooks);
  return {std::move(pre), std::move(trained.model), std::move(trained.history)};
}

}  // namespace heartml
