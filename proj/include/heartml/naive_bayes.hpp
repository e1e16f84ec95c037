#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "heartml/error.hpp"
#include "heartml/preprocess.hpp"

namespace heartml {

/// Gaussian Naive Bayes over two classes. means/variances are row-major
/// [class][feature].
struct GaussianNBModel {
  std::array<double, 2> priors{};
  std::size_t features = 0;
  std::vector<double> means;
  std::vector<double> variances;
  double var_floor = 0.0;

  double mean(int cls, std::size_t j) const { return means[static_cast<std::size_t>(cls) * features + j]; }
  double variance(int cls, std::size_t j) const { return variances[static_cast<std::size_t>(cls) * features + j]; }

  friend bool operator==(const GaussianNBModel&, const GaussianNBModel&) = default;
};

inline constexpr double kVarFloorScale = 1e-9;
// Log-domain gap below which the two classes count as tied.
inline constexpr double kNBTieTolerance = 1e-15;

inline GaussianNBModel fit_nb(const FeatureMatrix& m) {
  const auto counts = m.class_counts();
  if (counts[0] == 0 || counts[1] == 0) throw Error(ErrorKind::SingleClassDataset, "Naive Bayes needs both classes");

  const std::size_t d = m.cols;
  GaussianNBModel model;
  model.features = d;
  model.means.assign(2 * d, 0.0);
  model.variances.assign(2 * d, 0.0);
  const double n = static_cast<double>(m.rows);
  for (int c = 0; c < 2; ++c) model.priors[c] = static_cast<double>(counts[c]) / n;

  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto c = static_cast<std::size_t>(m.labels[i] == 1);
    for (std::size_t j = 0; j < d; ++j) model.means[c * d + j] += m.at(i, j);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < d; ++j) model.means[c * d + j] /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    const auto c = static_cast<std::size_t>(m.labels[i] == 1);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = m.at(i, j) - model.means[c * d + j];
      model.variances[c * d + j] += dev * dev;
    }
  }
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t j = 0; j < d; ++j) model.variances[c * d + j] /= static_cast<double>(counts[c]);
  }

  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) sum += m.at(i, j);
    const double mu = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) ss += (m.at(i, j) - mu) * (m.at(i, j) - mu);
    max_var = std::max(max_var, ss / n);
  }
  model.var_floor = kVarFloorScale * (max_var > 0.0 ? max_var : 1.0);
  for (auto& v : model.variances) v = std::max(v, model.var_floor);
  return model;
}

/// log P(c) + sum_j log N(x_j; mu_cj, var_cj) for both classes.
inline std::array<double, 2> log_joint_nb(const GaussianNBModel& model, std::span<const double> x) {
  if (x.size() != model.features) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(model.features) + " features, got " + std::to_string(x.size()));
  }
  std::array<double, 2> out{};
  for (int c = 0; c < 2; ++c) {
    double acc = std::log(model.priors[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = model.variance(c, j);
      const double dev = x[j] - model.mean(c, j);
      acc += -0.5 * std::log(2.0 * std::numbers::pi * var) - dev * dev / (2.0 * var);
    }
    out[c] = acc;
  }
  return out;
}

/// Normalize log weights with log-sum-exp.
inline std::array<double, 2> normalize_log(std::array<double, 2> logw) {
  const double top = std::max(logw[0], logw[1]);
  const double w0 = std::exp(logw[0] - top);
  const double w1 = std::exp(logw[1] - top);
  const double z = w0 + w1;
  return {w0 / z, w1 / z};
}

inline std::array<double, 2> predict_proba_nb(const GaussianNBModel& model, std::span<const double> x) {
  return normalize_log(log_joint_nb(model, x));
}

/// Argmax of the posterior; a tie goes to the positive class.
inline int predict_nb(const GaussianNBModel& model, std::span<const double> x) {
  const auto lj = log_joint_nb(model, x);
  const double gap = lj[1] - lj[0];
  if (std::abs(gap) < kNBTieTolerance) return 1;
  return gap > 0.0 ? 1 : 0;
}

}  // namespace heartml
