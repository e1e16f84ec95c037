#pragma once

#include <algorithm>
#include <cmath>
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
#include "heartml/rng.hpp"
#include "heartml/schema.hpp"

namespace heartml {

enum class UnseenPolicy { Error, MapToMode };

/// Dense row-major matrix of transformed features plus binary labels.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> column_names;

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  std::array<std::size_t, 2> class_counts() const {
    std::array<std::size_t, 2> c{};
    for (int y : labels) ++c[y == 1 ? 1 : 0];
    return c;
  }

  FeatureMatrix subset(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.rows = indices.size();
    out.cols = cols;
    out.column_names = column_names;
    out.values.reserve(indices.size() * cols);
    out.labels.reserve(indices.size());
    for (auto i : indices) {
      const auto r = row(i);
      out.values.insert(out.values.end(), r.begin(), r.end());
      out.labels.push_back(labels[i]);
    }
    return out;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

struct ScaleStat {
  double mean = 0.0;
  double std = 0.0;
  friend bool operator==(const ScaleStat&, const ScaleStat&) = default;
};

/// Imputation cohort: sex token and age decade (floor(Age / 10) * 10).
struct Cohort {
  std::string sex;
  int decade = 0;
  friend auto operator<=>(const Cohort&, const Cohort&) = default;
};

inline int age_decade(double age) { return static_cast<int>(std::floor(age / 10.0)) * 10; }

/// Per-column state learned from the training partition. Indexed by schema
/// column; entries that do not apply to a column's kind stay empty.
struct FittedPreprocessor {
  std::vector<std::vector<std::string>> vocab;  // sorted, categorical columns only
  std::vector<std::size_t> modes;               // vocab index of the most frequent token
  std::vector<ScaleStat> scale_stats;           // numeric columns only
  std::map<Cohort, std::vector<std::optional<double>>> impute_table;
  std::vector<std::optional<double>> global_medians;
  UnseenPolicy unseen_policy = UnseenPolicy::Error;

  friend bool operator==(const FittedPreprocessor&, const FittedPreprocessor&) = default;
};

namespace detail {

/// Median with the even-count convention (mean of the two central values).
inline std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

inline Cohort cohort_of(const RawRecord& r) { return {r.token(kSexColumn), age_decade(r.numeric(kAgeColumn))}; }

inline double imputed_value(const FittedPreprocessor& fp, const RawRecord& r, std::size_t c) {
  const double v = r.numeric(c);
  if (!is_missing(c, v)) return v;
  if (const auto it = fp.impute_table.find(cohort_of(r)); it != fp.impute_table.end() && it->second[c]) {
    return *it->second[c];
  }
  return *fp.global_medians[c];
}

}  // namespace detail

/// Learn vocabularies, cohort medians and scaling statistics from `train`.
/// Scaling statistics are computed on imputed values.
inline FittedPreprocessor fit(const Dataset& train, UnseenPolicy unseen_policy = UnseenPolicy::Error) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit a preprocessor on zero records");

  FittedPreprocessor fp;
  fp.unseen_policy = unseen_policy;
  fp.vocab.resize(kFeatureCount);
  fp.modes.assign(kFeatureCount, 0);
  fp.scale_stats.resize(kFeatureCount);
  fp.global_medians.resize(kFeatureCount);

  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (is_numeric(c)) continue;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : train.records) ++counts[r.token(c)];
    std::size_t best = 0;
    for (const auto& [token, count] : counts) {
      if (count > best) {
        best = count;
        fp.modes[c] = fp.vocab[c].size();
      }
      fp.vocab[c].push_back(token);
    }
  }

  std::map<Cohort, std::vector<std::vector<double>>> cohort_values;
  std::vector<std::vector<double>> global_values(kFeatureCount);
  for (const auto& r : train.records) {
    auto& slot = cohort_values[detail::cohort_of(r)];
    slot.resize(kFeatureCount);
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (!is_numeric(c)) continue;
      const double v = r.numeric(c);
      if (is_missing(c, v)) continue;
      slot[c].push_back(v);
      global_values[c].push_back(v);
    }
  }
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (!is_numeric(c)) continue;
    fp.global_medians[c] = detail::median(global_values[c]);
    if (!fp.global_medians[c]) {
      throw Error(ErrorKind::AllMissing, std::string(kHeartSchema[c].name) + " has no observed values in training data");
    }
  }
  for (auto& [cohort, per_column] : cohort_values) {
    auto& medians = fp.impute_table[cohort];
    medians.resize(kFeatureCount);
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (is_numeric(c)) medians[c] = detail::median(std::move(per_column[c]));
    }
  }

  const double n = static_cast<double>(train.size());
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (!is_numeric(c)) continue;
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : train.records) {
      const double v = detail::imputed_value(fp, r, c);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : train.records) {
      const double d = detail::imputed_value(fp, r, c) - mean;
      ss += d * d;
    }
    // Exactly zero for constant columns, whatever rounding does to the mean.
    fp.scale_stats[c] = {mean, lo == hi ? 0.0 : std::sqrt(ss / n)};
  }
  return fp;
}

/// Impute, label-encode and standardize. Categorical columns carry their
/// vocabulary index unscaled; constant training columns map to 0.
inline FeatureMatrix transform(const FittedPreprocessor& fp, const Dataset& data) {
  FeatureMatrix m;
  m.rows = data.size();
  m.cols = kFeatureCount;
  m.values.resize(m.rows * m.cols);
  m.labels = data.labels();
  for (const auto& spec : kHeartSchema) m.column_names.emplace_back(spec.name);

  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records[i];
    auto out = m.row(i);
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (is_numeric(c)) {
        const double v = detail::imputed_value(fp, r, c);
        const auto& s = fp.scale_stats[c];
        out[c] = s.std > 0.0 ? (v - s.mean) / s.std : 0.0;
      } else {
        const auto& vocab = fp.vocab[c];
        const auto it = std::lower_bound(vocab.begin(), vocab.end(), r.token(c));
        if (it != vocab.end() && *it == r.token(c)) {
          out[c] = static_cast<double>(it - vocab.begin());
        } else if (fp.unseen_policy == UnseenPolicy::MapToMode) {
          out[c] = static_cast<double>(fp.modes[c]);
        } else {
          throw Error(ErrorKind::UnseenCategory,
                      "feature " + std::string(kHeartSchema[c].name) + ", token \"" + r.token(c) + "\"");
        }
      }
    }
  }
  return m;
}

struct OutlierReport {
  std::vector<bool> flags;  // row-major, same shape as the matrix
  double threshold_z = 3.0;
  std::size_t count = 0;
  std::vector<std::size_t> per_column;
};

inline constexpr double kDefaultOutlierZ = 3.0;

/// Flag standardized numeric cells with |z| > threshold. Nothing is removed.
inline OutlierReport flag_outliers(const FeatureMatrix& m, double threshold_z = kDefaultOutlierZ) {
  if (!(threshold_z > 0.0)) throw Error(ErrorKind::BadArgument, "outlier threshold must be positive");
  OutlierReport rep;
  rep.threshold_z = threshold_z;
  rep.flags.assign(m.rows * m.cols, false);
  rep.per_column.assign(m.cols, 0);
  std::vector<bool> numeric(m.cols, false);
  for (std::size_t c = 0; c < m.cols; ++c) {
    const auto idx = c < m.column_names.size() ? schema_index(m.column_names[c]) : std::nullopt;
    numeric[c] = idx ? is_numeric(*idx) : false;
  }
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (numeric[c] && std::abs(m.at(i, c)) > threshold_z) {
        rep.flags[i * m.cols + c] = true;
        ++rep.count;
        ++rep.per_column[c];
      }
    }
  }
  return rep;
}

/// SMOTE oversampling of the minority class up to the majority count.
///
/// Synthetic rows are appended after the originals. Source rows cycle through
/// the minority class in row order; each draws one of its k nearest minority
/// neighbours (Euclidean over all columns, distance ties to the lower row
/// index) and an interpolation weight u in [0, 1).
inline FeatureMatrix smote(const FeatureMatrix& m, std::size_t k, std::uint64_t seed) {
  const auto counts = m.class_counts();
  const int minority = counts[1] < counts[0] ? 1 : 0;
  const std::size_t n_min = counts[minority];
  const std::size_t needed = counts[1 - minority] - n_min;
  if (n_min < 2) throw Error(ErrorKind::MinorityTooSmall, "minority class has " + std::to_string(n_min) + " rows");
  if (k < 1 || k > n_min - 1) {
    throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " must lie in [1, " + std::to_string(n_min - 1) + "]");
  }

  FeatureMatrix out = m;
  if (needed == 0) return out;

  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (m.labels[i] == minority) members.push_back(i);
  }

  // neighbours[a] = positions (into members) of the k nearest to members[a].
  std::vector<std::vector<std::size_t>> neighbours(n_min);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < n_min; ++a) {
    dist.clear();
    const auto ra = m.row(members[a]);
    for (std::size_t b = 0; b < n_min; ++b) {
      if (a == b) continue;
      const auto rb = m.row(members[b]);
      double d2 = 0.0;
      for (std::size_t c = 0; c < m.cols; ++c) d2 += (ra[c] - rb[c]) * (ra[c] - rb[c]);
      dist.emplace_back(d2, b);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < k; ++j) neighbours[a].push_back(dist[j].second);
  }

  SplitMix64 rng(seed);
  out.values.reserve((m.rows + needed) * m.cols);
  out.labels.reserve(m.rows + needed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t a = s % n_min;
    const std::size_t b = neighbours[a][rng.below(k)];
    const double u = rng.uniform();
    const auto x = m.row(members[a]);
    const auto nn = m.row(members[b]);
    for (std::size_t c = 0; c < m.cols; ++c) {
      // Clamp keeps rounding from leaving the segment.
      const double v = x[c] + u * (nn[c] - x[c]);
      out.values.push_back(std::clamp(v, std::min(x[c], nn[c]), std::max(x[c], nn[c])));
    }
    out.labels.push_back(minority);
  }
  out.rows = m.rows + needed;
  return out;
}

}  // namespace heartml
