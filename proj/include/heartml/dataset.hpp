#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

#include "heartml/error.hpp"
#include "heartml/rng.hpp"
#include "heartml/schema.hpp"

namespace heartml {

/// A numeric value or a categorical token.
using Cell = std::variant<double, std::string>;

struct RawRecord {
  std::array<Cell, kFeatureCount> values;
  int label = 0;

  double numeric(std::size_t column) const { return std::get<double>(values[column]); }
  const std::string& token(std::size_t column) const { return std::get<std::string>(values[column]); }

  friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct Dataset {
  std::vector<RawRecord> records;
  std::string source;

  static constexpr std::span<const FeatureSpec> schema() { return kHeartSchema; }

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  std::size_t positives() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const RawRecord& r) { return r.label == 1; }));
  }

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.label);
    return out;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.source = source;
    out.records.reserve(indices.size());
    for (auto i : indices) out.records.push_back(records.at(i));
    return out;
  }
};

namespace detail {

inline std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string describe_row(std::size_t row) { return "row " + std::to_string(row); }

}  // namespace detail

enum class LabelColumn { Required, Absent };

/// Parse CSV text. Header names must match the schema exactly (any order);
/// rows keep their file order. Row numbers in errors are 1-based data rows.
inline Dataset parse_csv(std::string_view text, std::string source = {},
                         LabelColumn label_policy = LabelColumn::Required) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto pos = text.find('\n', start);
      if (pos == std::string_view::npos) pos = text.size();
      lines.push_back(detail::trim_cr(text.substr(start, pos - start)));
      start = pos + 1;
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorKind::EmptyFile, source.empty() ? "no header row" : source);

  const auto header = detail::split_commas(lines.front());
  const bool want_label = label_policy == LabelColumn::Required;
  const std::size_t expected = kFeatureCount + (want_label ? 1 : 0);

  // column_of[file column] = schema index, or kFeatureCount for the label.
  std::vector<std::size_t> column_of(header.size());
  std::vector<bool> seen(kFeatureCount + 1, false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view name = header[c];
    std::size_t idx;
    if (const auto s = schema_index(name)) {
      idx = *s;
    } else if (name == kLabelColumn && want_label) {
      idx = kFeatureCount;
    } else {
      throw Error(ErrorKind::UnknownColumn, std::string(name));
    }
    if (seen[idx]) throw Error(ErrorKind::DuplicateHeader, std::string(name));
    seen[idx] = true;
    column_of[c] = idx;
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (!seen[i]) throw Error(ErrorKind::MissingColumn, std::string(kHeartSchema[i].name));
  }
  if (want_label && !seen[kFeatureCount]) throw Error(ErrorKind::MissingColumn, std::string(kLabelColumn));

  Dataset out;
  out.source = std::move(source);
  out.records.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t row = li;
    if (lines[li].empty()) continue;
    const auto cells = detail::split_commas(lines[li]);
    if (cells.size() != expected) {
      throw Error(ErrorKind::RaggedRow, detail::describe_row(row) + " has " + std::to_string(cells.size()) +
                                            " cells, expected " + std::to_string(expected));
    }
    RawRecord rec;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::size_t idx = column_of[c];
      const std::string_view content = cells[c];
      const std::string column_name(idx == kFeatureCount ? kLabelColumn : kHeartSchema[idx].name);
      auto unparsable = [&] {
        return Error(ErrorKind::UnparsableCell,
                     detail::describe_row(row) + ", column " + column_name + ", content \"" + std::string(content) + "\"");
      };
      if (idx == kFeatureCount) {
        if (content == "0") {
          rec.label = 0;
        } else if (content == "1") {
          rec.label = 1;
        } else {
          throw unparsable();
        }
      } else if (is_numeric(idx)) {
        const auto v = detail::parse_double(content);
        if (!v) throw unparsable();
        rec.values[idx] = *v;
      } else {
        if (content.empty()) throw unparsable();
        rec.values[idx] = std::string(content);
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

inline Dataset load_csv(const std::string& path, LabelColumn label_policy = LabelColumn::Required) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path, label_policy);
}

inline std::string to_csv(const Dataset& data, LabelColumn label_policy = LabelColumn::Required) {
  std::string out;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (i) out += ',';
    out += kHeartSchema[i].name;
  }
  if (label_policy == LabelColumn::Required) {
    out += ',';
    out += kLabelColumn;
  }
  out += '\n';
  for (const auto& r : data.records) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (i) out += ',';
      if (is_numeric(i)) {
        out += detail::format_double(r.numeric(i));
      } else {
        out += r.token(i);
      }
    }
    if (label_policy == LabelColumn::Required) {
      out += ',';
      out += r.label ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary

struct NumericSummary {
  std::string name;
  std::size_t count = 0;    // non-missing values
  std::size_t missing = 0;  // cells equal to the sentinel
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
};

struct CategoricalSummary {
  std::string name;
  std::map<std::string, std::size_t> histogram;
};

struct SummaryReport {
  std::size_t rows = 0;
  std::size_t positives = 0;
  double positive_fraction = 0.0;
  std::vector<NumericSummary> numeric;
  std::vector<CategoricalSummary> categorical;
};

inline bool is_missing(std::size_t column, double value) {
  const auto& s = kHeartSchema[column].missing_sentinel;
  return s.has_value() && value == *s;
}

inline SummaryReport summarize(const Dataset& data) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "summarize needs at least one record");
  SummaryReport rep;
  rep.rows = data.size();
  rep.positives = data.positives();
  rep.positive_fraction = static_cast<double>(rep.positives) / static_cast<double>(rep.rows);
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (is_numeric(c)) {
      NumericSummary s{std::string(kHeartSchema[c].name)};
      double sum = 0.0;
      for (const auto& r : data.records) {
        const double v = r.numeric(c);
        if (is_missing(c, v)) {
          ++s.missing;
          continue;
        }
        if (s.count == 0 || v < s.min) s.min = v;
        if (s.count == 0 || v > s.max) s.max = v;
        sum += v;
        ++s.count;
      }
      if (s.count > 0) {
        s.mean = sum / static_cast<double>(s.count);
        double ss = 0.0;
        for (const auto& r : data.records) {
          const double v = r.numeric(c);
          if (!is_missing(c, v)) ss += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(s.count));
      }
      rep.numeric.push_back(std::move(s));
    } else {
      CategoricalSummary s;
      s.name = std::string(kHeartSchema[c].name);
      for (const auto& r : data.records) ++s.histogram[r.token(c)];
      rep.categorical.push_back(std::move(s));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Splitting

struct IndexPartition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

namespace detail {

/// Row indices of each class in input order.
inline std::array<std::vector<std::size_t>, 2> class_indices(std::span<const int> labels) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  return by_class;
}

inline void require_both_classes(std::span<const int> labels) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) {
    throw Error(ErrorKind::SingleClassDataset, "both label classes must be present");
  }
}

}  // namespace detail

/// Per-class test quotas: round(n_c * f) per class, then nudged by one so the
/// total is round(n * f).
inline std::array<std::size_t, 2> stratified_quotas(std::array<std::size_t, 2> class_counts, double fraction) {
  std::array<std::size_t, 2> q{};
  std::array<double, 2> remainder{};
  std::size_t n = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = static_cast<double>(class_counts[c]) * fraction;
    auto r = static_cast<std::size_t>(std::llround(exact));
    r = std::min(r, class_counts[c]);
    q[c] = r;
    remainder[c] = exact - static_cast<double>(r);
    n += class_counts[c];
  }
  const auto target = static_cast<long long>(std::llround(static_cast<double>(n) * fraction));
  long long diff = target - static_cast<long long>(q[0] + q[1]);
  while (diff > 0) {
    int pick = -1;
    for (int c = 0; c < 2; ++c) {
      if (q[c] + 1 > class_counts[c]) continue;
      if (pick < 0 || remainder[c] > remainder[pick]) pick = c;
    }
    if (pick < 0) break;
    ++q[pick];
    remainder[pick] -= 1.0;
    --diff;
  }
  while (diff < 0) {
    int pick = -1;
    for (int c = 0; c < 2; ++c) {
      if (q[c] == 0) continue;
      if (pick < 0 || remainder[c] < remainder[pick]) pick = c;
    }
    if (pick < 0) break;
    --q[pick];
    remainder[pick] += 1.0;
    ++diff;
  }
  return q;
}

/// Stratified train/test partition of row indices. Depends only on the
/// labels and the seed, never on feature values.
inline IndexPartition stratified_partition(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::FractionOutOfRange, "test fraction must lie in (0, 1)");
  }
  detail::require_both_classes(labels);
  auto by_class = detail::class_indices(labels);
  const auto quota = stratified_quotas({by_class[0].size(), by_class[1].size()}, test_fraction);

  SplitMix64 rng(seed);
  IndexPartition out;
  for (int c = 0; c < 2; ++c) {
    shuffle(by_class[c], rng);
    for (std::size_t i = 0; i < by_class[c].size(); ++i) {
      (i < quota[c] ? out.test : out.train).push_back(by_class[c][i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

struct SplitResult {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
  IndexPartition indices;
};

inline SplitResult stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  const auto labels = data.labels();
  SplitResult out;
  out.indices = stratified_partition(std::span<const int>(labels), test_fraction, seed);
  out.train = data.subset(out.indices.train);
  out.test = data.subset(out.indices.test);
  out.seed = seed;
  out.test_fraction = test_fraction;
  return out;
}

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Stratified k-fold assignment: each class is shuffled and dealt round-robin
/// across folds, the deal continuing from where the previous class stopped so
/// fold sizes differ by at most one.
inline std::vector<Fold> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::BadArgument, "k must be at least 2");
  if (k > labels.size()) {
    throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(labels.size()) + " records");
  }
  detail::require_both_classes(labels);
  auto by_class = detail::class_indices(labels);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw Error(ErrorKind::SingleClassDataset, "class " + std::to_string(c) + " has " +
                                                     std::to_string(by_class[c].size()) +
                                                     " records, fewer than k=" + std::to_string(k));
    }
  }
  SplitMix64 rng(seed);
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t dealt = 0;
  for (int c = 0; c < 2; ++c) {
    shuffle(by_class[c], rng);
    for (auto idx : by_class[c]) fold_of[idx] = dealt++ % k;
  }
  std::vector<Fold> folds(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].validation : folds[f].train).push_back(i);
  }
  return folds;
}

inline std::vector<Fold> kfold(const Dataset& data, std::size_t k, std::uint64_t seed) {
  const auto labels = data.labels();
  return stratified_kfold(std::span<const int>(labels), k, seed);
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace detail {

inline const std::string& pick(SplitMix64& rng, std::span<const std::string> tokens, std::span<const double> probs) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    acc += probs[i];
    if (u < acc) return tokens[i];
  }
  return tokens.back();
}

// Rounds to 1/scale units; the trailing +0.0 turns -0 into 0.
inline double clamp_round(double v, double lo, double hi, double scale = 1.0) {
  return std::round(std::clamp(v, lo, hi) * scale) / scale + 0.0;
}

}  // namespace detail

/// Two-population synthetic heart data. Positives are older, more often male,
/// asymptomatic chest pain, exercise angina, flat ST slope, lower MaxHR and
/// higher Oldpeak. Cholesterol and RestingBP occasionally carry the 0 sentinel.
///
///   feature          positive                 negative
///   Age              N(60, 7)                 N(46, 8)
///   Sex=M            0.90                     0.55
///   ChestPainType    ASY .80 NAP .10 ATA .05  ASY .12 NAP .35 ATA .48
///                    TA .05                   TA .05
///   RestingBP        N(138, 16), 2% zero      N(126, 14), 1% zero
///   Cholesterol      N(255, 45), 12% zero     N(222, 40), 4% zero
///   FastingBS=1      0.35                     0.10
///   RestingECG       Normal .55 ST .25 LVH .20 Normal .65 ST .15 LVH .20
///   MaxHR            N(120, 16)               N(160, 16)
///   ExerciseAngina=Y 0.78                     0.10
///   Oldpeak          N(2.2, 0.8) >= 0         N(0.3, 0.4) >= 0
///   ST_Slope         Flat .80 Down .10 Up .10 Up .82 Flat .15 Down .03
inline Dataset synth_generate(std::size_t n, double positive_fraction, std::uint64_t seed) {
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
    throw Error(ErrorKind::BadFraction, "positive fraction must lie in (0, 1)");
  }
  if (n < 2) throw Error(ErrorKind::BadArgument, "synthetic dataset needs n >= 2");
  auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n) * positive_fraction));
  n_pos = std::clamp<std::size_t>(n_pos, 1, n - 1);

  SplitMix64 rng(seed);
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  shuffle(labels, rng);

  static const std::array<std::string, 2> sex{"M", "F"};
  static const std::array<std::string, 4> cpt{"ASY", "NAP", "ATA", "TA"};
  static const std::array<std::string, 3> ecg{"Normal", "ST", "LVH"};
  static const std::array<std::string, 2> angina{"Y", "N"};
  static const std::array<std::string, 3> slope{"Flat", "Down", "Up"};

  Dataset out;
  out.source = "synthetic(n=" + std::to_string(n) + ",seed=" + std::to_string(seed) + ")";
  out.records.reserve(n);
  for (int y : labels) {
    const bool p = y == 1;
    RawRecord r;
    r.label = y;
    r.values[0] = detail::clamp_round(p ? rng.normal(60, 7) : rng.normal(46, 8), 28, 80);
    const double pm = p ? 0.90 : 0.55;
    r.values[1] = detail::pick(rng, sex, std::array{pm, 1 - pm});
    r.values[2] = detail::pick(rng, cpt, p ? std::array{0.80, 0.10, 0.05, 0.05} : std::array{0.12, 0.35, 0.48, 0.05});
    const double bp = detail::clamp_round(p ? rng.normal(138, 16) : rng.normal(126, 14), 85, 200);
    r.values[3] = rng.bernoulli(p ? 0.02 : 0.01) ? 0.0 : bp;
    const double chol = detail::clamp_round(p ? rng.normal(255, 45) : rng.normal(222, 40), 100, 560);
    r.values[4] = rng.bernoulli(p ? 0.12 : 0.04) ? 0.0 : chol;
    r.values[5] = rng.bernoulli(p ? 0.35 : 0.10) ? 1.0 : 0.0;
    r.values[6] = detail::pick(rng, ecg, p ? std::array{0.55, 0.25, 0.20} : std::array{0.65, 0.15, 0.20});
    r.values[7] = detail::clamp_round(p ? rng.normal(120, 16) : rng.normal(160, 16), 60, 202);
    const double ya = p ? 0.78 : 0.10;
    r.values[8] = detail::pick(rng, angina, std::array{ya, 1 - ya});
    r.values[9] = detail::clamp_round(p ? rng.normal(2.2, 0.8) : rng.normal(0.3, 0.4), 0.0, 6.2, 10.0);
    r.values[10] = detail::pick(rng, slope, p ? std::array{0.80, 0.10, 0.10} : std::array{0.15, 0.03, 0.82});
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace heartml
