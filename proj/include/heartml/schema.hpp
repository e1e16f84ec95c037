#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace heartml {

enum class FeatureKind { Numeric, Categorical };

struct FeatureSpec {
  std::string_view name;
  FeatureKind kind;
  // Values equal to the sentinel are physiologically impossible and treated as missing.
  std::optional<double> missing_sentinel;
};

inline constexpr std::size_t kFeatureCount = 11;
inline constexpr std::string_view kLabelColumn = "HeartDisease";

inline constexpr std::array<FeatureSpec, kFeatureCount> kHeartSchema{{
    {"Age", FeatureKind::Numeric, std::nullopt},
    {"Sex", FeatureKind::Categorical, std::nullopt},
    {"ChestPainType", FeatureKind::Categorical, std::nullopt},
    {"RestingBP", FeatureKind::Numeric, 0.0},
    {"Cholesterol", FeatureKind::Numeric, 0.0},
    {"FastingBS", FeatureKind::Numeric, std::nullopt},
    {"RestingECG", FeatureKind::Categorical, std::nullopt},
    {"MaxHR", FeatureKind::Numeric, std::nullopt},
    {"ExerciseAngina", FeatureKind::Categorical, std::nullopt},
    {"Oldpeak", FeatureKind::Numeric, std::nullopt},
    {"ST_Slope", FeatureKind::Categorical, std::nullopt},
}};

// Column positions used by the imputation cohort.
inline constexpr std::size_t kAgeColumn = 0;
inline constexpr std::size_t kSexColumn = 1;

constexpr std::optional<std::size_t> schema_index(std::string_view name) {
  for (std::size_t i = 0; i < kHeartSchema.size(); ++i) {
    if (kHeartSchema[i].name == name) return i;
  }
  return std::nullopt;
}

constexpr bool is_numeric(std::size_t column) {
  return kHeartSchema[column].kind == FeatureKind::Numeric;
}

}  // namespace heartml
