#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace heartml;
using namespace heartml::testing;

namespace {

constexpr std::size_t kSex = 1, kChestPain = 2, kBP = 3, kChol = 4, kMaxHR = 7;

std::pair<double, double> column_mean_std(const FeatureMatrix& m, std::size_t c) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) s += m.at(i, c);
  const double mean = s / static_cast<double>(m.rows);
  double ss = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) ss += (m.at(i, c) - mean) * (m.at(i, c) - mean);
  return {mean, std::sqrt(ss / static_cast<double>(m.rows))};
}

}  // namespace

TEST(Fit, VocabularyIsSortedAndEncodesByIndex) {
  const auto d = dataset_of({plain_record(50, 1, "M"), plain_record(51, 0, "F"), plain_record(52, 1, "M")});
  const auto fp = fit(d);
  EXPECT_EQ(fp.vocab[kSex], (std::vector<std::string>{"F", "M"}));
  const auto m = transform(fp, d);
  EXPECT_EQ(m.at(0, kSex), 1.0);
  EXPECT_EQ(m.at(1, kSex), 0.0);
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (!is_numeric(c)) {
      EXPECT_FALSE(fp.vocab[c].empty());
      EXPECT_TRUE(std::is_sorted(fp.vocab[c].begin(), fp.vocab[c].end()));
    }
  }
}

TEST(Fit, CohortMedianImputesSentinel) {
  auto d = dataset_of({plain_record(55, 1), plain_record(57, 0), plain_record(51, 1)});
  d.records[0].values[kChol] = 200.0;
  d.records[1].values[kChol] = 0.0;
  d.records[2].values[kChol] = 250.0;
  const auto fp = fit(d);
  const auto& cell = fp.impute_table.at(Cohort{"M", 50})[kChol];
  ASSERT_TRUE(cell.has_value());
  EXPECT_DOUBLE_EQ(*cell, 225.0);
  // Scaling stats are computed on the imputed column [200, 225, 250].
  EXPECT_DOUBLE_EQ(fp.scale_stats[kChol].mean, 225.0);
  const auto m = transform(fp, d);
  EXPECT_NEAR(m.at(1, kChol), 0.0, 1e-12);
}

TEST(Fit, FallsBackToGlobalMedianForUnknownCohort) {
  auto train = dataset_of({plain_record(55, 1), plain_record(57, 0), plain_record(41, 1, "F")});
  train.records[0].values[kBP] = 100.0;
  train.records[1].values[kBP] = 140.0;
  train.records[2].values[kBP] = 130.0;
  const auto fp = fit(train);
  EXPECT_DOUBLE_EQ(*fp.global_medians[kBP], 130.0);
  auto probe = dataset_of({plain_record(75, 1, "F")});
  probe.records[0].values[kBP] = 0.0;
  const auto m = transform(fp, probe);
  const auto& s = fp.scale_stats[kBP];
  EXPECT_NEAR(m.at(0, kBP), (130.0 - s.mean) / s.std, 1e-12);
}

TEST(Fit, EmptyTrainingSet) {
  EXPECT_EQ(error_kind_of([] { fit(Dataset{}); }), ErrorKind::EmptyDataset);
}

TEST(Transform, ScalesOneTwoThree) {
  const auto d = dataset_of({plain_record(1, 1), plain_record(2, 0), plain_record(3, 1)});
  const auto fp = fit(d);
  EXPECT_DOUBLE_EQ(fp.scale_stats[0].mean, 2.0);
  EXPECT_NEAR(fp.scale_stats[0].std, 0.81650, 1e-5);
  const auto m = transform(fp, d);
  EXPECT_NEAR(m.at(0, 0), -1.22474, 1e-5);
  EXPECT_NEAR(m.at(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(m.at(2, 0), 1.22474, 1e-5);
}

TEST(Transform, ConstantColumnMapsToZero) {
  const auto train = dataset_of({plain_record(5, 1), plain_record(5, 0)});
  const auto fp = fit(train);
  EXPECT_EQ(fp.scale_stats[0].std, 0.0);
  const auto m = transform(fp, dataset_of({plain_record(5, 1), plain_record(7, 0)}));
  EXPECT_EQ(m.at(0, 0), 0.0);
  EXPECT_EQ(m.at(1, 0), 0.0);
}

TEST(Transform, UnseenCategoryPolicies) {
  auto train = dataset_of({plain_record(50, 1), plain_record(50, 0), plain_record(50, 0)});
  train.records[1].values[kChestPain] = std::string("ATA");
  auto probe = dataset_of({plain_record(50, 1)});
  probe.records[0].values[kChestPain] = std::string("TA");

  EXPECT_EQ(error_kind_of([&] { transform(fit(train), probe); }), ErrorKind::UnseenCategory);
  const auto m = transform(fit(train, UnseenPolicy::MapToMode), probe);
  // Mode is ASY (two of three rows), vocab ["ASY", "ATA"].
  EXPECT_EQ(m.at(0, kChestPain), 0.0);
}

TEST(Transform, TrainingMatrixIsStandardizedAndIdempotent) {
  const auto d = synth_generate(300, 0.45, 21);
  const auto fp = fit(d);
  const auto m = transform(fp, d);
  EXPECT_EQ(m, transform(fp, d));
  ASSERT_EQ(m.cols, kFeatureCount);
  for (std::size_t c = 0; c < m.cols; ++c) {
    EXPECT_EQ(m.column_names[c], kHeartSchema[c].name);
    if (!is_numeric(c) || fp.scale_stats[c].std == 0.0) continue;
    const auto [mean, sd] = column_mean_std(m, c);
    EXPECT_LT(std::abs(mean), 1e-9) << m.column_names[c];
    EXPECT_LT(std::abs(sd - 1.0), 1e-9) << m.column_names[c];
  }
  for (double v : m.values) ASSERT_TRUE(std::isfinite(v));
}

TEST(Transform, ImputationLeavesObservedValuesAlone) {
  const auto d = synth_generate(200, 0.5, 4);
  const auto fp = fit(d);
  const auto m = transform(fp, d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (!is_numeric(c) || is_missing(c, d.records[i].numeric(c)) || fp.scale_stats[c].std == 0.0) continue;
      const double back = m.at(i, c) * fp.scale_stats[c].std + fp.scale_stats[c].mean;
      ASSERT_NEAR(back, d.records[i].numeric(c), 1e-9 * (1.0 + std::abs(d.records[i].numeric(c))));
    }
  }
}

TEST(Fit, NoLeakageFromPerturbedTestRows) {
  const auto d = synth_generate(200, 0.4, 8);
  const auto split = stratified_split(d, 0.25, 42);
  auto perturbed = d;
  for (auto i : split.indices.test) {
    auto& r = perturbed.records[i];
    r.values[kMaxHR] = r.numeric(kMaxHR) * 3.0 + 17.0;
    r.values[kChol] = 0.0;
    r.values[kChestPain] = std::string("ZZZ");
  }
  const auto fp = fit(d.subset(split.indices.train));
  const auto fp2 = fit(perturbed.subset(split.indices.train));
  EXPECT_EQ(fp, fp2);
  EXPECT_EQ(transform(fp, split.train), transform(fp2, split.train));
}

TEST(Outliers, FlagsOnlyScaledNumericCells) {
  auto m = matrix_of(kFeatureCount, std::vector<double>(2 * kFeatureCount, 0.0), {0, 1});
  for (std::size_t c = 0; c < kFeatureCount; ++c) m.column_names[c] = std::string(kHeartSchema[c].name);
  EXPECT_EQ(flag_outliers(m, 3.0).count, 0u);
  m.values[0] = 4.1;                   // Age, row 0
  m.values[kFeatureCount + 7] = -2.9;  // MaxHR, row 1
  m.values[kFeatureCount + 1] = 7.0;   // Sex index, never flagged
  const auto before = m;
  const auto rep = flag_outliers(m, 3.0);
  EXPECT_EQ(rep.count, 1u);
  EXPECT_TRUE(rep.flags[0]);
  EXPECT_FALSE(rep.flags[kFeatureCount + 7]);
  EXPECT_FALSE(rep.flags[kFeatureCount + 1]);
  EXPECT_EQ(m, before);
  EXPECT_EQ(error_kind_of([&] { flag_outliers(m, 0.0); }), ErrorKind::BadArgument);
}

TEST(Smote, TwoPointInterpolation) {
  const auto m = matrix_of(2, {0, 0, 1, 1, 5, 5, 6, 6, 7, 7}, {1, 1, 0, 0, 0});
  const auto out = smote(m, 1, 3);
  ASSERT_EQ(out.rows, 6u);
  const auto s = out.row(5);
  EXPECT_EQ(out.labels[5], 1);
  EXPECT_EQ(s[0], s[1]);
  EXPECT_GE(s[0], 0.0);
  EXPECT_LT(s[0], 1.0);
}

TEST(Smote, BalancesCountsAndKeepsOriginals) {
  SplitMix64 rng(5);
  std::vector<double> v;
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) {
    for (int c = 0; c < 3; ++c) v.push_back(rng.normal());
    y.push_back(i < 30 ? 1 : 0);
  }
  const auto m = matrix_of(3, v, y);
  const auto out = smote(m, 5, 11);
  EXPECT_EQ(out.class_counts()[0], 90u);
  EXPECT_EQ(out.class_counts()[1], 90u);
  EXPECT_EQ(out.rows, 180u);
  EXPECT_TRUE(std::equal(m.values.begin(), m.values.end(), out.values.begin()));
  EXPECT_TRUE(std::equal(m.labels.begin(), m.labels.end(), out.labels.begin()));
  EXPECT_EQ(smote(m, 5, 11), out);
}

TEST(Smote, SyntheticRowsLieOnSegmentsBetweenMinorityRows) {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v;
    std::vector<int> y;
    const std::size_t n_min = 3 + rng.below(8);
    const std::size_t n_maj = n_min + 1 + rng.below(20);
    for (std::size_t i = 0; i < n_min + n_maj; ++i) {
      for (int c = 0; c < 4; ++c) v.push_back(rng.normal(0, 10));
      y.push_back(i < n_min ? 1 : 0);
    }
    const auto m = matrix_of(4, v, y);
    const auto out = smote(m, std::min<std::size_t>(3, n_min - 1), rng.next());
    for (std::size_t s = m.rows; s < out.rows; ++s) {
      const auto row = out.row(s);
      bool found = false;
      for (std::size_t a = 0; a < n_min && !found; ++a) {
        for (std::size_t b = 0; b < n_min && !found; ++b) {
          if (a == b) continue;
          const auto x = m.row(a), nn = m.row(b);
          // Same interpolation weight in every column, within rounding.
          bool ok = true;
          std::optional<double> u;
          for (std::size_t c = 0; c < 4 && ok; ++c) {
            ok = std::min(x[c], nn[c]) <= row[c] && row[c] <= std::max(x[c], nn[c]);
            const double span = nn[c] - x[c];
            if (ok && std::abs(span) > 1e-9) {
              const double uc = (row[c] - x[c]) / span;
              if (u) ok = std::abs(*u - uc) < 1e-9;
              u = uc;
            }
          }
          found = ok;
        }
      }
      ASSERT_TRUE(found) << "synthetic row " << s << " is not on any minority segment";
    }
  }
}

TEST(Smote, Errors) {
  const auto one = matrix_of(1, {0, 1, 2, 3}, {1, 0, 0, 0});
  EXPECT_EQ(error_kind_of([&] { smote(one, 1, 1); }), ErrorKind::MinorityTooSmall);
  const auto three = matrix_of(1, {0, 1, 2, 3, 4, 5}, {1, 1, 1, 0, 0, 0});
  EXPECT_EQ(error_kind_of([&] { smote(three, 3, 1); }), ErrorKind::KTooLarge);
  EXPECT_EQ(error_kind_of([&] { smote(three, 0, 1); }), ErrorKind::KTooLarge);
}
