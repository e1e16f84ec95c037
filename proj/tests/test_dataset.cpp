#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "test_support.hpp"

using namespace heartml;
using namespace heartml::testing;

namespace {

const char* kHeader =
    "Age,Sex,ChestPainType,RestingBP,Cholesterol,FastingBS,RestingECG,MaxHR,ExerciseAngina,Oldpeak,ST_Slope,"
    "HeartDisease\n";

std::string three_rows() {
  return std::string(kHeader) +
         "40,M,ATA,140,289,0,Normal,172,N,0,Up,0\n"
         "49,F,NAP,160,180,0,Normal,156,N,1,Flat,1\n"
         "37,M,ATA,130,283,0,ST,98,N,0,Up,0\n";
}

}  // namespace

TEST(Rng, SplitMixReferenceStream) {
  SplitMix64 rng(0);
  EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next(), 0x06C45D188009454FULL);
}

TEST(Rng, UniformAndBelowStayInRange) {
  SplitMix64 rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}

TEST(LoadCsv, ParsesValidFile) {
  const auto d = parse_csv(three_rows());
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.records[0].numeric(0), 40.0);
  EXPECT_EQ(d.records[1].token(1), "F");
  EXPECT_EQ(d.records[1].label, 1);
  EXPECT_EQ(d.records[2].token(6), "ST");
}

TEST(LoadCsv, AcceptsCrlfAndAnyHeaderOrder) {
  std::string text =
      "HeartDisease,ST_Slope,Oldpeak,ExerciseAngina,MaxHR,RestingECG,FastingBS,Cholesterol,RestingBP,ChestPainType,"
      "Sex,Age\r\n1,Flat,1.5,Y,120,LVH,1,0,150,ASY,M,63\r\n";
  const auto d = parse_csv(text);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.records[0].numeric(0), 63.0);
  EXPECT_EQ(d.records[0].numeric(9), 1.5);
  EXPECT_EQ(d.records[0].token(10), "Flat");
  EXPECT_EQ(d.records[0].label, 1);
}

TEST(LoadCsv, MissingColumn) {
  std::string text = "Age,Sex,ChestPainType,RestingBP,Cholesterol,FastingBS,RestingECG,MaxHR,ExerciseAngina,ST_Slope,"
                     "HeartDisease\n40,M,ATA,140,289,0,Normal,172,N,Up,0\n";
  try {
    parse_csv(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingColumn);
    EXPECT_EQ(e.detail(), "Oldpeak");
    EXPECT_EQ(e.code(), ErrorCode::Schema);
  }
}

TEST(LoadCsv, UnparsableCellNamesRowColumnContent) {
  auto text = std::string(kHeader) + "abc,M,ATA,140,289,0,Normal,172,N,0,Up,0\n";
  try {
    parse_csv(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnparsableCell);
    EXPECT_NE(e.detail().find("row 1"), std::string::npos);
    EXPECT_NE(e.detail().find("Age"), std::string::npos);
    EXPECT_NE(e.detail().find("abc"), std::string::npos);
  }
}

TEST(LoadCsv, OtherErrorPaths) {
  EXPECT_EQ(error_kind_of([] { parse_csv(""); }), ErrorKind::EmptyFile);
  EXPECT_EQ(error_kind_of([] { parse_csv("\n\n"); }), ErrorKind::EmptyFile);
  EXPECT_EQ(error_kind_of([] { parse_csv(std::string("Age,") + kHeader); }), ErrorKind::DuplicateHeader);
  EXPECT_EQ(error_kind_of([] { parse_csv(std::string("Extra,") + kHeader); }), ErrorKind::UnknownColumn);
  EXPECT_EQ(error_kind_of([] { parse_csv(std::string(kHeader) + "40,M,ATA\n"); }), ErrorKind::RaggedRow);
  EXPECT_EQ(error_kind_of([] { parse_csv(std::string(kHeader) + "40,M,ATA,140,289,0,Normal,172,N,0,Up,2\n"); }),
            ErrorKind::UnparsableCell);
  EXPECT_EQ(error_kind_of([] { parse_csv(std::string(kHeader) + "40,,ATA,140,289,0,Normal,172,N,0,Up,0\n"); }),
            ErrorKind::UnparsableCell);
  EXPECT_EQ(error_kind_of([] { parse_csv(std::string(kHeader) + "inf,M,ATA,140,289,0,Normal,172,N,0,Up,0\n"); }),
            ErrorKind::UnparsableCell);
  EXPECT_EQ(error_kind_of([] { load_csv("/nonexistent/heart.csv"); }), ErrorKind::FileNotFound);
}

TEST(LoadCsv, RoundTripThroughFile) {
  auto d = synth_generate(60, 0.4, 3);
  // Awkward doubles must survive too.
  d.records[0].values[9] = 0.1 + 0.2;
  d.records[1].values[0] = 1e-300;
  d.records[2].values[7] = -123456.789012345678;
  const auto dir = scratch_dir("roundtrip");
  const auto path = (dir / "d.csv").string();
  std::ofstream(path) << to_csv(d);
  const auto back = load_csv(path);
  EXPECT_EQ(back.records, d.records);
}

TEST(LoadCsv, RoundTripRandomDatasetsProperty) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = synth_generate(5 + rng.below(20), 0.5, rng.next());
    for (auto& r : d.records) {
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        if (is_numeric(c)) r.values[c] = rng.normal(0, 1e3) * std::pow(10.0, static_cast<double>(rng.below(10)) - 5);
      }
    }
    ASSERT_EQ(parse_csv(to_csv(d)).records, d.records);
  }
}

TEST(Summarize, NumericStatsLabelsAndSentinels) {
  auto d = dataset_of({plain_record(40, 1), plain_record(50, 1), plain_record(60, 0), plain_record(60, 1)});
  d.records.pop_back();
  const auto rep = summarize(d);
  const auto& age = rep.numeric[0];
  EXPECT_EQ(age.name, "Age");
  EXPECT_DOUBLE_EQ(age.mean, 50.0);
  EXPECT_NEAR(age.std, 8.16497, 1e-5);
  EXPECT_EQ(age.min, 40.0);
  EXPECT_EQ(age.max, 60.0);

  auto labels = dataset_of({plain_record(1, 1), plain_record(1, 1), plain_record(1, 0), plain_record(1, 1)});
  EXPECT_DOUBLE_EQ(summarize(labels).positive_fraction, 0.75);

  auto chol = dataset_of({plain_record(50, 1), plain_record(50, 0), plain_record(50, 1)});
  chol.records[0].values[4] = 200.0;
  chol.records[1].values[4] = 0.0;
  chol.records[2].values[4] = 250.0;
  const auto cs = summarize(chol).numeric[2];
  EXPECT_EQ(cs.name, "Cholesterol");
  EXPECT_EQ(cs.missing, 1u);
  EXPECT_EQ(cs.count, 2u);
  EXPECT_DOUBLE_EQ(cs.mean, 225.0);

  // FastingBS = 0 is a value, not a sentinel.
  const auto fbs = summarize(chol).numeric[3];
  EXPECT_EQ(fbs.name, "FastingBS");
  EXPECT_EQ(fbs.missing, 0u);

  EXPECT_EQ(summarize(chol).categorical[0].histogram.at("M"), 3u);
  EXPECT_EQ(error_kind_of([] { summarize(Dataset{}); }), ErrorKind::EmptyDataset);
}

namespace {

Dataset labelled(std::size_t pos, std::size_t neg) {
  std::vector<RawRecord> rs;
  for (std::size_t i = 0; i < pos + neg; ++i) rs.push_back(plain_record(static_cast<double>(20 + i), i < pos ? 1 : 0));
  return dataset_of(std::move(rs));
}

std::size_t count_label(const Dataset& d, int y) {
  return static_cast<std::size_t>(std::count_if(d.records.begin(), d.records.end(), [y](const auto& r) { return r.label == y; }));
}

}  // namespace

TEST(StratifiedSplit, PerClassQuotas) {
  const auto d = labelled(4, 6);
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 12345ULL}) {
    const auto s = stratified_split(d, 0.5, seed);
    EXPECT_EQ(count_label(s.test, 1), 2u);
    EXPECT_EQ(count_label(s.test, 0), 3u);
    EXPECT_EQ(s.train.size() + s.test.size(), 10u);
  }
}

TEST(StratifiedSplit, Errors) {
  const auto d = labelled(4, 6);
  EXPECT_EQ(error_kind_of([&] { stratified_split(d, 0.0, 1); }), ErrorKind::FractionOutOfRange);
  EXPECT_EQ(error_kind_of([&] { stratified_split(d, 1.0, 1); }), ErrorKind::FractionOutOfRange);
  EXPECT_EQ(error_kind_of([&] { stratified_split(labelled(0, 5), 0.5, 1); }), ErrorKind::SingleClassDataset);
}

TEST(StratifiedSplit, DeterministicUnderSeed) {
  const auto d = synth_generate(200, 0.45, 11);
  const auto a = stratified_split(d, 0.2, 42);
  const auto b = stratified_split(d, 0.2, 42);
  EXPECT_EQ(a.indices.train, b.indices.train);
  EXPECT_EQ(a.indices.test, b.indices.test);
  const auto c = stratified_split(d, 0.2, 43);
  EXPECT_NE(a.indices.test, c.indices.test);
}

TEST(StratifiedSplit, IgnoresFeatureValues) {
  const auto d = synth_generate(120, 0.4, 5);
  auto perturbed = d;
  SplitMix64 rng(99);
  for (auto& r : perturbed.records) r.values[0] = rng.uniform(20, 80);
  const auto a = stratified_split(d, 0.25, 42);
  const auto b = stratified_split(perturbed, 0.25, 42);
  EXPECT_EQ(a.indices.test, b.indices.test);
  EXPECT_EQ(kfold(d, 5, 3)[2].validation, kfold(perturbed, 5, 3)[2].validation);
}

TEST(StratifiedSplit, QuotaAndPartitionProperty) {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t pos = 1 + rng.below(40);
    const std::size_t neg = 1 + rng.below(40);
    const double f = 0.05 + 0.9 * rng.uniform();
    const auto d = labelled(pos, neg);
    const auto s = stratified_split(d, f, rng.next());
    const double n = static_cast<double>(pos + neg);
    EXPECT_LE(std::abs(static_cast<double>(s.test.size()) - std::round(n * f)), 1.0);
    EXPECT_LE(std::abs(static_cast<double>(count_label(s.test, 1)) - static_cast<double>(pos) * f), 1.5);
    EXPECT_LE(std::abs(static_cast<double>(count_label(s.test, 0)) - static_cast<double>(neg) * f), 1.5);
    std::set<std::size_t> all(s.indices.train.begin(), s.indices.train.end());
    for (auto i : s.indices.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), pos + neg);
  }
}

TEST(KFold, SizesAndErrors) {
  const auto d = labelled(3, 3);
  const auto folds = kfold(d, 3, 7);
  ASSERT_EQ(folds.size(), 3u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.validation.size(), 2u);
    EXPECT_EQ(f.train.size(), 4u);
  }
  EXPECT_EQ(error_kind_of([] { kfold(labelled(3, 1), 3, 7); }), ErrorKind::SingleClassDataset);
  EXPECT_EQ(error_kind_of([&] { kfold(d, 7, 7); }), ErrorKind::KTooLarge);
  EXPECT_EQ(error_kind_of([&] { kfold(d, 1, 7); }), ErrorKind::BadArgument);
}

TEST(KFold, PartitionProperty) {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(6);
    const std::size_t pos = k + rng.below(30);
    const std::size_t neg = k + rng.below(30);
    const auto d = labelled(pos, neg);
    const auto seed = rng.next();
    const auto folds = kfold(d, k, seed);
    ASSERT_EQ(folds.size(), k);
    std::vector<int> hits(pos + neg, 0);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.validation.size());
      hi = std::max(hi, f.validation.size());
      EXPECT_EQ(f.train.size() + f.validation.size(), pos + neg);
      bool has_pos = false, has_neg = false;
      for (auto i : f.validation) {
        ++hits[i];
        (d.records[i].label ? has_pos : has_neg) = true;
      }
      EXPECT_TRUE(has_pos && has_neg);
    }
    EXPECT_LE(hi - lo, 1u);
    for (int h : hits) EXPECT_EQ(h, 1);
    const auto again = kfold(d, k, seed);
    for (std::size_t f = 0; f < k; ++f) EXPECT_EQ(again[f].validation, folds[f].validation);
  }
}

TEST(Synth, CountsAndDeterminism) {
  EXPECT_EQ(synth_generate(100, 0.5, 7).positives(), 50u);
  EXPECT_EQ(synth_generate(100, 0.3, 7).positives(), 30u);
  EXPECT_EQ(to_csv(synth_generate(100, 0.5, 7)), to_csv(synth_generate(100, 0.5, 7)));
  EXPECT_NE(to_csv(synth_generate(100, 0.5, 7)), to_csv(synth_generate(100, 0.5, 8)));
  EXPECT_EQ(error_kind_of([] { synth_generate(100, 0.0, 7); }), ErrorKind::BadFraction);
  EXPECT_EQ(error_kind_of([] { synth_generate(100, 1.0, 7); }), ErrorKind::BadFraction);
}

TEST(Synth, SchemaConformantWithSentinels) {
  const auto d = synth_generate(400, 0.5, 7);
  std::size_t chol_missing = 0;
  for (const auto& r : d.records) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      if (is_numeric(c)) {
        ASSERT_TRUE(std::isfinite(r.numeric(c)));
      } else {
        ASSERT_FALSE(r.token(c).empty());
      }
    }
    chol_missing += r.numeric(4) == 0.0;
  }
  EXPECT_GT(chol_missing, 0u);
  EXPECT_EQ(parse_csv(to_csv(d)).records, d.records);
}
