#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "featlab/datamodel.hpp"
#include "featlab/error.hpp"
#include "test_support.hpp"

using namespace featlab;
using featlab::testing::make_indexed_unit;
using featlab::testing::make_mock_dataset;

namespace {

constexpr const char* kHeader = "unit_id,t_index,vol_up,occ_up,vol_down,occ_down,label\n";

std::string csv_unit(const std::string& id, std::size_t len, std::size_t onset, std::size_t inc) {
  std::string s;
  for (std::size_t t = 0; t < len; ++t) {
    const int label = (t >= onset && t < onset + inc) ? 1 : 0;
    s += id + "," + std::to_string(t) + ",20,0.1,18,0.09," + std::to_string(label) + "\n";
  }
  return s;
}

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset(in, "test");
}

}  // namespace

TEST(LoadDataset, GroupsTwoUnits) {
  const Dataset ds = parse(kHeader + csv_unit("a", 90, 60, 30) + csv_unit("b", 90, 60, 30));
  ASSERT_EQ(ds.units.size(), 2u);
  EXPECT_EQ(ds.interval_count(), 180u);
  EXPECT_EQ(ds.units[0].onset, 60u);
  EXPECT_EQ(ds.units[1].incident_count(), 30u);
}

TEST(LoadDataset, SortsByTimeIndexAndKeepsUnitOrder) {
  const Dataset ds = parse(std::string(kHeader) +
                           "z,1,1,0.1,1,0.1,0\n"
                           "a,0,5,0.1,5,0.1,0\n"
                           "z,0,2,0.1,1,0.1,0\n");
  ASSERT_EQ(ds.units.size(), 2u);
  EXPECT_EQ(ds.units[0].unit_id, "z");
  EXPECT_EQ(ds.units[1].unit_id, "a");
  EXPECT_DOUBLE_EQ(ds.units[0].records[0].vol_up, 2.0);
  EXPECT_FALSE(ds.units[0].onset.has_value());
}

TEST(LoadDataset, RejectsNonContiguousIncidentLabels) {
  const std::string text = std::string(kHeader) +
                           "u7,0,1,0.1,1,0.1,0\n"
                           "u7,1,1,0.1,1,0.1,1\n"
                           "u7,2,1,0.1,1,0.1,0\n"
                           "u7,3,1,0.1,1,0.1,1\n";
  try {
    parse(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::strstr(e.what(), "u7"), nullptr);
  }
}

TEST(LoadDataset, RejectsOccupancyAboveOne) {
  EXPECT_THROW(parse(std::string(kHeader) + "u,0,1,1.3,1,0.1,0\n"), RangeError);
  EXPECT_THROW(parse(std::string(kHeader) + "u,0,-1,0.1,1,0.1,0\n"), RangeError);
}

TEST(LoadDataset, ParseErrorCarriesLineNumber) {
  try {
    parse(std::string(kHeader) + "u,0,1,0.1,1,0.1,0\nu,1,abc,0.1,1,0.1,0\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse(std::string(kHeader) + "u,0,1,0.1\n"), ParseError);
  EXPECT_THROW(parse("unit,t,a,b,c,d,e\n"), ValidationError);
}

TEST(LoadDataset, RejectsGapsInTimeIndex) {
  EXPECT_THROW(parse(std::string(kHeader) + "u,0,1,0.1,1,0.1,0\nu,2,1,0.1,1,0.1,0\n"),
               ValidationError);
}

TEST(LoadDataset, MissingFileNamesPath) {
  try {
    load_dataset("/nonexistent/dir/data.csv");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::strstr(e.what(), "/nonexistent/dir/data.csv"), nullptr);
  }
}

TEST(LoadDataset, CsvRoundTripIsBitExact) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> vol(0.0, 40.0);
  std::uniform_real_distribution<double> occ(0.0, 1.0);
  Dataset ds;
  for (int u = 0; u < 5; ++u) {
    std::vector<IntervalRecord> recs(40);
    for (std::size_t t = 0; t < recs.size(); ++t) {
      recs[t] = {t, vol(rng), occ(rng), vol(rng), occ(rng), (t >= 20 && t < 30) ? 1 : 0};
    }
    ds.units.push_back(make_unit("unit" + std::to_string(u), std::move(recs)));
  }
  std::ostringstream out;
  write_dataset(out, ds);
  std::istringstream in(out.str());
  const Dataset back = read_dataset(in);
  EXPECT_EQ(back, ds);
}

TEST(TrimHead, MatchesTrainingSetCounts) {
  const Dataset ds = make_mock_dataset(52, 4629, 1408);
  ASSERT_EQ(ds.interval_count(), 4629u);
  const Dataset t = trim_head(ds, {12});
  EXPECT_EQ(t.interval_count(), 4005u);
  EXPECT_EQ(t.incident_interval_count(), 1408u);
}

TEST(TrimHead, MatchesTestSetCounts) {
  const Dataset ds = make_mock_dataset(129, 11445, 3699);
  const Dataset t = trim_head(ds, {12});
  EXPECT_EQ(t.interval_count(), 9897u);
  EXPECT_EQ(t.incident_interval_count(), 3699u);
}

TEST(TrimHead, FifteenIntervalsLeaveThree) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 15, 13, 2));
  const Dataset t = trim_head(ds, {12});
  ASSERT_EQ(t.units[0].size(), 3u);
  EXPECT_EQ(t.units[0].onset, 1u);
  EXPECT_EQ(t.units[0].records[0].t_index, 0u);
  EXPECT_DOUBLE_EQ(t.units[0].records[0].vol_up, 12.0);
}

TEST(TrimHead, ShortUnitIsRejectedByName) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("long", 30, 20, 5));
  ds.units.push_back(make_indexed_unit("short", 12, 5, 5));
  try {
    trim_head(ds, {12});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::strstr(e.what(), "short"), nullptr);
  }
}

TEST(RawFeatures, DimensionFormulaForAllPairs) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 20, 15, 3));
  const Dataset t = trim_head(ds, {12});
  for (std::size_t x = 0; x <= 12; ++x) {
    for (std::size_t y = 0; y <= x; ++y) {
      const auto ex = assemble_raw_features(t, {x, y});
      ASSERT_EQ(ex.size(), 8u);
      EXPECT_EQ(ex[0].features.size(), 2 * (x + 1) + 2 * (y + 1)) << x << "-" << y;
    }
  }
  EXPECT_EQ((PairConfig{4, 2}).dimension(), 16u);
  EXPECT_EQ((PairConfig{12, 12}).dimension(), 52u);
}

TEST(RawFeatures, ZeroPairIsTheIntervalItself) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 20, 15, 3));
  const Dataset t = trim_head(ds, {12});
  const auto ex = assemble_raw_features(t, {0, 0});
  const auto& r = t.units[0].records[4];
  EXPECT_EQ(ex[4].features, (FeatureVector{r.vol_up, r.occ_up, r.vol_down, r.occ_down}));
  EXPECT_EQ(ex[4].label, r.label);
  EXPECT_EQ(ex[4].t_index, 4u);
}

TEST(RawFeatures, BlockLayoutOldestToNewest) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 20, 15, 3));
  const Dataset t = trim_head(ds, {12});
  // trimmed position 0 is original position 12
  const auto ex = assemble_raw_features(t, {2, 1});
  const FeatureVector expect{10, 11, 12, 0.010, 0.011, 0.012, 111, 112, 0.511, 0.512};
  ASSERT_EQ(ex[0].features.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_DOUBLE_EQ(ex[0].features[i], expect[i]);
}

TEST(RawFeatures, PairNeedsHistory) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 20, 15, 3));
  const Dataset t = trim_head(ds, {4});
  EXPECT_THROW(assemble_raw_features(t, {5, 2}), ValidationError);
  EXPECT_THROW(assemble_raw_features(t, {2, 4}), ConfigError);
}

TEST(PairConfig, ParseAndValidate) {
  EXPECT_EQ(PairConfig::parse("4-2"), (PairConfig{4, 2}));
  EXPECT_EQ(PairConfig::parse("[12-12]"), (PairConfig{12, 12}));
  EXPECT_THROW(PairConfig::parse("4x2"), ConfigError);
  EXPECT_THROW(PairConfig::parse("-2"), ConfigError);
  EXPECT_THROW((PairConfig{2, 4}).validate(12), ConfigError);
  EXPECT_THROW((PairConfig{13, 4}).validate(12), ConfigError);
  EXPECT_NO_THROW((PairConfig{12, 12}).validate(12));
}

TEST(ContextVectors, LengthIsZPlusOne) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 30, 20, 5));
  const auto ctx = assemble_context_vectors(trim_head(ds, {12}), {12});
  ASSERT_EQ(ctx.size(), 18u);
  for (const auto& c : ctx) {
    for (const auto& cv : c.channels) EXPECT_EQ(cv.values.size(), 13u);
  }
}

TEST(ContextVectors, ConstantSeriesGivesConstantVectors) {
  std::vector<IntervalRecord> recs(20);
  for (std::size_t t = 0; t < recs.size(); ++t) recs[t] = {t, 5.0, 0.5, 5.0, 0.5, 0};
  Dataset ds;
  ds.units.push_back(make_unit("c", std::move(recs)));
  const auto ctx = assemble_context_vectors(trim_head(ds, {12}), {12});
  EXPECT_EQ(ctx[3].channels[0].values, std::vector<double>(13, 5.0));
}

TEST(ContextVectors, FirstTrimmedIntervalSeesOriginalHead) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 30, 20, 5));
  const auto ctx = assemble_context_vectors(trim_head(ds, {12}), {12});
  const auto& untrimmed = ds.units[0].records;
  for (Channel ch : kAllChannels) {
    const auto& v = ctx[0].channels[static_cast<std::size_t>(ch)];
    EXPECT_EQ(v.channel, ch);
    for (std::size_t k = 0; k <= 12; ++k) EXPECT_EQ(v.values[k], untrimmed[k].value(ch));
  }
  EXPECT_EQ(ctx[0].t_index, 0u);
}

TEST(ContextVectors, RequiresTrim) {
  Dataset ds;
  ds.units.push_back(make_indexed_unit("u", 30, 20, 5));
  EXPECT_THROW(assemble_context_vectors(ds, {12}), ValidationError);
}
