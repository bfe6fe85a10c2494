#include <gtest/gtest.h>

#include <sstream>

#include "featlab/error.hpp"
#include "featlab/featlearn.hpp"
#include "featlab/synth.hpp"

using namespace featlab;

TEST(Synth, CountArithmetic) {
  SynthConfig cfg;
  cfg.post_len_max = 0;
  const Dataset ds = generate_dataset(cfg);
  EXPECT_EQ(ds.units.size(), 52u);
  EXPECT_EQ(ds.interval_count(), 4680u);
  EXPECT_EQ(ds.incident_interval_count(), 1560u);
  EXPECT_EQ(ds.site_tag, "site_a");
  EXPECT_EQ(ds.units[3].unit_id, "u0004");
  for (const auto& u : ds.units) EXPECT_EQ(u.onset, 60u);
}

TEST(Synth, NoiselessLift) {
  SynthConfig cfg;
  cfg.noise_sd = 0.0;
  cfg.ramp_len = 0;
  cfg.drift_amp = 0.0;
  cfg.n_units = 5;
  const Dataset ds = generate_dataset(cfg);
  for (const auto& u : ds.units) {
    for (const auto& r : u.records) {
      const double want = r.label ? cfg.base_occ * cfg.inc_occ_lift : cfg.base_occ;
      EXPECT_DOUBLE_EQ(r.occ_up, want);
    }
  }
}

TEST(Synth, SeededDeterminism) {
  SynthConfig cfg;
  cfg.seed = 77;
  EXPECT_EQ(generate_dataset(cfg), generate_dataset(cfg));
  SynthConfig other = cfg;
  other.seed = 78;
  EXPECT_NE(generate_dataset(cfg), generate_dataset(other));
}

TEST(Synth, UnitsPassLoadValidation) {
  SynthConfig cfg;
  cfg.n_units = 20;
  cfg.noise_sd = 0.15;
  const Dataset ds = generate_dataset(cfg);
  std::stringstream buf;
  write_dataset(buf, ds);
  const Dataset back = read_dataset(buf, ds.site_tag);
  EXPECT_EQ(back, ds);
  for (const auto& u : ds.units) {
    for (const auto& r : u.records) {
      EXPECT_GE(r.occ_up, 0.0);
      EXPECT_LE(r.occ_up, 1.0);
      EXPECT_GE(r.vol_down, 0.0);
    }
  }
  EXPECT_NO_THROW(trim_head(ds, {12}));
}

TEST(Synth, IncidentRaisesUpstreamOccupancy) {
  std::size_t lifted = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.noise_sd = 0.15;
    for (const auto& u : generate_dataset(cfg).units) {
      double in = 0.0, pre = 0.0;
      std::size_t ni = 0, np = 0;
      for (const auto& r : u.records) {
        if (r.label) {
          in += r.occ_up;
          ++ni;
        } else if (r.t_index < *u.onset) {
          pre += r.occ_up;
          ++np;
        }
      }
      lifted += (in / static_cast<double>(ni) > pre / static_cast<double>(np)) ? 1 : 0;
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(lifted), 0.95 * static_cast<double>(total));
}

TEST(Synth, SitesWithDifferentBasesDiffer) {
  SynthConfig a;
  a.n_units = 10;
  SynthConfig b = a;
  b.site_tag = "site_b";
  b.base_vol = 26.0;
  b.base_occ = 0.14;
  const auto ca = assemble_context_vectors(trim_head(generate_dataset(a), {12}), {12});
  const auto cb = assemble_context_vectors(trim_head(generate_dataset(b), {12}), {12});
  // pool both sites through one fixed codebook and compare the means
  const Codebook book{Channel::kVolUp, 6, {std::vector<double>(6, 10.0), std::vector<double>(6, 20.0),
                                           std::vector<double>(6, 30.0)}};
  auto mean_pooled = [&](const std::vector<IntervalContext>& ctx) {
    std::vector<double> m(3, 0.0);
    for (const auto& c : ctx) {
      const auto p = pool_features(book, c.channels[0]);
      for (std::size_t k = 0; k < 3; ++k) m[k] += p[k];
    }
    for (auto& v : m) v /= static_cast<double>(ctx.size());
    return m;
  };
  const auto ma = mean_pooled(ca), mb = mean_pooled(cb);
  double gap = 0.0;
  for (std::size_t k = 0; k < 3; ++k) gap += std::abs(ma[k] - mb[k]);
  EXPECT_GT(gap, 1.0);
}

TEST(Synth, ConfigValidation) {
  SynthConfig cfg;
  cfg.pre_len = 12;
  EXPECT_THROW(cfg.validate(12), ConfigError);
  EXPECT_THROW(generate_dataset(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.inc_occ_lift = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.noise_sd = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.post_len_min = 4;
  cfg.post_len_max = 2;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
