#include "featlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "featlab/error.hpp"
#include "featlab/rng.hpp"

namespace featlab {
namespace {

// Incident multiplier after `elapsed` incident intervals (0-based).
double ramped(double full, std::size_t elapsed, std::size_t ramp_len) {
  if (ramp_len == 0 || elapsed + 1 >= ramp_len) return full;
  const double progress = static_cast<double>(elapsed + 1) / static_cast<double>(ramp_len);
  return 1.0 + (full - 1.0) * progress;
}

}  // namespace

void SynthConfig::validate(std::size_t z) const {
  if (n_units == 0) throw ConfigError("n_units must be >= 1");
  if (pre_len < z + 1) {
    throw ConfigError("pre_len must be >= z+1 = " + std::to_string(z + 1));
  }
  if (inc_len == 0) throw ConfigError("inc_len must be >= 1");
  if (post_len_min > post_len_max) throw ConfigError("post_len_min exceeds post_len_max");
  if (!(base_vol > 0.0) || !std::isfinite(base_vol)) throw ConfigError("base_vol must be > 0");
  if (!(base_occ > 0.0) || !(base_occ < 1.0)) throw ConfigError("base_occ must be in (0,1)");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be >= 0");
  if (!(inc_occ_lift > 0.0) || !std::isfinite(inc_occ_lift)) {
    throw ConfigError("inc_occ_lift must be > 0");
  }
  if (!(inc_vol_drop > 0.0) || !std::isfinite(inc_vol_drop)) {
    throw ConfigError("inc_vol_drop must be > 0");
  }
  if (!(drift_amp >= 0.0) || !(drift_amp < 1.0)) throw ConfigError("drift_amp must be in [0,1)");
  if (!(drift_period > 0.0)) throw ConfigError("drift_period must be > 0");
}

Dataset generate_dataset(const SynthConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.site_tag = cfg.site_tag;
  ds.units.reserve(cfg.n_units);
  for (std::size_t u = 0; u < cfg.n_units; ++u) {
    Rng rng(derive_seed(cfg.seed, u));
    std::uniform_int_distribution<std::size_t> post(cfg.post_len_min, cfg.post_len_max);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t post_len = post(rng);
    const double phase = phase_dist(rng);
    const std::size_t onset = cfg.pre_len;
    const std::size_t end = onset + cfg.inc_len;
    const std::size_t total = end + post_len;

    auto noisy = [&](double v) {
      if (cfg.noise_sd == 0.0) return v;
      return v * (1.0 + cfg.noise_sd * gauss(rng));
    };

    std::vector<IntervalRecord> records(total);
    for (std::size_t t = 0; t < total; ++t) {
      const double drift =
          1.0 + cfg.drift_amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                                              cfg.drift_period + phase);
      double vol_up = cfg.base_vol * drift;
      double occ_up = cfg.base_occ * drift;
      double vol_down = cfg.base_vol * drift;
      double occ_down = cfg.base_occ * drift;
      const bool incident = t >= onset && t < end;
      if (incident) {
        occ_up *= ramped(cfg.inc_occ_lift, t - onset, cfg.ramp_len);
        vol_down *= ramped(cfg.inc_vol_drop, t - onset, cfg.ramp_len);
      }
      auto& r = records[t];
      r.t_index = t;
      r.vol_up = std::max(0.0, noisy(vol_up));
      r.occ_up = std::clamp(noisy(occ_up), 0.0, 1.0);
      r.vol_down = std::max(0.0, noisy(vol_down));
      r.occ_down = std::clamp(noisy(occ_down), 0.0, 1.0);
      r.label = incident ? 1 : 0;
    }
    char id[32];
    std::snprintf(id, sizeof id, "%04zu", u + 1);
    ds.units.push_back(make_unit(cfg.unit_prefix + id, std::move(records)));
  }
  return ds;
}

}  // namespace featlab
