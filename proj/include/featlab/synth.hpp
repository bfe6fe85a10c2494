#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "featlab/datamodel.hpp"

namespace featlab {

/// Phenomenological incident-unit generator. Each unit has pre_len normal
/// intervals, inc_len incident intervals and a post_len tail drawn
/// uniformly from [post_len_min, post_len_max].
struct SynthConfig {
  std::size_t n_units = 52;
  std::size_t pre_len = 60;
  std::size_t inc_len = 30;
  std::size_t post_len_min = 0;
  std::size_t post_len_max = 5;
  double base_vol = 18.0;   // vehicles per interval
  double base_occ = 0.10;   // occupancy fraction
  double noise_sd = 0.10;   // relative, multiplicative
  double inc_occ_lift = 2.0;
  double inc_vol_drop = 0.6;
  std::size_t ramp_len = 3;
  double drift_amp = 0.10;  // relative amplitude of the slow sinusoid
  double drift_period = 120.0;
  std::string site_tag = "site_a";
  std::string unit_prefix = "u";
  std::uint64_t seed = 0;

  /// Throws ConfigError. `z` is the head-trim depth the data must survive.
  void validate(std::size_t z = 12) const;
};

/// Deterministic in cfg. Unit i draws from derive_seed(cfg.seed, i).
Dataset generate_dataset(const SynthConfig& cfg);

}  // namespace featlab
