#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "featlab/eval.hpp"
#include "featlab/serialize.hpp"
#include "featlab/synth.hpp"

namespace featlab::cli {

/// Everything a subcommand needs, resolved from the JSON config and flags.
struct RunConfig {
  std::uint64_t seed = 0;
  ExperimentConfig experiment;
  std::vector<PairConfig> pairs{{4, 2}, {8, 8}, {12, 12}};
  SynthConfig synth;

  std::string train_path;
  std::string test_path;
  std::string unlabeled_path;
  std::string data_path;
  std::string codebooks_path;
  std::string model_path;
  std::string out_path;

  /// z >= x for every pair, d <= z+1 per channel, grid and folds sane.
  void validate() const;
};

/// Accepts a run config document or a previously written manifest (its
/// "config" member). Missing keys keep their defaults; unknown keys throw.
RunConfig run_config_from_json(const Json& j);
Json run_config_to_json(const RunConfig& cfg);

/// Exit codes: 0 success, 1 usage/validation/config error, 2 runtime failure.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace featlab::cli
