#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "featlab/eval.hpp"
#include "featlab/featlearn.hpp"
#include "featlab/svm.hpp"
#include "featlab/synth.hpp"

namespace featlab {

using Json = nlohmann::json;

// Doubles are written in shortest round-trip form, so every to_json /
// from_json pair below reproduces values bit-exactly.

Json codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(const Json& j);

/// {"codebooks": [vol_up, occ_up, vol_down, occ_down]}
Json codebooks_to_json(const std::array<Codebook, 4>& cbs);
std::array<Codebook, 4> codebooks_from_json(const Json& j);

/// {gamma, bias, scaler_means, scaler_stds, support_vectors, dual_coefs}
Json model_to_json(const SvmModel& model);
SvmModel model_from_json(const Json& j);

/// Missing keys keep their defaults; unknown keys are rejected.
Json synth_config_to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const Json& j);

Json metrics_to_json(const Metrics& m);
Json report_to_json(const ExperimentReport& report);

/// Header plus one row per (report, pt level):
/// mode,pair,pt,dr_mean,dr_std,far_mean,far_std,mttd_mean,mttd_std,
/// pi_mean,pi_std,cr_mean,cr_std,feature_dim
void write_report_csv(std::ostream& out, std::span<const ExperimentReport> reports);
std::string report_csv(std::span<const ExperimentReport> reports);

/// Reads and parses a JSON file; throws InputError naming the path.
Json read_json_file(const std::filesystem::path& path);

/// Writes to a temporary sibling then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// FNV-1a 64-bit digest, lower-case hex.
std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

}  // namespace featlab
