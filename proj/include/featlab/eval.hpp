#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "featlab/datamodel.hpp"
#include "featlab/featlearn.hpp"
#include "featlab/svm.hpp"

namespace featlab {

struct AlarmSeries {
  std::string unit_id;
  std::vector<int> alarms;
};

/// Ground-truth labels of one unit's evaluated intervals.
struct LabeledSeries {
  std::string unit_id;
  std::vector<int> labels;
};

struct Metrics {
  std::size_t pt = 0;
  double dr = 0.0;
  double far = 0.0;
  /// Mean detection delay in intervals; absent when nothing was detected.
  std::optional<double> mttd;
  double pi = 0.0;
  double cr = 0.0;
  /// PI used the longest incident window in place of a missing MTTD.
  bool mttd_substituted = false;

  std::size_t incidents = 0;
  std::size_t detected = 0;
  std::size_t false_alarms = 0;
  std::size_t intervals = 0;
};

/// Alarm at t iff classifications t-pt..t are all positive. The run counter
/// is oblivious to labels, so a run straddling onset counts.
std::vector<int> persistence_filter(std::span<const int> classifications, std::size_t pt);

/// Interval-based FAR, 1-based detection delay, CR as alarm/label agreement.
/// PI follows compute_pi; when no incident is detected the longest incident
/// window of `units` stands in for MTTD. Throws DimensionError when a series
/// is misaligned with its unit.
Metrics compute_metrics(std::span<const AlarmSeries> alarms, std::span<const LabeledSeries> units,
                        std::size_t pt);
Metrics compute_metrics(std::span<const AlarmSeries> alarms, const Dataset& units, std::size_t pt);

/// (1.01 - dr) (far + 0.001) mttd. Throws RangeError for dr or far outside
/// [0,1] or a negative/non-finite mttd.
double compute_pi(double dr, double far, double mttd);

/// Examples of one unit, in interval order.
struct UnitExamples {
  std::string unit_id;
  std::vector<FeatureVector> features;
  std::vector<int> labels;
};

struct GridScore {
  SvmHyperparams hp;
  double mean_pi = 0.0;
  double mean_far = 0.0;
  double mean_mttd = 0.0;
};

struct CvResult {
  SvmHyperparams best_hyperparams;
  double cv_pi = 0.0;
  /// unit_id -> fold, in input unit order.
  std::vector<std::pair<std::string, std::size_t>> fold_assignments;
  std::vector<GridScore> scores;  // grid order
};

struct CvOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 0;
  TrainOptions train;
};

/// Shuffles units with the seeded RNG, deals them round-robin into folds,
/// and scores every grid point by mean held-out PI at pt=0. Ties break by
/// lower mean FAR, then lower mean MTTD, then grid order.
CvResult cross_validate(std::span<const UnitExamples> units, std::span<const SvmHyperparams> grid,
                        const CvOptions& opts);

/// c in 2^-3..2^7, gamma in 2^-9..2^1, powers of two, c-major order.
std::vector<SvmHyperparams> default_grid();

enum class FeatureMode { kRaw, kEnhanced, kTransferEnhanced };

std::string_view mode_name(FeatureMode mode);
/// Throws ConfigError on an unknown name.
FeatureMode parse_mode(std::string_view name);

struct ExperimentConfig {
  PreprocessConfig pre;
  PairConfig pair;
  FeatureMode mode = FeatureMode::kRaw;
  FeatureLearnConfig learn;
  std::vector<SvmHyperparams> grid = default_grid();
  std::size_t folds = 10;
  std::vector<std::size_t> pt_levels{0, 1, 2};
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  TrainOptions train;

  /// Cross-field checks; throws ConfigError.
  void validate() const;
  /// Seed of repeat r.
  std::uint64_t repeat_seed(std::size_t r) const { return seed + r; }
};

/// Per-unit features for an already trimmed dataset. With codebooks, each
/// raw vector is enhanced with the pooled activations of its context.
std::vector<UnitExamples> build_unit_examples(const Dataset& ds, const PreprocessConfig& pre,
                                              const PairConfig& pair,
                                              const std::array<Codebook, 4>* codebooks);

/// Classifies every interval, applies each persistence level, scores.
std::vector<Metrics> evaluate_model(const SvmModel& model, std::span<const UnitExamples> units,
                                    std::span<const std::size_t> pt_levels);

struct RepeatResult {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  SvmHyperparams best;
  double cv_pi = 0.0;
  std::size_t support_vectors = 0;
  std::vector<Metrics> metrics;  // one per pt level
};

struct MetricSummary {
  std::size_t pt = 0;
  double dr_mean = 0.0, dr_std = 0.0;
  double far_mean = 0.0, far_std = 0.0;
  std::optional<double> mttd_mean, mttd_std;
  double pi_mean = 0.0, pi_std = 0.0;
  double cr_mean = 0.0, cr_std = 0.0;
};

struct ExperimentReport {
  FeatureMode mode = FeatureMode::kRaw;
  PairConfig pair;
  std::size_t feature_dim = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::vector<RepeatResult> runs;
  std::vector<MetricSummary> summary;  // one per pt level
};

/// Sample mean and standard deviation of every metric across runs.
std::vector<MetricSummary> summarize(std::span<const RepeatResult> runs,
                                     std::span<const std::size_t> pt_levels);

/// Runs the repeated train/select/test protocol on trimmed datasets.
/// kEnhanced learns codebooks from `train` with labels ignored;
/// kTransferEnhanced learns them from `unlabeled`, which must carry a
/// different site_tag than `train`.
ExperimentReport run_experiment(const Dataset& train, const Dataset& test,
                                const Dataset* unlabeled, const ExperimentConfig& cfg);

/// One raw-feature experiment per pair, all else from cfg.
std::vector<ExperimentReport> run_pair_grid(const Dataset& train, const Dataset& test,
                                            std::span<const PairConfig> pairs,
                                            const ExperimentConfig& cfg);

}  // namespace featlab
