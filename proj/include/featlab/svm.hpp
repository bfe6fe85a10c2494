#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "featlab/datamodel.hpp"

namespace featlab {

struct SvmHyperparams {
  double c = 1.0;
  double gamma = 1.0;

  void validate() const;
  bool operator==(const SvmHyperparams&) const = default;
};

/// Per-dimension z-score fitted on training rows. Zero-variance dimensions
/// keep a unit scale.
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;

  static Scaler fit(std::span<const FeatureVector> rows);
  FeatureVector transform(std::span<const double> x) const;
  std::size_t dim() const { return means.size(); }
};

struct SvmModel {
  std::vector<FeatureVector> support_vectors;  // in scaled space
  std::vector<double> dual_coefs;              // alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;
  Scaler scaler;

  std::size_t dim() const { return scaler.dim(); }
  /// Sum_i coef_i K(sv_i, scale(x)) + bias.
  double decision_value(std::span<const double> x) const;
  /// Label 1 iff the decision value is strictly positive.
  std::pair<int, double> predict(std::span<const double> x) const;
};

enum class WorkingSetRule {
  /// Maximal violating i plus the partner with the best second-order gain.
  kSecondOrder,
  /// Sweep for the first KKT violator, random partner from the seeded RNG.
  kRandomPartner,
};

struct TrainOptions {
  double tol = 1e-3;
  /// kRandomPartner: consecutive sweeps without an update before stopping.
  /// kSecondOrder: the iteration cap is max_passes * n.
  std::size_t max_passes = 1000;
  WorkingSetRule rule = WorkingSetRule::kSecondOrder;
  std::uint64_t seed = 0;
  /// Record the dual objective after every accepted pair update.
  bool record_dual_trace = false;
};

struct TrainStatus {
  std::size_t iterations = 0;
  /// Largest violation of the margin KKT conditions at the returned solution.
  double kkt_violation = 0.0;
  bool converged = false;
  /// sum(alpha) - 1/2 alpha' Q alpha at the returned solution.
  double dual_objective = 0.0;
  std::vector<double> dual_trace;
};

/// Training set after standardization, with its pairwise squared distances.
/// The distance matrix does not depend on the hyperparameters, so one
/// PreparedTrainingSet serves every grid point.
struct PreparedTrainingSet {
  Scaler scaler;
  std::vector<FeatureVector> rows;  // scaled
  std::vector<int> labels;          // 0/1
  Eigen::MatrixXd sqdist;

  static PreparedTrainingSet build(std::span<const FeatureVector> features,
                                   std::span<const int> labels);
};

/// exp(-gamma |a-b|^2).
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

std::pair<SvmModel, TrainStatus> train_svm(std::span<const FeatureVector> features,
                                           std::span<const int> labels, const SvmHyperparams& hp,
                                           const TrainOptions& opts = {});

std::pair<SvmModel, TrainStatus> train_svm(const PreparedTrainingSet& data, const SvmHyperparams& hp,
                                           const TrainOptions& opts = {});

/// Convenience wrapper over the labeled examples of the datamodel.
std::pair<SvmModel, TrainStatus> train_svm(std::span<const LabeledExample> examples,
                                           const SvmHyperparams& hp, const TrainOptions& opts = {});

}  // namespace featlab
