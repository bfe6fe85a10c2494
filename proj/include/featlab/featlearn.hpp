#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "featlab/datamodel.hpp"

namespace featlab {

struct PatchConfig {
  std::size_t d = 11;
  std::size_t n = 20000;
  std::uint64_t seed = 0;
};

using Patch = std::vector<double>;

/// K learned centroids of dimension d for one channel.
struct Codebook {
  Channel channel = Channel::kVolUp;
  std::size_t d = 0;
  std::vector<std::vector<double>> centroids;

  std::size_t K() const { return centroids.size(); }
  /// Throws ValidationError on an empty, ragged or non-finite codebook.
  void validate() const;
  bool operator==(const Codebook&) const = default;
};

struct KMeansConfig {
  std::size_t restarts = 1;
  std::size_t max_iters = 300;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct KMeansResult {
  Codebook codebook;
  /// Within-cluster sum of squared distances of the returned codebook.
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t best_restart = 0;
  /// Objective after each assignment step of the winning restart.
  std::vector<double> objective_trace;
  std::vector<std::size_t> assignment;
};

/// Samples cfg.n contiguous windows of length cfg.d, drawing (vector, offset)
/// uniformly with replacement. All vectors must share one channel and length.
std::vector<Patch> sample_patches(std::span<const ContextVector> vectors, const PatchConfig& cfg);

/// Lloyd's algorithm with k-means++ seeding. Each restart r is seeded from
/// derive_seed(cfg.seed, r); the lowest objective wins, ties to the lower
/// restart index. An iteration stops the run when no assignment changes, the
/// relative objective decrease drops below rel_tol, or max_iters is reached.
/// A cluster left empty is re-seeded at the point farthest from its centroid.
KMeansResult kmeans_fit(std::span<const Patch> patches, std::size_t K, const KMeansConfig& cfg,
                        Channel channel = Channel::kVolUp);

/// Triangle activation: f_k = max(0, mean(tau) - tau_k), tau_k = |x - c_k|.
std::vector<double> encode_triangle(const Codebook& cb, std::span<const double> x);

/// Sum of encode_triangle over every stride-1 window of length cb.d.
std::vector<double> pool_features(const Codebook& cb, const ContextVector& ctx);

/// raw ++ pooled(vol_up) ++ pooled(occ_up) ++ pooled(vol_down) ++ pooled(occ_down).
/// Codebooks and contexts are indexed by Channel.
FeatureVector build_enhanced(std::span<const double> raw, const std::array<ContextVector, 4>& ctxs,
                             const std::array<Codebook, 4>& cbs);

struct ChannelLearnConfig {
  std::size_t K = 75;
  std::size_t d = 11;
  std::size_t n = 20000;
};

/// Per-channel learning setup, indexed by Channel.
struct FeatureLearnConfig {
  std::array<ChannelLearnConfig, 4> channels{
      ChannelLearnConfig{75, 11, 20000}, ChannelLearnConfig{15, 6, 20000},
      ChannelLearnConfig{75, 11, 20000}, ChannelLearnConfig{15, 6, 20000}};
  KMeansConfig kmeans;

  std::size_t total_centroids() const;
  /// Cross-field checks against the context length z+1.
  void validate(std::size_t z) const;
};

/// Samples patches and fits one codebook per channel from unlabeled
/// context vectors. Channel c uses patch seed derive_seed(seed, 1 + c) and
/// k-means seed derive_seed(seed, 5 + c).
std::array<Codebook, 4> learn_codebooks(const std::vector<IntervalContext>& contexts,
                                        const FeatureLearnConfig& cfg, std::uint64_t seed);

}  // namespace featlab
