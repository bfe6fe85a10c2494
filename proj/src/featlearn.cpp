#include "featlab/featlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "featlab/error.hpp"
#include "featlab/parallel.hpp"
#include "featlab/rng.hpp"

namespace featlab {
namespace {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

// Row-major n x d copy of the patches.
struct PointMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;
  const double* row(std::size_t i) const { return data.data() + i * d; }
};

struct RestartResult {
  std::vector<double> centroids;  // K x d
  std::vector<std::size_t> assignment;
  std::vector<double> trace;
  double objective = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
};

std::vector<double> seed_plus_plus(const PointMatrix& pts, std::size_t K, Rng& rng) {
  const std::size_t n = pts.n;
  const std::size_t d = pts.d;
  std::vector<double> centroids;
  centroids.reserve(K * d);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  centroids.insert(centroids.end(), pts.row(first), pts.row(first) + d);

  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(pts.row(i), pts.row(first), d);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 1; k < K; ++k) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (nearest[i] > 0.0 && acc > target) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) {
        // rounding left target past the running sum; take the last candidate
        for (std::size_t i = n; i-- > 0;) {
          if (nearest[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
    } else {
      chosen = pick(rng);
    }
    centroids.insert(centroids.end(), pts.row(chosen), pts.row(chosen) + d);
    const double* c = centroids.data() + k * d;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(pts.row(i), c, d));
    }
  }
  return centroids;
}

// Nearest centroid per point, ties to the lowest index. Returns the objective.
double assign_points(const PointMatrix& pts, const std::vector<double>& centroids, std::size_t K,
                     std::vector<std::size_t>& assignment, std::vector<double>& dist,
                     std::size_t& changed) {
  changed = 0;
  double objective = 0.0;
  for (std::size_t i = 0; i < pts.n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      const double dk = squared_distance(pts.row(i), centroids.data() + k * pts.d, pts.d);
      if (dk < best_d) {
        best_d = dk;
        best = k;
      }
    }
    if (assignment[i] != best) ++changed;
    assignment[i] = best;
    dist[i] = best_d;
    objective += best_d;
  }
  return objective;
}

// Moves centroids to cluster means; empty clusters take the farthest point.
void update_centroids(const PointMatrix& pts, std::size_t K,
                      const std::vector<std::size_t>& assignment, const std::vector<double>& dist,
                      std::vector<double>& centroids) {
  const std::size_t d = pts.d;
  std::vector<double> sums(K * d, 0.0);
  std::vector<std::size_t> counts(K, 0);
  for (std::size_t i = 0; i < pts.n; ++i) {
    const std::size_t k = assignment[i];
    ++counts[k];
    const double* p = pts.row(i);
    for (std::size_t j = 0; j < d; ++j) sums[k * d + j] += p[j];
  }
  std::vector<bool> used(pts.n, false);
  for (std::size_t k = 0; k < K; ++k) {
    if (counts[k] > 0) {
      for (std::size_t j = 0; j < d; ++j) {
        centroids[k * d + j] = sums[k * d + j] / static_cast<double>(counts[k]);
      }
      continue;
    }
    std::size_t far = pts.n;
    for (std::size_t i = 0; i < pts.n; ++i) {
      if (!used[i] && (far == pts.n || dist[i] > dist[far])) far = i;
    }
    used[far] = true;
    std::copy(pts.row(far), pts.row(far) + d, centroids.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
}

RestartResult run_restart(const PointMatrix& pts, std::size_t K, const KMeansConfig& cfg,
                          std::uint64_t seed) {
  Rng rng(seed);
  RestartResult r;
  r.centroids = seed_plus_plus(pts, K, rng);
  r.assignment.assign(pts.n, K);  // K marks "unassigned" so the first pass counts as changed
  std::vector<double> dist(pts.n);

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    std::size_t changed = 0;
    const double obj = assign_points(pts, r.centroids, K, r.assignment, dist, changed);
    r.trace.push_back(obj);
    r.iterations = iter;
    const bool no_change = changed == 0;
    const bool small_step = std::isfinite(prev) && (prev - obj) <= cfg.rel_tol * prev;
    update_centroids(pts, K, r.assignment, dist, r.centroids);
    if (no_change || small_step) break;
    prev = obj;
  }

  r.objective = 0.0;
  for (std::size_t i = 0; i < pts.n; ++i) {
    r.objective += squared_distance(pts.row(i), r.centroids.data() + r.assignment[i] * pts.d, pts.d);
  }
  return r;
}

}  // namespace

void Codebook::validate() const {
  if (centroids.empty()) throw ValidationError("codebook has no centroids");
  if (d == 0) throw ValidationError("codebook dimension is zero");
  for (const auto& c : centroids) {
    if (c.size() != d) throw ValidationError("codebook centroid has wrong dimension");
    for (double v : c) {
      if (!std::isfinite(v)) throw ValidationError("codebook centroid is not finite");
    }
  }
}

void KMeansConfig::validate() const {
  if (restarts < 1) throw ConfigError("kmeans restarts must be >= 1");
  if (max_iters < 1) throw ConfigError("kmeans max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw ConfigError("kmeans rel_tol must be > 0");
}

std::vector<Patch> sample_patches(std::span<const ContextVector> vectors, const PatchConfig& cfg) {
  if (vectors.empty()) throw ValidationError("no context vectors to sample patches from");
  const std::size_t len = vectors.front().values.size();
  const Channel ch = vectors.front().channel;
  for (const auto& v : vectors) {
    if (v.values.size() != len) throw DimensionError("context vectors differ in length");
    if (v.channel != ch) throw ValidationError("context vectors mix channels");
  }
  if (cfg.d == 0 || cfg.d > len) {
    throw ConfigError("patch size " + std::to_string(cfg.d) + " must be in [1, " +
                      std::to_string(len) + "]");
  }
  Rng rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> which(0, vectors.size() - 1);
  std::uniform_int_distribution<std::size_t> offset(0, len - cfg.d);
  std::vector<Patch> out;
  out.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const auto& src = vectors[which(rng)].values;
    const std::size_t s = offset(rng);
    out.emplace_back(src.begin() + static_cast<std::ptrdiff_t>(s),
                     src.begin() + static_cast<std::ptrdiff_t>(s + cfg.d));
  }
  return out;
}

KMeansResult kmeans_fit(std::span<const Patch> patches, std::size_t K, const KMeansConfig& cfg,
                        Channel channel) {
  cfg.validate();
  if (K == 0) throw ConfigError("K must be >= 1");
  if (patches.size() < K) {
    throw ValidationError("kmeans needs at least K=" + std::to_string(K) + " patches, got " +
                          std::to_string(patches.size()));
  }
  PointMatrix pts;
  pts.n = patches.size();
  pts.d = patches.front().size();
  if (pts.d == 0) throw DimensionError("patches are empty");
  pts.data.reserve(pts.n * pts.d);
  for (const auto& p : patches) {
    if (p.size() != pts.d) throw DimensionError("patches differ in dimension");
    for (double v : p) {
      if (!std::isfinite(v)) throw ValidationError("patch contains a non-finite value");
    }
    pts.data.insert(pts.data.end(), p.begin(), p.end());
  }

  std::vector<RestartResult> runs(cfg.restarts);
  parallel_for(cfg.restarts,
               [&](std::size_t r) { runs[r] = run_restart(pts, K, cfg, derive_seed(cfg.seed, r)); });

  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].objective < runs[best].objective) best = r;
  }

  RestartResult& win = runs[best];
  KMeansResult out;
  out.codebook.channel = channel;
  out.codebook.d = pts.d;
  out.codebook.centroids.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    out.codebook.centroids[k].assign(win.centroids.begin() + static_cast<std::ptrdiff_t>(k * pts.d),
                                     win.centroids.begin() + static_cast<std::ptrdiff_t>((k + 1) * pts.d));
  }
  out.objective = win.objective;
  out.iterations = win.iterations;
  out.best_restart = best;
  out.objective_trace = std::move(win.trace);
  out.assignment = std::move(win.assignment);
  return out;
}

std::vector<double> encode_triangle(const Codebook& cb, std::span<const double> x) {
  if (x.size() != cb.d) {
    throw DimensionError("patch dimension " + std::to_string(x.size()) +
                         " does not match codebook dimension " + std::to_string(cb.d));
  }
  const std::size_t K = cb.K();
  std::vector<double> tau(K);
  double mean = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    tau[k] = std::sqrt(squared_distance(x.data(), cb.centroids[k].data(), cb.d));
    mean += tau[k];
  }
  mean /= static_cast<double>(K);
  for (auto& t : tau) t = std::max(0.0, mean - t);
  return tau;
}

std::vector<double> pool_features(const Codebook& cb, const ContextVector& ctx) {
  if (ctx.channel != cb.channel) {
    throw ValidationError("context channel " + std::string(channel_name(ctx.channel)) +
                          " does not match codebook channel " +
                          std::string(channel_name(cb.channel)));
  }
  if (cb.d == 0 || cb.d > ctx.values.size()) {
    throw DimensionError("codebook patch size " + std::to_string(cb.d) +
                         " exceeds context length " + std::to_string(ctx.values.size()));
  }
  std::vector<double> pooled(cb.K(), 0.0);
  const std::span<const double> values(ctx.values);
  for (std::size_t s = 0; s + cb.d <= values.size(); ++s) {
    const auto act = encode_triangle(cb, values.subspan(s, cb.d));
    for (std::size_t k = 0; k < pooled.size(); ++k) pooled[k] += act[k];
  }
  return pooled;
}

FeatureVector build_enhanced(std::span<const double> raw, const std::array<ContextVector, 4>& ctxs,
                             const std::array<Codebook, 4>& cbs) {
  FeatureVector out(raw.begin(), raw.end());
  for (Channel ch : kAllChannels) {
    const auto i = static_cast<std::size_t>(ch);
    if (cbs[i].channel != ch || ctxs[i].channel != ch) {
      throw ValidationError("codebooks and contexts must be ordered vol_up, occ_up, vol_down, "
                            "occ_down");
    }
    const auto pooled = pool_features(cbs[i], ctxs[i]);
    out.insert(out.end(), pooled.begin(), pooled.end());
  }
  return out;
}

std::size_t FeatureLearnConfig::total_centroids() const {
  std::size_t total = 0;
  for (const auto& c : channels) total += c.K;
  return total;
}

void FeatureLearnConfig::validate(std::size_t z) const {
  kmeans.validate();
  for (Channel ch : kAllChannels) {
    const auto& c = channels[static_cast<std::size_t>(ch)];
    const std::string name(channel_name(ch));
    if (c.K == 0) throw ConfigError(name + ": K must be >= 1");
    if (c.d == 0 || c.d > z + 1) {
      throw ConfigError(name + ": patch size " + std::to_string(c.d) + " must be in [1, z+1=" +
                        std::to_string(z + 1) + "]");
    }
    if (c.n < c.K) throw ConfigError(name + ": need at least K patches");
  }
}

std::array<Codebook, 4> learn_codebooks(const std::vector<IntervalContext>& contexts,
                                        const FeatureLearnConfig& cfg, std::uint64_t seed) {
  if (contexts.empty()) throw ValidationError("no unlabeled context vectors for feature learning");
  cfg.validate(contexts.front().channels[0].values.size() - 1);
  std::array<Codebook, 4> out;
  parallel_for(4, [&](std::size_t c) {
    const Channel ch = kAllChannels[c];
    const auto& lc = cfg.channels[c];
    const auto corpus = channel_corpus(contexts, ch);
    const auto patches = sample_patches(corpus, {lc.d, lc.n, derive_seed(seed, 1 + c)});
    KMeansConfig km = cfg.kmeans;
    km.seed = derive_seed(seed, 5 + c);
    out[c] = kmeans_fit(patches, lc.K, km, ch).codebook;
  });
  return out;
}

}  // namespace featlab
