#include "featlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "featlab/error.hpp"
#include "featlab/parallel.hpp"
#include "featlab/rng.hpp"

namespace featlab {
namespace {

std::size_t longest_window(std::span<const LabeledSeries> units) {
  std::size_t best = 0;
  for (const auto& u : units) {
    best = std::max<std::size_t>(best, static_cast<std::size_t>(
                                           std::count(u.labels.begin(), u.labels.end(), 1)));
  }
  return best;
}

std::vector<LabeledSeries> label_series(const Dataset& ds) {
  std::vector<LabeledSeries> out;
  out.reserve(ds.units.size());
  for (const auto& u : ds.units) {
    LabeledSeries s;
    s.unit_id = u.unit_id;
    s.labels.reserve(u.size());
    for (const auto& r : u.records) s.labels.push_back(r.label);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabeledSeries> label_series(std::span<const UnitExamples> units) {
  std::vector<LabeledSeries> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back({u.unit_id, u.labels});
  return out;
}

std::vector<int> classify(const SvmModel& model, const UnitExamples& unit) {
  std::vector<int> out;
  out.reserve(unit.features.size());
  for (const auto& x : unit.features) out.push_back(model.predict(x).first);
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<int> persistence_filter(std::span<const int> classifications, std::size_t pt) {
  std::vector<int> out(classifications.size(), 0);
  std::size_t run = 0;
  for (std::size_t t = 0; t < classifications.size(); ++t) {
    run = classifications[t] ? run + 1 : 0;
    out[t] = run >= pt + 1 ? 1 : 0;
  }
  return out;
}

double compute_pi(double dr, double far, double mttd) {
  if (!(dr >= 0.0 && dr <= 1.0)) throw RangeError("DR must be in [0,1]");
  if (!(far >= 0.0 && far <= 1.0)) throw RangeError("FAR must be in [0,1]");
  if (!(mttd >= 0.0) || !std::isfinite(mttd)) throw RangeError("MTTD must be finite and >= 0");
  // (1.01 - dr)(far + 0.001) mttd with both factors scaled to integers
  // first, so exact inputs such as dr=1, far=0 give exact results.
  return (101.0 - 100.0 * dr) * (1000.0 * far + 1.0) * mttd / 1e5;
}

Metrics compute_metrics(std::span<const AlarmSeries> alarms, std::span<const LabeledSeries> units,
                        std::size_t pt) {
  if (alarms.size() != units.size()) {
    throw DimensionError("got alarm series for " + std::to_string(alarms.size()) + " units, expected " +
                         std::to_string(units.size()));
  }
  Metrics m;
  m.pt = pt;
  std::size_t agree = 0;
  double delay_sum = 0.0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto& a = alarms[u].alarms;
    const auto& l = units[u].labels;
    if (alarms[u].unit_id != units[u].unit_id || a.size() != l.size()) {
      throw DimensionError("alarm series for unit '" + alarms[u].unit_id +
                           "' is not aligned with unit '" + units[u].unit_id + "'");
    }
    std::optional<std::size_t> onset;
    std::optional<std::size_t> first_hit;
    for (std::size_t t = 0; t < l.size(); ++t) {
      if (l[t] == 1) {
        if (!onset) onset = t;
        if (a[t] && !first_hit) first_hit = t;
      } else if (a[t]) {
        ++m.false_alarms;
      }
      if ((a[t] != 0) == (l[t] == 1)) ++agree;
    }
    m.intervals += l.size();
    if (onset) {
      ++m.incidents;
      if (first_hit) {
        ++m.detected;
        delay_sum += static_cast<double>(*first_hit - *onset + 1);
      }
    }
  }
  m.dr = m.incidents ? static_cast<double>(m.detected) / static_cast<double>(m.incidents) : 0.0;
  m.far = m.intervals ? static_cast<double>(m.false_alarms) / static_cast<double>(m.intervals) : 0.0;
  m.cr = m.intervals ? static_cast<double>(agree) / static_cast<double>(m.intervals) : 0.0;
  if (m.detected) m.mttd = delay_sum / static_cast<double>(m.detected);

  double mttd_for_pi = 0.0;
  if (m.mttd) {
    mttd_for_pi = *m.mttd;
  } else {
    mttd_for_pi = static_cast<double>(std::max<std::size_t>(1, longest_window(units)));
    m.mttd_substituted = true;
  }
  m.pi = compute_pi(m.dr, m.far, mttd_for_pi);
  return m;
}

Metrics compute_metrics(std::span<const AlarmSeries> alarms, const Dataset& units, std::size_t pt) {
  const auto series = label_series(units);
  return compute_metrics(alarms, series, pt);
}

std::vector<SvmHyperparams> default_grid() {
  std::vector<SvmHyperparams> grid;
  for (int c = -3; c <= 7; ++c) {
    for (int g = -9; g <= 1; ++g) grid.push_back({std::ldexp(1.0, c), std::ldexp(1.0, g)});
  }
  return grid;
}

CvResult cross_validate(std::span<const UnitExamples> units, std::span<const SvmHyperparams> grid,
                        const CvOptions& opts) {
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  if (opts.folds < 2) throw ConfigError("cross validation needs at least 2 folds");
  if (units.size() < opts.folds) {
    throw ValidationError("cross validation needs at least " + std::to_string(opts.folds) +
                          " units, got " + std::to_string(units.size()));
  }
  for (const auto& hp : grid) hp.validate();

  std::vector<std::size_t> perm(units.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(opts.seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold_of(units.size());
  for (std::size_t k = 0; k < perm.size(); ++k) fold_of[perm[k]] = k % opts.folds;

  struct Cell {
    double pi = 0.0;
    double far = 0.0;
    double mttd = 0.0;
  };
  std::vector<std::vector<Cell>> cells(opts.folds, std::vector<Cell>(grid.size()));

  parallel_for(opts.folds, [&](std::size_t f) {
    std::vector<FeatureVector> x;
    std::vector<int> y;
    std::vector<UnitExamples> held;
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (fold_of[u] == f) {
        held.push_back(units[u]);
        continue;
      }
      x.insert(x.end(), units[u].features.begin(), units[u].features.end());
      y.insert(y.end(), units[u].labels.begin(), units[u].labels.end());
    }
    const auto prepared = PreparedTrainingSet::build(x, y);
    x.clear();
    const auto truth = label_series(held);
    const double fallback = static_cast<double>(std::max<std::size_t>(1, longest_window(truth)));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      TrainOptions topts = opts.train;
      topts.seed = derive_seed(opts.train.seed, f * grid.size() + g);
      const auto model = train_svm(prepared, grid[g], topts).first;
      std::vector<AlarmSeries> alarms;
      alarms.reserve(held.size());
      for (const auto& u : held) alarms.push_back({u.unit_id, classify(model, u)});
      const Metrics m = compute_metrics(alarms, truth, 0);
      cells[f][g] = {m.pi, m.far, m.mttd.value_or(fallback)};
    }
  });

  CvResult out;
  out.fold_assignments.reserve(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) out.fold_assignments.emplace_back(units[u].unit_id, fold_of[u]);
  const double nf = static_cast<double>(opts.folds);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridScore s;
    s.hp = grid[g];
    for (std::size_t f = 0; f < opts.folds; ++f) {
      s.mean_pi += cells[f][g].pi;
      s.mean_far += cells[f][g].far;
      s.mean_mttd += cells[f][g].mttd;
    }
    s.mean_pi /= nf;
    s.mean_far /= nf;
    s.mean_mttd /= nf;
    out.scores.push_back(s);
  }
  const auto better = [](const GridScore& a, const GridScore& b) {
    if (a.mean_pi != b.mean_pi) return a.mean_pi < b.mean_pi;
    if (a.mean_far != b.mean_far) return a.mean_far < b.mean_far;
    return a.mean_mttd < b.mean_mttd;
  };
  std::size_t best = 0;
  for (std::size_t g = 1; g < out.scores.size(); ++g) {
    if (better(out.scores[g], out.scores[best])) best = g;
  }
  out.best_hyperparams = out.scores[best].hp;
  out.cv_pi = out.scores[best].mean_pi;
  return out;
}

std::string_view mode_name(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::kRaw: return "raw";
    case FeatureMode::kEnhanced: return "enhanced";
    case FeatureMode::kTransferEnhanced: return "transfer-enhanced";
  }
  return "?";
}

FeatureMode parse_mode(std::string_view name) {
  for (auto m : {FeatureMode::kRaw, FeatureMode::kEnhanced, FeatureMode::kTransferEnhanced}) {
    if (mode_name(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) +
                    "', expected raw, enhanced or transfer-enhanced");
}

void ExperimentConfig::validate() const {
  pair.validate(pre.z);
  if (mode != FeatureMode::kRaw) learn.validate(pre.z);
  if (grid.empty()) throw ConfigError("hyperparameter grid is empty");
  for (const auto& hp : grid) hp.validate();
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (pt_levels.empty()) throw ConfigError("pt_levels is empty");
  if (!(train.tol > 0.0)) throw ConfigError("SMO tolerance must be > 0");
}

std::vector<UnitExamples> build_unit_examples(const Dataset& ds, const PreprocessConfig& pre,
                                              const PairConfig& pair,
                                              const std::array<Codebook, 4>* codebooks) {
  auto raw = assemble_raw_features(ds, pair);
  std::vector<IntervalContext> contexts;
  if (codebooks) contexts = assemble_context_vectors(ds, pre);

  std::vector<UnitExamples> out;
  out.reserve(ds.units.size());
  std::size_t k = 0;
  for (const auto& unit : ds.units) {
    UnitExamples ue;
    ue.unit_id = unit.unit_id;
    ue.features.resize(unit.size());
    ue.labels.reserve(unit.size());
    for (std::size_t t = 0; t < unit.size(); ++t) ue.labels.push_back(raw[k + t].label);
    parallel_for(unit.size(), [&](std::size_t t) {
      ue.features[t] = codebooks ? build_enhanced(raw[k + t].features, contexts[k + t].channels, *codebooks)
                                 : std::move(raw[k + t].features);
    });
    k += unit.size();
    out.push_back(std::move(ue));
  }
  return out;
}

std::vector<Metrics> evaluate_model(const SvmModel& model, std::span<const UnitExamples> units,
                                    std::span<const std::size_t> pt_levels) {
  std::vector<std::vector<int>> classes(units.size());
  parallel_for(units.size(), [&](std::size_t u) { classes[u] = classify(model, units[u]); });
  const auto truth = label_series(units);
  std::vector<Metrics> out;
  for (std::size_t pt : pt_levels) {
    std::vector<AlarmSeries> alarms;
    alarms.reserve(units.size());
    for (std::size_t u = 0; u < units.size(); ++u) {
      alarms.push_back({units[u].unit_id, persistence_filter(classes[u], pt)});
    }
    out.push_back(compute_metrics(alarms, truth, pt));
  }
  return out;
}

std::vector<MetricSummary> summarize(std::span<const RepeatResult> runs,
                                     std::span<const std::size_t> pt_levels) {
  std::vector<MetricSummary> out;
  for (std::size_t p = 0; p < pt_levels.size(); ++p) {
    std::vector<double> dr, far, mttd, pi, cr;
    for (const auto& r : runs) {
      const Metrics& m = r.metrics.at(p);
      dr.push_back(m.dr);
      far.push_back(m.far);
      if (m.mttd) mttd.push_back(*m.mttd);
      pi.push_back(m.pi);
      cr.push_back(m.cr);
    }
    MetricSummary s;
    s.pt = pt_levels[p];
    s.dr_mean = mean_of(dr);
    s.dr_std = sample_std(dr);
    s.far_mean = mean_of(far);
    s.far_std = sample_std(far);
    if (!mttd.empty()) {
      s.mttd_mean = mean_of(mttd);
      s.mttd_std = sample_std(mttd);
    }
    s.pi_mean = mean_of(pi);
    s.pi_std = sample_std(pi);
    s.cr_mean = mean_of(cr);
    s.cr_std = sample_std(cr);
    out.push_back(s);
  }
  return out;
}

ExperimentReport run_experiment(const Dataset& train, const Dataset& test,
                                const Dataset* unlabeled, const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset* feature_source = nullptr;
  if (cfg.mode == FeatureMode::kEnhanced) {
    feature_source = &train;
  } else if (cfg.mode == FeatureMode::kTransferEnhanced) {
    if (!unlabeled) throw ConfigError("transfer-enhanced mode needs an unlabeled dataset");
    if (unlabeled->site_tag == train.site_tag) {
      throw ConfigError("transfer-enhanced mode needs unlabeled data from a different site than '" +
                        train.site_tag + "'");
    }
    feature_source = unlabeled;
  }

  ExperimentReport report;
  report.mode = cfg.mode;
  report.pair = cfg.pair;
  report.repeats = cfg.repeats;
  report.seed = cfg.seed;
  report.feature_dim = cfg.pair.dimension() + (feature_source ? cfg.learn.total_centroids() : 0);

  std::vector<IntervalContext> source_contexts;
  if (feature_source) source_contexts = assemble_context_vectors(*feature_source, cfg.pre);

  for (std::size_t r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t seed = cfg.repeat_seed(r);
    std::optional<std::array<Codebook, 4>> codebooks;
    if (feature_source) codebooks = learn_codebooks(source_contexts, cfg.learn, derive_seed(seed, 1));
    const auto* cbs = codebooks ? &*codebooks : nullptr;
    const auto train_units = build_unit_examples(train, cfg.pre, cfg.pair, cbs);
    const auto test_units = build_unit_examples(test, cfg.pre, cfg.pair, cbs);

    CvOptions cv_opts;
    cv_opts.folds = cfg.folds;
    cv_opts.seed = derive_seed(seed, 2);
    cv_opts.train = cfg.train;
    cv_opts.train.seed = derive_seed(seed, 3);
    const CvResult cv = cross_validate(train_units, cfg.grid, cv_opts);

    std::vector<FeatureVector> x;
    std::vector<int> y;
    for (const auto& u : train_units) {
      x.insert(x.end(), u.features.begin(), u.features.end());
      y.insert(y.end(), u.labels.begin(), u.labels.end());
    }
    TrainOptions final_opts = cfg.train;
    final_opts.seed = derive_seed(seed, 4);
    const auto model = train_svm(x, y, cv.best_hyperparams, final_opts).first;

    RepeatResult rr;
    rr.repeat = r;
    rr.seed = seed;
    rr.best = cv.best_hyperparams;
    rr.cv_pi = cv.cv_pi;
    rr.support_vectors = model.support_vectors.size();
    rr.metrics = evaluate_model(model, test_units, cfg.pt_levels);
    report.runs.push_back(std::move(rr));
  }
  report.summary = summarize(report.runs, cfg.pt_levels);
  return report;
}

std::vector<ExperimentReport> run_pair_grid(const Dataset& train, const Dataset& test,
                                            std::span<const PairConfig> pairs,
                                            const ExperimentConfig& cfg) {
  if (pairs.empty()) throw ConfigError("no pairs given");
  for (const auto& p : pairs) p.validate(cfg.pre.z);
  std::vector<ExperimentReport> out;
  for (const auto& p : pairs) {
    ExperimentConfig c = cfg;
    c.mode = FeatureMode::kRaw;
    c.pair = p;
    out.push_back(run_experiment(train, test, nullptr, c));
  }
  return out;
}

}  // namespace featlab
