#include "featlab/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "featlab/datamodel.hpp"
#include "featlab/error.hpp"
#include "featlab/featlearn.hpp"
#include "featlab/rng.hpp"

namespace featlab::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.3.0";

const std::set<std::string> kRunKeys = {"seed", "z",  "pair", "pairs", "mode",     "repeats",
                                        "folds", "pt_levels", "features", "kmeans", "svm",
                                        "synth", "paths"};

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

std::vector<PairConfig> parse_pairs(const std::string& text) {
  std::vector<PairConfig> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(PairConfig::parse(item));
  }
  if (out.empty()) throw ConfigError("no pairs given");
  return out;
}

std::vector<std::size_t> parse_pts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("bad persistence level '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("no persistence levels given");
  return out;
}

std::string rule_name(WorkingSetRule r) {
  return r == WorkingSetRule::kSecondOrder ? "second-order" : "random-partner";
}

WorkingSetRule parse_rule(const std::string& s) {
  if (s == "second-order") return WorkingSetRule::kSecondOrder;
  if (s == "random-partner") return WorkingSetRule::kRandomPartner;
  throw ConfigError("unknown SMO rule '" + s + "'");
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) {
    throw InputError(std::string(what) + " file '" + path + "' does not exist");
  }
}

void require_out(const std::string& path) {
  if (path.empty()) throw ConfigError("missing output path (--out)");
}

/// Loads and head-trims a labeled CSV; the site tag is the file digest, so
/// the same file can never pose as a second site.
Dataset load_trimmed(const std::string& path, std::size_t z) {
  return trim_head(load_dataset(path, file_digest(path)), PreprocessConfig{z});
}

struct Manifest {
  Json doc;

  Manifest(const std::string& command, const RunConfig& cfg) {
    doc = Json{{"command", command},
               {"version", kVersion},
               {"seed", cfg.seed},
               {"config", run_config_to_json(cfg)},
               {"inputs", Json::object()},
               {"outputs", Json::object()}};
  }

  void input(const std::string& name, const std::string& path) {
    doc["inputs"][name] = Json{{"path", path}, {"fnv1a64", file_digest(path)}};
  }

  void output(const std::string& name, const fs::path& path, const std::string& contents) {
    write_file_atomic(path, contents);
    doc["outputs"][name] = Json{{"path", path.string()}, {"fnv1a64", fnv1a64_hex(contents)}};
  }

  void write(const fs::path& path) const { write_file_atomic(path, doc.dump(2) + "\n"); }
};

Json pipeline_json(const RunConfig& cfg, const std::optional<std::array<Codebook, 4>>& cbs,
                   const SvmHyperparams& hp, std::optional<double> cv_pi, const SvmModel& model) {
  return Json{{"pair", cfg.experiment.pair.name()},
              {"z", cfg.experiment.pre.z},
              {"mode", cbs ? "enhanced" : "raw"},
              {"codebooks", cbs ? codebooks_to_json(*cbs)["codebooks"] : Json(nullptr)},
              {"hyperparams", Json{{"c", hp.c}, {"gamma", hp.gamma}}},
              {"cv_pi", cv_pi ? Json(*cv_pi) : Json(nullptr)},
              {"model", model_to_json(model)}};
}

void print_summary(std::ostream& out, const ExperimentReport& r) {
  out << mode_name(r.mode) << " [" << r.pair.name() << "] dim=" << r.feature_dim
      << " repeats=" << r.repeats << "\n";
  for (const auto& s : r.summary) {
    out << "  pt=" << s.pt << std::fixed << std::setprecision(4) << "  DR=" << s.dr_mean
        << "  FAR=" << s.far_mean << "  MTTD=";
    if (s.mttd_mean) out << *s.mttd_mean; else out << "n/a";
    out << std::scientific << std::setprecision(3) << "  PI=" << s.pi_mean << std::fixed
        << std::setprecision(4) << "  CR=" << s.cr_mean << "\n";
    out << std::defaultfloat;
  }
}

int cmd_synth(RunConfig cfg, std::ostream& out) {
  require_out(cfg.out_path);
  cfg.synth.seed = cfg.seed;
  cfg.synth.validate(cfg.experiment.pre.z);
  const Dataset ds = generate_dataset(cfg.synth);
  std::ostringstream csv;
  write_dataset(csv, ds);
  Manifest m("synth", cfg);
  m.output("dataset", cfg.out_path, csv.str());
  m.write(cfg.out_path + ".manifest.json");
  out << "wrote " << ds.units.size() << " units, " << ds.interval_count() << " intervals to "
      << cfg.out_path << "\n";
  return 0;
}

int cmd_learn(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.data_path, "unlabeled data");
  require_out(cfg.out_path);
  const std::size_t z = cfg.experiment.pre.z;
  const Dataset ds = load_trimmed(cfg.data_path, z);
  const auto contexts = assemble_context_vectors(ds, cfg.experiment.pre);
  const auto cbs = learn_codebooks(contexts, cfg.experiment.learn, derive_seed(cfg.seed, 1));
  Manifest m("learn", cfg);
  m.input("data", cfg.data_path);
  m.output("codebooks", cfg.out_path, codebooks_to_json(cbs).dump() + "\n");
  m.write(cfg.out_path + ".manifest.json");
  out << "learned codebooks (K=";
  for (std::size_t i = 0; i < 4; ++i) out << (i ? "/" : "") << cbs[i].K();
  out << ") from " << contexts.size() << " context windows\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.train_path, "training");
  if (!cfg.codebooks_path.empty()) require_file(cfg.codebooks_path, "codebooks");
  require_out(cfg.out_path);
  const auto& ex = cfg.experiment;
  const Dataset train = load_trimmed(cfg.train_path, ex.pre.z);
  std::optional<std::array<Codebook, 4>> cbs;
  if (!cfg.codebooks_path.empty()) cbs = codebooks_from_json(read_json_file(cfg.codebooks_path));
  const auto units = build_unit_examples(train, ex.pre, ex.pair, cbs ? &*cbs : nullptr);

  const std::uint64_t seed = ex.repeat_seed(0);
  SvmHyperparams hp = ex.grid.front();
  std::optional<double> cv_pi;
  if (ex.grid.size() > 1) {
    CvOptions cv_opts{ex.folds, derive_seed(seed, 2), ex.train};
    cv_opts.train.seed = derive_seed(seed, 3);
    const auto cv = cross_validate(units, ex.grid, cv_opts);
    hp = cv.best_hyperparams;
    cv_pi = cv.cv_pi;
  }
  std::vector<FeatureVector> x;
  std::vector<int> y;
  for (const auto& u : units) {
    x.insert(x.end(), u.features.begin(), u.features.end());
    y.insert(y.end(), u.labels.begin(), u.labels.end());
  }
  TrainOptions topts = ex.train;
  topts.seed = derive_seed(seed, 4);
  const auto [model, status] = train_svm(x, y, hp, topts);

  Manifest m("train", cfg);
  m.input("train", cfg.train_path);
  if (!cfg.codebooks_path.empty()) m.input("codebooks", cfg.codebooks_path);
  m.output("model", cfg.out_path, pipeline_json(cfg, cbs, hp, cv_pi, model).dump() + "\n");
  m.write(cfg.out_path + ".manifest.json");
  out << "trained on " << x.size() << " intervals: c=" << hp.c << " gamma=" << hp.gamma
      << " support_vectors=" << model.support_vectors.size()
      << " kkt_violation=" << status.kkt_violation << (status.converged ? "" : " (not converged)")
      << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.model_path, "model");
  require_file(cfg.test_path, "test");
  require_out(cfg.out_path);
  const Json pipe = read_json_file(cfg.model_path);
  PairConfig pair;
  std::size_t z = 0;
  std::optional<std::array<Codebook, 4>> cbs;
  SvmModel model;
  try {
    pair = PairConfig::parse(pipe.at("pair").get<std::string>());
    z = pipe.at("z").get<std::size_t>();
    if (!pipe.at("codebooks").is_null()) cbs = codebooks_from_json(Json{{"codebooks", pipe.at("codebooks")}});
    model = model_from_json(pipe.at("model"));
  } catch (const Json::exception& e) {
    throw ValidationError("'" + cfg.model_path + "' is not a trained pipeline: " + e.what());
  }
  pair.validate(z);
  const PreprocessConfig pre{z};
  const Dataset test = load_trimmed(cfg.test_path, z);
  const auto units = build_unit_examples(test, pre, pair, cbs ? &*cbs : nullptr);
  const auto metrics = evaluate_model(model, units, cfg.experiment.pt_levels);

  Json mj = Json::array();
  for (const auto& mt : metrics) {
    mj.push_back(metrics_to_json(mt));
    out << "pt=" << mt.pt << " DR=" << mt.dr << " FAR=" << mt.far << " MTTD="
        << (mt.mttd ? std::to_string(*mt.mttd) : std::string("n/a")) << " PI=" << mt.pi
        << " CR=" << mt.cr << "\n";
  }
  Manifest m("eval", cfg);
  m.input("model", cfg.model_path);
  m.input("test", cfg.test_path);
  m.output("metrics", cfg.out_path, Json{{"pair", pair.name()}, {"metrics", mj}}.dump(2) + "\n");
  m.write(cfg.out_path + ".manifest.json");
  return 0;
}

int cmd_grid(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.train_path, "training");
  require_file(cfg.test_path, "test");
  require_out(cfg.out_path);
  const auto& ex = cfg.experiment;
  const Dataset train = load_trimmed(cfg.train_path, ex.pre.z);
  const Dataset test = load_trimmed(cfg.test_path, ex.pre.z);
  const auto reports = run_pair_grid(train, test, cfg.pairs, ex);

  const fs::path dir(cfg.out_path);
  Manifest m("grid", cfg);
  m.input("train", cfg.train_path);
  m.input("test", cfg.test_path);
  Json rj = Json::array();
  for (const auto& r : reports) rj.push_back(report_to_json(r));
  m.output("grid_csv", dir / "grid.csv", report_csv(reports));
  m.output("grid_json", dir / "grid.json", rj.dump(2) + "\n");
  m.write(dir / "manifest.json");

  out << "pair    FAR(pt=0)   MTTD(pt=0)\n";
  for (const auto& r : reports) {
    const auto& s = r.summary.front();
    out << std::left << std::setw(8) << r.pair.name() << std::setw(12) << s.far_mean
        << (s.mttd_mean ? std::to_string(*s.mttd_mean) : std::string("n/a")) << "\n";
  }
  return 0;
}

int cmd_e2e(const RunConfig& cfg, std::ostream& out) {
  const auto& ex = cfg.experiment;
  require_file(cfg.train_path, "training");
  require_file(cfg.test_path, "test");
  if (ex.mode == FeatureMode::kTransferEnhanced) require_file(cfg.unlabeled_path, "unlabeled");
  require_out(cfg.out_path);
  const Dataset train = load_trimmed(cfg.train_path, ex.pre.z);
  const Dataset test = load_trimmed(cfg.test_path, ex.pre.z);
  std::optional<Dataset> unlabeled;
  if (ex.mode == FeatureMode::kTransferEnhanced) unlabeled = load_trimmed(cfg.unlabeled_path, ex.pre.z);
  const auto report = run_experiment(train, test, unlabeled ? &*unlabeled : nullptr, ex);

  const fs::path dir(cfg.out_path);
  Manifest m("e2e", cfg);
  m.input("train", cfg.train_path);
  m.input("test", cfg.test_path);
  if (unlabeled) m.input("unlabeled", cfg.unlabeled_path);
  Json seeds = Json::array();
  for (std::size_t r = 0; r < ex.repeats; ++r) seeds.push_back(ex.repeat_seed(r));
  m.doc["repeat_seeds"] = seeds;
  m.output("report_csv", dir / "report.csv", report_csv(std::span(&report, 1)));
  m.output("report_json", dir / "report.json", report_to_json(report).dump(2) + "\n");
  m.write(dir / "manifest.json");
  print_summary(out, report);
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  experiment.validate();
  for (const auto& p : pairs) p.validate(experiment.pre.z);
}

RunConfig run_config_from_json(const Json& doc) {
  const Json& j = doc.contains("config") && doc.contains("command") ? doc.at("config") : doc;
  RunConfig cfg;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  // A bare synth config is accepted for the synth subcommand.
  const Json synth_defaults = synth_config_to_json(SynthConfig{});
  bool bare_synth = !j.empty();
  for (const auto& [k, v] : j.items()) bare_synth = bare_synth && synth_defaults.contains(k);
  if (bare_synth) {
    cfg.synth = synth_config_from_json(j);
    cfg.seed = cfg.synth.seed;
    cfg.experiment.seed = cfg.seed;
    return cfg;
  }
  reject_unknown(j, kRunKeys, "run config");

  auto& ex = cfg.experiment;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  ex.seed = cfg.seed;
  ex.pre.z = get_or<std::size_t>(j, "z", ex.pre.z);
  if (j.contains("pair")) ex.pair = PairConfig::parse(get_or<std::string>(j, "pair", ""));
  if (j.contains("pairs")) {
    cfg.pairs.clear();
    for (const auto& p : get_or<std::vector<std::string>>(j, "pairs", {})) {
      cfg.pairs.push_back(PairConfig::parse(p));
    }
  }
  if (j.contains("mode")) ex.mode = parse_mode(get_or<std::string>(j, "mode", ""));
  ex.repeats = get_or<std::size_t>(j, "repeats", ex.repeats);
  ex.folds = get_or<std::size_t>(j, "folds", ex.folds);
  ex.pt_levels = get_or<std::vector<std::size_t>>(j, "pt_levels", ex.pt_levels);

  if (j.contains("features")) {
    const Json& f = j.at("features");
    reject_unknown(f, {"vol_up", "occ_up", "vol_down", "occ_down"}, "features");
    for (const auto& [name, spec] : f.items()) {
      auto& c = ex.learn.channels[static_cast<std::size_t>(parse_channel(name))];
      reject_unknown(spec, {"K", "d", "n"}, "features." + name);
      c.K = get_or<std::size_t>(spec, "K", c.K);
      c.d = get_or<std::size_t>(spec, "d", c.d);
      c.n = get_or<std::size_t>(spec, "n", c.n);
    }
  }
  if (j.contains("kmeans")) {
    const Json& k = j.at("kmeans");
    reject_unknown(k, {"restarts", "max_iters", "rel_tol"}, "kmeans");
    ex.learn.kmeans.restarts = get_or<std::size_t>(k, "restarts", ex.learn.kmeans.restarts);
    ex.learn.kmeans.max_iters = get_or<std::size_t>(k, "max_iters", ex.learn.kmeans.max_iters);
    ex.learn.kmeans.rel_tol = get_or<double>(k, "rel_tol", ex.learn.kmeans.rel_tol);
  }
  if (j.contains("svm")) {
    const Json& s = j.at("svm");
    reject_unknown(s, {"tol", "max_passes", "rule", "grid", "c", "gamma"}, "svm");
    ex.train.tol = get_or<double>(s, "tol", ex.train.tol);
    ex.train.max_passes = get_or<std::size_t>(s, "max_passes", ex.train.max_passes);
    if (s.contains("rule")) ex.train.rule = parse_rule(get_or<std::string>(s, "rule", ""));
    if (s.contains("grid")) {
      ex.grid.clear();
      for (const auto& g : s.at("grid")) {
        reject_unknown(g, {"c", "gamma"}, "svm.grid entry");
        ex.grid.push_back({get_or<double>(g, "c", 1.0), get_or<double>(g, "gamma", 1.0)});
      }
    } else if (s.contains("c") || s.contains("gamma")) {
      std::vector<double> cs, gs;
      for (const auto& hp : default_grid()) {
        if (std::find(cs.begin(), cs.end(), hp.c) == cs.end()) cs.push_back(hp.c);
        if (std::find(gs.begin(), gs.end(), hp.gamma) == gs.end()) gs.push_back(hp.gamma);
      }
      cs = get_or<std::vector<double>>(s, "c", cs);
      gs = get_or<std::vector<double>>(s, "gamma", gs);
      ex.grid.clear();
      for (double c : cs) {
        for (double g : gs) ex.grid.push_back({c, g});
      }
    }
  }
  if (j.contains("synth")) {
    cfg.synth = synth_config_from_json(j.at("synth"));
  }
  cfg.synth.seed = cfg.seed;
  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    reject_unknown(p, {"train", "test", "unlabeled", "data", "codebooks", "model", "out"}, "paths");
    cfg.train_path = get_or<std::string>(p, "train", "");
    cfg.test_path = get_or<std::string>(p, "test", "");
    cfg.unlabeled_path = get_or<std::string>(p, "unlabeled", "");
    cfg.data_path = get_or<std::string>(p, "data", "");
    cfg.codebooks_path = get_or<std::string>(p, "codebooks", "");
    cfg.model_path = get_or<std::string>(p, "model", "");
    cfg.out_path = get_or<std::string>(p, "out", "");
  }
  return cfg;
}

Json run_config_to_json(const RunConfig& cfg) {
  const auto& ex = cfg.experiment;
  Json pairs = Json::array();
  for (const auto& p : cfg.pairs) pairs.push_back(p.name());
  Json features = Json::object();
  for (Channel ch : kAllChannels) {
    const auto& c = ex.learn.channels[static_cast<std::size_t>(ch)];
    features[std::string(channel_name(ch))] = Json{{"K", c.K}, {"d", c.d}, {"n", c.n}};
  }
  Json grid = Json::array();
  for (const auto& hp : ex.grid) grid.push_back(Json{{"c", hp.c}, {"gamma", hp.gamma}});
  Json synth = synth_config_to_json(cfg.synth);
  synth.erase("seed");
  return Json{{"seed", cfg.seed},
              {"z", ex.pre.z},
              {"pair", ex.pair.name()},
              {"pairs", pairs},
              {"mode", std::string(mode_name(ex.mode))},
              {"repeats", ex.repeats},
              {"folds", ex.folds},
              {"pt_levels", ex.pt_levels},
              {"features", features},
              {"kmeans", Json{{"restarts", ex.learn.kmeans.restarts},
                              {"max_iters", ex.learn.kmeans.max_iters},
                              {"rel_tol", ex.learn.kmeans.rel_tol}}},
              {"svm", Json{{"tol", ex.train.tol},
                           {"max_passes", ex.train.max_passes},
                           {"rule", rule_name(ex.train.rule)},
                           {"grid", grid}}},
              {"synth", synth},
              {"paths", Json{{"train", cfg.train_path},
                             {"test", cfg.test_path},
                             {"unlabeled", cfg.unlabeled_path},
                             {"data", cfg.data_path},
                             {"codebooks", cfg.codebooks_path},
                             {"model", cfg.model_path},
                             {"out", cfg.out_path}}}};
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"featlab: unsupervised feature learning for freeway incident detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Flags {
    std::string config, seed, pair, pairs, mode, repeats, pt, c, gamma, n_units, site_tag;
    std::string train, test, unlabeled, data, codebooks, model, out;
  } fl;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", fl.config, "JSON run config (or a manifest to replay)");
    sub->add_option("--seed", fl.seed, "top-level seed");
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic incident dataset (CSV)");
  common(synth);
  synth->add_option("--out", fl.out, "output CSV");
  synth->add_option("--n-units", fl.n_units, "number of incident units");
  synth->add_option("--site-tag", fl.site_tag, "site tag");

  auto* learn = app.add_subcommand("learn", "learn the four channel codebooks");
  common(learn);
  learn->add_option("--data", fl.data, "unlabeled CSV (labels ignored)");
  learn->add_option("--out", fl.out, "output codebooks JSON");

  auto* train = app.add_subcommand("train", "cross-validate and train one classifier");
  common(train);
  train->add_option("--train", fl.train, "training CSV");
  train->add_option("--codebooks", fl.codebooks, "codebooks JSON (enables enhanced features)");
  train->add_option("--pair", fl.pair, "raw feature pair, e.g. 4-2");
  train->add_option("--c", fl.c, "fix the SVM penalty (skips the grid when given with --gamma)");
  train->add_option("--gamma", fl.gamma, "fix the RBF width");
  train->add_option("--out", fl.out, "output pipeline JSON");

  auto* eval = app.add_subcommand("eval", "score a trained pipeline on a test set");
  common(eval);
  eval->add_option("--model", fl.model, "pipeline JSON from train");
  eval->add_option("--test", fl.test, "test CSV");
  eval->add_option("--pt", fl.pt, "persistence levels, e.g. 0,1,2");
  eval->add_option("--out", fl.out, "output metrics JSON");

  auto* grid = app.add_subcommand("grid", "raw-feature pair grid (FAR/MTTD table)");
  common(grid);
  grid->add_option("--train", fl.train, "training CSV");
  grid->add_option("--test", fl.test, "test CSV");
  grid->add_option("--pairs", fl.pairs, "comma-separated pairs, e.g. 4-2,8-8,12-12");
  grid->add_option("--pt", fl.pt, "persistence levels");
  grid->add_option("--out", fl.out, "output directory");

  auto* e2e = app.add_subcommand("e2e", "repeated raw / enhanced / transfer-enhanced experiment");
  common(e2e);
  e2e->add_option("--mode", fl.mode, "raw, enhanced or transfer-enhanced");
  e2e->add_option("--train", fl.train, "training CSV");
  e2e->add_option("--test", fl.test, "test CSV");
  e2e->add_option("--unlabeled", fl.unlabeled, "unlabeled CSV from another site");
  e2e->add_option("--pair", fl.pair, "raw feature pair");
  e2e->add_option("--repeats", fl.repeats, "number of repeats");
  e2e->add_option("--pt", fl.pt, "persistence levels");
  e2e->add_option("--out", fl.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!fl.config.empty()) {
      require_file(fl.config, "config");
      cfg = run_config_from_json(read_json_file(fl.config));
    }
    auto& ex = cfg.experiment;
    auto to_u64 = [](const std::string& s, const char* what) {
      try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return static_cast<std::uint64_t>(v);
      } catch (const std::exception&) {
        throw ConfigError(std::string("bad ") + what + " '" + s + "'");
      }
    };
    auto to_double = [](const std::string& s, const char* what) {
      try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ConfigError(std::string("bad ") + what + " '" + s + "'");
      }
    };
    if (!fl.seed.empty()) cfg.seed = to_u64(fl.seed, "seed");
    ex.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
    if (!fl.pair.empty()) ex.pair = PairConfig::parse(fl.pair);
    if (!fl.pairs.empty()) cfg.pairs = parse_pairs(fl.pairs);
    if (!fl.mode.empty()) ex.mode = parse_mode(fl.mode);
    if (!fl.repeats.empty()) ex.repeats = static_cast<std::size_t>(to_u64(fl.repeats, "repeats"));
    if (!fl.pt.empty()) ex.pt_levels = parse_pts(fl.pt);
    if (!fl.n_units.empty()) cfg.synth.n_units = static_cast<std::size_t>(to_u64(fl.n_units, "n-units"));
    if (!fl.site_tag.empty()) cfg.synth.site_tag = fl.site_tag;
    if (!fl.c.empty() || !fl.gamma.empty()) {
      if (fl.c.empty() || fl.gamma.empty()) throw ConfigError("--c and --gamma must be given together");
      ex.grid = {{to_double(fl.c, "c"), to_double(fl.gamma, "gamma")}};
    }
    if (!fl.train.empty()) cfg.train_path = fl.train;
    if (!fl.test.empty()) cfg.test_path = fl.test;
    if (!fl.unlabeled.empty()) cfg.unlabeled_path = fl.unlabeled;
    if (!fl.data.empty()) cfg.data_path = fl.data;
    if (!fl.codebooks.empty()) cfg.codebooks_path = fl.codebooks;
    if (!fl.model.empty()) cfg.model_path = fl.model;
    if (!fl.out.empty()) cfg.out_path = fl.out;

    if (synth->parsed()) return cmd_synth(cfg, out);
    cfg.validate();
    if (learn->parsed()) return cmd_learn(cfg, out);
    if (train->parsed()) return cmd_train(cfg, out);
    if (eval->parsed()) return cmd_eval(cfg, out);
    if (grid->parsed()) return cmd_grid(cfg, out);
    if (e2e->parsed()) return cmd_e2e(cfg, out);
    err << app.help();
    return 1;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace featlab::cli
