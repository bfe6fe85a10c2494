#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "featlab/datamodel.hpp"
#include "featlab/error.hpp"
#include "featlab/eval.hpp"
#include "featlab/featlearn.hpp"
#include "featlab/serialize.hpp"
#include "featlab/svm.hpp"
#include "featlab/synth.hpp"

namespace py = pybind11;
using namespace featlab;

namespace {

std::vector<int> labels_of(const std::vector<LabeledExample>& ex) {
  std::vector<int> out;
  out.reserve(ex.size());
  for (const auto& e : ex) out.push_back(e.label);
  return out;
}

}  // namespace

PYBIND11_MODULE(_featlab, m) {
  m.doc() = "K-means triangle features, SMO SVM and incident-detection metrics";

  auto base = py::register_exception<Error>(m, "FeatlabError", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());

  py::enum_<Channel>(m, "Channel")
      .value("vol_up", Channel::kVolUp)
      .value("occ_up", Channel::kOccUp)
      .value("vol_down", Channel::kVolDown)
      .value("occ_down", Channel::kOccDown);

  py::enum_<FeatureMode>(m, "FeatureMode")
      .value("raw", FeatureMode::kRaw)
      .value("enhanced", FeatureMode::kEnhanced)
      .value("transfer_enhanced", FeatureMode::kTransferEnhanced);

  py::class_<PairConfig>(m, "PairConfig")
      .def(py::init<>())
      .def(py::init([](std::size_t x, std::size_t y) { return PairConfig{x, y}; }), py::arg("x"),
           py::arg("y"))
      .def_readwrite("x", &PairConfig::x)
      .def_readwrite("y", &PairConfig::y)
      .def_property_readonly("dimension", &PairConfig::dimension)
      .def_static("parse", &PairConfig::parse)
      .def("__repr__", [](const PairConfig& p) { return "PairConfig[" + p.name() + "]"; });

  py::class_<PreprocessConfig>(m, "PreprocessConfig")
      .def(py::init([](std::size_t z) { return PreprocessConfig{z}; }), py::arg("z") = 12)
      .def_readwrite("z", &PreprocessConfig::z);

  py::class_<IncidentUnit>(m, "IncidentUnit")
      .def_readonly("unit_id", &IncidentUnit::unit_id)
      .def_readonly("onset", &IncidentUnit::onset)
      .def("__len__", &IncidentUnit::size)
      .def_property_readonly("labels", [](const IncidentUnit& u) {
        std::vector<int> l;
        for (const auto& r : u.records) l.push_back(r.label);
        return l;
      });

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("units", &Dataset::units)
      .def_readwrite("site_tag", &Dataset::site_tag)
      .def_property_readonly("interval_count", &Dataset::interval_count)
      .def_property_readonly("incident_interval_count", &Dataset::incident_interval_count)
      .def("to_csv", [](const Dataset& ds) {
        std::ostringstream out;
        write_dataset(out, ds);
        return out.str();
      });

  m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("site_tag") = "");
  m.def("read_dataset_csv", [](const std::string& text, const std::string& tag) {
    std::istringstream in(text);
    return read_dataset(in, tag);
  }, py::arg("text"), py::arg("site_tag") = "");
  m.def("trim_head", &trim_head, py::arg("dataset"), py::arg("config") = PreprocessConfig{});
  m.def("assemble_raw_features", [](const Dataset& ds, const PairConfig& pair) {
    const auto ex = assemble_raw_features(ds, pair);
    std::vector<FeatureVector> x;
    for (const auto& e : ex) x.push_back(e.features);
    return py::make_tuple(x, labels_of(ex));
  }, py::arg("dataset"), py::arg("pair"), "Returns (features, labels).");

  py::class_<ContextVector>(m, "ContextVector")
      .def(py::init([](Channel ch, std::vector<double> v) { return ContextVector{ch, std::move(v)}; }),
           py::arg("channel"), py::arg("values"))
      .def_readwrite("channel", &ContextVector::channel)
      .def_readwrite("values", &ContextVector::values);

  py::class_<Codebook>(m, "Codebook")
      .def(py::init([](Channel ch, std::vector<std::vector<double>> c) {
             Codebook cb{ch, c.empty() ? 0 : c.front().size(), std::move(c)};
             cb.validate();
             return cb;
           }),
           py::arg("channel"), py::arg("centroids"))
      .def_readonly("channel", &Codebook::channel)
      .def_readonly("d", &Codebook::d)
      .def_readonly("centroids", &Codebook::centroids)
      .def_property_readonly("K", &Codebook::K)
      .def("to_json", [](const Codebook& cb) { return codebook_to_json(cb).dump(); })
      .def_static("from_json", [](const std::string& s) { return codebook_from_json(Json::parse(s)); });

  py::class_<KMeansConfig>(m, "KMeansConfig")
      .def(py::init([](std::size_t restarts, std::size_t max_iters, double rel_tol, std::uint64_t seed) {
             return KMeansConfig{restarts, max_iters, rel_tol, seed};
           }),
           py::arg("restarts") = 1, py::arg("max_iters") = 300, py::arg("rel_tol") = 1e-6,
           py::arg("seed") = 0);

  py::class_<KMeansResult>(m, "KMeansResult")
      .def_readonly("codebook", &KMeansResult::codebook)
      .def_readonly("objective", &KMeansResult::objective)
      .def_readonly("iterations", &KMeansResult::iterations)
      .def_readonly("objective_trace", &KMeansResult::objective_trace)
      .def_readonly("assignment", &KMeansResult::assignment);

  m.def("sample_patches", [](const std::vector<ContextVector>& v, std::size_t d, std::size_t n,
                             std::uint64_t seed) { return sample_patches(v, {d, n, seed}); },
        py::arg("vectors"), py::arg("d"), py::arg("n"), py::arg("seed") = 0);
  m.def("kmeans_fit", [](const std::vector<Patch>& p, std::size_t K, const KMeansConfig& cfg,
                         Channel ch) { return kmeans_fit(p, K, cfg, ch); },
        py::arg("patches"), py::arg("K"), py::arg("config") = KMeansConfig{},
        py::arg("channel") = Channel::kVolUp);
  m.def("encode_triangle", [](const Codebook& cb, const std::vector<double>& x) {
    return encode_triangle(cb, x);
  }, py::arg("codebook"), py::arg("x"));
  m.def("pool_features", &pool_features, py::arg("codebook"), py::arg("context"));

  py::class_<SvmHyperparams>(m, "SvmHyperparams")
      .def(py::init([](double c, double gamma) { return SvmHyperparams{c, gamma}; }), py::arg("c"),
           py::arg("gamma"))
      .def_readwrite("c", &SvmHyperparams::c)
      .def_readwrite("gamma", &SvmHyperparams::gamma);

  py::class_<TrainStatus>(m, "TrainStatus")
      .def_readonly("iterations", &TrainStatus::iterations)
      .def_readonly("kkt_violation", &TrainStatus::kkt_violation)
      .def_readonly("converged", &TrainStatus::converged)
      .def_readonly("dual_objective", &TrainStatus::dual_objective);

  py::class_<SvmModel>(m, "SvmModel")
      .def_readonly("support_vectors", &SvmModel::support_vectors)
      .def_readonly("dual_coefs", &SvmModel::dual_coefs)
      .def_readonly("bias", &SvmModel::bias)
      .def_readonly("gamma", &SvmModel::gamma)
      .def("predict", [](const SvmModel& model, const std::vector<double>& x) { return model.predict(x); })
      .def("to_json", [](const SvmModel& model) { return model_to_json(model).dump(); })
      .def_static("from_json", [](const std::string& s) { return model_from_json(Json::parse(s)); });

  m.def("rbf_kernel", [](const std::vector<double>& a, const std::vector<double>& b, double g) {
    return rbf_kernel(a, b, g);
  }, py::arg("a"), py::arg("b"), py::arg("gamma"));
  m.def("train_svm", [](const std::vector<FeatureVector>& x, const std::vector<int>& y,
                        const SvmHyperparams& hp, double tol, std::size_t max_passes) {
    TrainOptions opts;
    opts.tol = tol;
    opts.max_passes = max_passes;
    py::gil_scoped_release release;
    return train_svm(x, y, hp, opts);
  }, py::arg("features"), py::arg("labels"), py::arg("hyperparams"), py::arg("tol") = 1e-3,
        py::arg("max_passes") = 1000, "Returns (model, status).");

  py::class_<Metrics>(m, "Metrics")
      .def_readonly("pt", &Metrics::pt)
      .def_readonly("dr", &Metrics::dr)
      .def_readonly("far", &Metrics::far)
      .def_readonly("mttd", &Metrics::mttd)
      .def_readonly("pi", &Metrics::pi)
      .def_readonly("cr", &Metrics::cr);

  m.def("persistence_filter", [](const std::vector<int>& c, std::size_t pt) {
    return persistence_filter(c, pt);
  }, py::arg("classifications"), py::arg("pt"));
  m.def("compute_metrics", [](const std::vector<std::vector<int>>& alarms,
                              const std::vector<std::vector<int>>& labels, std::size_t pt) {
    if (alarms.size() != labels.size()) throw DimensionError("alarms and labels differ in unit count");
    std::vector<AlarmSeries> a;
    std::vector<LabeledSeries> l;
    for (std::size_t i = 0; i < alarms.size(); ++i) {
      a.push_back({std::to_string(i), alarms[i]});
      l.push_back({std::to_string(i), labels[i]});
    }
    return compute_metrics(a, l, pt);
  }, py::arg("alarms"), py::arg("labels"), py::arg("pt") = 0,
        "Per-unit alarm and label lists; returns Metrics.");
  m.def("compute_pi", &compute_pi, py::arg("dr"), py::arg("far"), py::arg("mttd"));

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_units", &SynthConfig::n_units)
      .def_readwrite("pre_len", &SynthConfig::pre_len)
      .def_readwrite("inc_len", &SynthConfig::inc_len)
      .def_readwrite("post_len_min", &SynthConfig::post_len_min)
      .def_readwrite("post_len_max", &SynthConfig::post_len_max)
      .def_readwrite("base_vol", &SynthConfig::base_vol)
      .def_readwrite("base_occ", &SynthConfig::base_occ)
      .def_readwrite("noise_sd", &SynthConfig::noise_sd)
      .def_readwrite("inc_occ_lift", &SynthConfig::inc_occ_lift)
      .def_readwrite("inc_vol_drop", &SynthConfig::inc_vol_drop)
      .def_readwrite("ramp_len", &SynthConfig::ramp_len)
      .def_readwrite("drift_amp", &SynthConfig::drift_amp)
      .def_readwrite("site_tag", &SynthConfig::site_tag)
      .def_readwrite("seed", &SynthConfig::seed);
  m.def("generate_dataset", &generate_dataset, py::arg("config"));

  m.def("run_experiment_json", [](const Dataset& train, const Dataset& test, const Dataset* unlabeled,
                                  FeatureMode mode, const PairConfig& pair,
                                  const std::vector<SvmHyperparams>& grid, std::size_t repeats,
                                  std::size_t folds, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.mode = mode;
    cfg.pair = pair;
    if (!grid.empty()) cfg.grid = grid;
    cfg.repeats = repeats;
    cfg.folds = folds;
    cfg.seed = seed;
    ExperimentReport report;
    {
      py::gil_scoped_release release;
      report = run_experiment(train, test, unlabeled, cfg);
    }
    return report_to_json(report).dump();
  }, py::arg("train"), py::arg("test"), py::arg("unlabeled") = nullptr,
        py::arg("mode") = FeatureMode::kRaw, py::arg("pair") = PairConfig{},
        py::arg("grid") = std::vector<SvmHyperparams>{}, py::arg("repeats") = 1,
        py::arg("folds") = 10, py::arg("seed") = 0,
        "Runs the experiment on trimmed datasets and returns the JSON report.");
}
