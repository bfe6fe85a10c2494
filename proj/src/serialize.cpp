#include "featlab/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "featlab/error.hpp"

namespace featlab {
namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing JSON field '") + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get_as(const Json& j, const char* key) {
  try {
    return require(j, key).get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad JSON field '") + key + "': " + e.what());
  }
}

std::vector<std::vector<double>> matrix_from(const Json& j, const char* key) {
  return get_as<std::vector<std::vector<double>>>(j, key);
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const char* what) {
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(std::string("unknown ") + what + " key '" + k + "'");
  }
}

std::string fmt_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Json codebook_to_json(const Codebook& cb) {
  return Json{{"channel", std::string(channel_name(cb.channel))},
              {"K", cb.K()},
              {"d", cb.d},
              {"centroids", cb.centroids}};
}

Codebook codebook_from_json(const Json& j) {
  Codebook cb;
  cb.channel = parse_channel(get_as<std::string>(j, "channel"));
  cb.d = get_as<std::size_t>(j, "d");
  cb.centroids = matrix_from(j, "centroids");
  if (cb.K() != get_as<std::size_t>(j, "K")) {
    throw ValidationError("codebook K does not match the number of centroids");
  }
  cb.validate();
  return cb;
}

Json codebooks_to_json(const std::array<Codebook, 4>& cbs) {
  Json arr = Json::array();
  for (const auto& cb : cbs) arr.push_back(codebook_to_json(cb));
  return Json{{"codebooks", arr}};
}

std::array<Codebook, 4> codebooks_from_json(const Json& j) {
  const Json& arr = require(j, "codebooks");
  if (!arr.is_array() || arr.size() != 4) {
    throw ValidationError("expected 4 codebooks (vol_up, occ_up, vol_down, occ_down)");
  }
  std::array<Codebook, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = codebook_from_json(arr[i]);
    if (out[i].channel != kAllChannels[i]) {
      throw ValidationError("codebooks must be ordered vol_up, occ_up, vol_down, occ_down");
    }
  }
  return out;
}

Json model_to_json(const SvmModel& model) {
  return Json{{"gamma", model.gamma},
              {"bias", model.bias},
              {"scaler_means", model.scaler.means},
              {"scaler_stds", model.scaler.stds},
              {"support_vectors", model.support_vectors},
              {"dual_coefs", model.dual_coefs}};
}

SvmModel model_from_json(const Json& j) {
  SvmModel m;
  m.gamma = get_as<double>(j, "gamma");
  m.bias = get_as<double>(j, "bias");
  m.scaler.means = get_as<std::vector<double>>(j, "scaler_means");
  m.scaler.stds = get_as<std::vector<double>>(j, "scaler_stds");
  m.support_vectors = matrix_from(j, "support_vectors");
  m.dual_coefs = get_as<std::vector<double>>(j, "dual_coefs");
  if (m.scaler.means.size() != m.scaler.stds.size()) {
    throw ValidationError("scaler means and stds differ in length");
  }
  if (m.support_vectors.size() != m.dual_coefs.size()) {
    throw ValidationError("support vector and dual coefficient counts differ");
  }
  for (const auto& sv : m.support_vectors) {
    if (sv.size() != m.dim()) throw ValidationError("support vector has wrong dimension");
  }
  SvmHyperparams{1.0, m.gamma}.validate();
  return m;
}

Json synth_config_to_json(const SynthConfig& c) {
  return Json{{"n_units", c.n_units},       {"pre_len", c.pre_len},
              {"inc_len", c.inc_len},       {"post_len_min", c.post_len_min},
              {"post_len_max", c.post_len_max}, {"base_vol", c.base_vol},
              {"base_occ", c.base_occ},     {"noise_sd", c.noise_sd},
              {"inc_occ_lift", c.inc_occ_lift}, {"inc_vol_drop", c.inc_vol_drop},
              {"ramp_len", c.ramp_len},     {"drift_amp", c.drift_amp},
              {"drift_period", c.drift_period}, {"site_tag", c.site_tag},
              {"unit_prefix", c.unit_prefix}, {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  SynthConfig c;
  const Json defaults = synth_config_to_json(c);
  std::set<std::string> known;
  for (const auto& [k, v] : defaults.items()) known.insert(k);
  reject_unknown(j, known, "synth config");
  Json merged = defaults;
  merged.update(j);
  try {
    c.n_units = merged["n_units"].get<std::size_t>();
    c.pre_len = merged["pre_len"].get<std::size_t>();
    c.inc_len = merged["inc_len"].get<std::size_t>();
    c.post_len_min = merged["post_len_min"].get<std::size_t>();
    c.post_len_max = merged["post_len_max"].get<std::size_t>();
    c.base_vol = merged["base_vol"].get<double>();
    c.base_occ = merged["base_occ"].get<double>();
    c.noise_sd = merged["noise_sd"].get<double>();
    c.inc_occ_lift = merged["inc_occ_lift"].get<double>();
    c.inc_vol_drop = merged["inc_vol_drop"].get<double>();
    c.ramp_len = merged["ramp_len"].get<std::size_t>();
    c.drift_amp = merged["drift_amp"].get<double>();
    c.drift_period = merged["drift_period"].get<double>();
    c.site_tag = merged["site_tag"].get<std::string>();
    c.unit_prefix = merged["unit_prefix"].get<std::string>();
    c.seed = merged["seed"].get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad synth config: ") + e.what());
  }
  return c;
}

Json metrics_to_json(const Metrics& m) {
  Json j{{"pt", m.pt},
         {"dr", m.dr},
         {"far", m.far},
         {"mttd", m.mttd ? Json(*m.mttd) : Json(nullptr)},
         {"pi", m.pi},
         {"cr", m.cr},
         {"mttd_substituted", m.mttd_substituted},
         {"incidents", m.incidents},
         {"detected", m.detected},
         {"false_alarms", m.false_alarms},
         {"intervals", m.intervals}};
  return j;
}

Json report_to_json(const ExperimentReport& report) {
  Json runs = Json::array();
  for (const auto& r : report.runs) {
    Json metrics = Json::array();
    for (const auto& m : r.metrics) metrics.push_back(metrics_to_json(m));
    runs.push_back(Json{{"repeat", r.repeat},
                        {"seed", r.seed},
                        {"c", r.best.c},
                        {"gamma", r.best.gamma},
                        {"cv_pi", r.cv_pi},
                        {"support_vectors", r.support_vectors},
                        {"metrics", metrics}});
  }
  Json summary = Json::array();
  for (const auto& s : report.summary) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    summary.push_back(Json{{"pt", s.pt},
                           {"dr_mean", s.dr_mean}, {"dr_std", s.dr_std},
                           {"far_mean", s.far_mean}, {"far_std", s.far_std},
                           {"mttd_mean", opt(s.mttd_mean)}, {"mttd_std", opt(s.mttd_std)},
                           {"pi_mean", s.pi_mean}, {"pi_std", s.pi_std},
                           {"cr_mean", s.cr_mean}, {"cr_std", s.cr_std}});
  }
  return Json{{"mode", std::string(mode_name(report.mode))},
              {"pair", report.pair.name()},
              {"feature_dim", report.feature_dim},
              {"repeats", report.repeats},
              {"seed", report.seed},
              {"runs", runs},
              {"summary", summary}};
}

void write_report_csv(std::ostream& out, std::span<const ExperimentReport> reports) {
  out << report_csv(reports);
}

std::string report_csv(std::span<const ExperimentReport> reports) {
  std::string s =
      "mode,pair,pt,dr_mean,dr_std,far_mean,far_std,mttd_mean,mttd_std,pi_mean,pi_std,cr_mean,"
      "cr_std,feature_dim\n";
  for (const auto& r : reports) {
    for (const auto& m : r.summary) {
      s += std::string(mode_name(r.mode)) + ',' + r.pair.name() + ',' + std::to_string(m.pt);
      for (double v : {m.dr_mean, m.dr_std, m.far_mean, m.far_std}) s += ',' + fmt_double(v);
      s += ',' + (m.mttd_mean ? fmt_double(*m.mttd_mean) : std::string());
      s += ',' + (m.mttd_std ? fmt_double(*m.mttd_std) : std::string());
      for (double v : {m.pi_mean, m.pi_std, m.cr_mean, m.cr_std}) s += ',' + fmt_double(v);
      s += ',' + std::to_string(r.feature_dim) + '\n';
    }
  }
  return s;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(0, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64_hex(ss.str());
}

}  // namespace featlab
