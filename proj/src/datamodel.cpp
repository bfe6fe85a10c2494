#include "featlab/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "featlab/error.hpp"

namespace featlab {
namespace {

constexpr std::string_view kHeader = "unit_id,t_index,vol_up,occ_up,vol_down,occ_down,label";

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view field, std::size_t line, std::string_view name) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line, "cannot parse " + std::string(name) + " '" + std::string(field) + "'");
  }
  return v;
}

std::size_t parse_index(std::string_view field, std::size_t line, std::string_view name) {
  field = trim(field);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line, "cannot parse " + std::string(name) + " '" + std::string(field) + "'");
  }
  return v;
}

void check_ranges(const std::string& unit_id, const IntervalRecord& r) {
  auto bad = [&](std::string_view what, double v) {
    std::ostringstream msg;
    msg << "unit '" << unit_id << "' t_index " << r.t_index << ": " << what << " = " << v
        << " out of range";
    throw RangeError(msg.str());
  };
  for (const auto& [name, v] : {std::pair{"occ_up", r.occ_up}, std::pair{"occ_down", r.occ_down}}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) bad(name, v);
  }
  for (const auto& [name, v] : {std::pair{"vol_up", r.vol_up}, std::pair{"vol_down", r.vol_down}}) {
    if (!std::isfinite(v) || v < 0.0) bad(name, v);
  }
  if (r.label != 0 && r.label != 1) bad("label", r.label);
}

std::optional<std::size_t> find_onset(const std::vector<IntervalRecord>& records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].label == 1) return i;
  }
  return std::nullopt;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

std::string_view channel_name(Channel ch) {
  switch (ch) {
    case Channel::kVolUp: return "vol_up";
    case Channel::kOccUp: return "occ_up";
    case Channel::kVolDown: return "vol_down";
    case Channel::kOccDown: return "occ_down";
  }
  return "?";
}

Channel parse_channel(std::string_view name) {
  for (Channel ch : kAllChannels) {
    if (channel_name(ch) == name) return ch;
  }
  throw ValidationError("unknown channel '" + std::string(name) + "'");
}

double IntervalRecord::value(Channel ch) const {
  switch (ch) {
    case Channel::kVolUp: return vol_up;
    case Channel::kOccUp: return occ_up;
    case Channel::kVolDown: return vol_down;
    case Channel::kOccDown: return occ_down;
  }
  return 0.0;
}

std::size_t IncidentUnit::incident_count() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const IntervalRecord& r) { return r.label == 1; }));
}

double IncidentUnit::full_value(Channel ch, std::size_t pos) const {
  return pos < history.size() ? history[pos].value(ch) : records[pos - history.size()].value(ch);
}

std::size_t Dataset::interval_count() const {
  std::size_t n = 0;
  for (const auto& u : units) n += u.size();
  return n;
}

std::size_t Dataset::incident_interval_count() const {
  std::size_t n = 0;
  for (const auto& u : units) n += u.incident_count();
  return n;
}

std::string PairConfig::name() const { return std::to_string(x) + "-" + std::to_string(y); }

PairConfig PairConfig::parse(std::string_view text) {
  text = trim(text);
  if (text.size() >= 2 && text.front() == '[' && text.back() == ']') {
    text = text.substr(1, text.size() - 2);
  }
  const std::size_t dash = text.find('-');
  PairConfig p;
  auto parse_part = [&](std::string_view part, std::size_t& out) {
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw ConfigError("malformed pair '" + std::string(text) + "', expected x-y");
    }
  };
  if (dash == std::string_view::npos) {
    throw ConfigError("malformed pair '" + std::string(text) + "', expected x-y");
  }
  parse_part(text.substr(0, dash), p.x);
  parse_part(text.substr(dash + 1), p.y);
  return p;
}

void PairConfig::validate(std::size_t z) const {
  if (x < y) {
    throw ConfigError("pair [" + name() + "] has fewer upstream than downstream intervals");
  }
  if (x > z) {
    throw ConfigError("pair [" + name() + "] needs more history than z=" + std::to_string(z));
  }
}

IncidentUnit make_unit(std::string unit_id, std::vector<IntervalRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const IntervalRecord& a, const IntervalRecord& b) { return a.t_index < b.t_index; });
  std::size_t runs = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].t_index != i) {
      throw ValidationError("unit '" + unit_id + "': t_index is not contiguous from 0 (found " +
                            std::to_string(records[i].t_index) + " at position " +
                            std::to_string(i) + ")");
    }
    check_ranges(unit_id, records[i]);
    if (records[i].label == 1 && (i == 0 || records[i - 1].label == 0)) ++runs;
  }
  if (runs > 1) {
    throw ValidationError("unit '" + unit_id + "': incident labels form " +
                          std::to_string(runs) + " separate runs, expected one");
  }
  IncidentUnit unit;
  unit.unit_id = std::move(unit_id);
  unit.onset = find_onset(records);
  unit.records = std::move(records);
  return unit;
}

Dataset read_dataset(std::istream& in, std::string site_tag) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ValidationError("empty input, missing CSV header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (trim(line) != kHeader) {
    throw ValidationError("bad CSV header '" + std::string(trim(line)) + "', expected '" +
                          std::string(kHeader) + "'");
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<IntervalRecord>> grouped;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      throw ParseError(line_no, "expected 7 fields, found " + std::to_string(fields.size()));
    }
    const std::string id(trim(fields[0]));
    if (id.empty()) throw ParseError(line_no, "empty unit_id");
    IntervalRecord r;
    r.t_index = parse_index(fields[1], line_no, "t_index");
    r.vol_up = parse_double(fields[2], line_no, "vol_up");
    r.occ_up = parse_double(fields[3], line_no, "occ_up");
    r.vol_down = parse_double(fields[4], line_no, "vol_down");
    r.occ_down = parse_double(fields[5], line_no, "occ_down");
    const std::size_t label = parse_index(fields[6], line_no, "label");
    if (label > 1) throw ParseError(line_no, "label must be 0 or 1");
    r.label = static_cast<int>(label);

    auto [it, inserted] = grouped.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.push_back(r);
  }

  Dataset ds;
  ds.site_tag = std::move(site_tag);
  ds.units.reserve(order.size());
  for (const auto& id : order) ds.units.push_back(make_unit(id, std::move(grouped[id])));
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, std::string site_tag) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset '" + path.string() + "'");
  return read_dataset(in, std::move(site_tag));
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  std::string buf;
  buf.append(kHeader).push_back('\n');
  for (const auto& unit : ds.units) {
    std::size_t t = 0;
    auto emit = [&](const IntervalRecord& r) {
      buf.append(unit.unit_id).push_back(',');
      buf.append(std::to_string(t++)).push_back(',');
      append_double(buf, r.vol_up);
      buf.push_back(',');
      append_double(buf, r.occ_up);
      buf.push_back(',');
      append_double(buf, r.vol_down);
      buf.push_back(',');
      append_double(buf, r.occ_down);
      buf.push_back(',');
      buf.push_back(r.label ? '1' : '0');
      buf.push_back('\n');
    };
    for (const auto& r : unit.history) emit(r);
    for (const auto& r : unit.records) emit(r);
  }
  out << buf;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset '" + path.string() + "'");
  write_dataset(out, ds);
}

Dataset trim_head(const Dataset& ds, const PreprocessConfig& cfg) {
  Dataset out;
  out.site_tag = ds.site_tag;
  out.units.reserve(ds.units.size());
  for (const auto& unit : ds.units) {
    if (unit.size() <= cfg.z) {
      throw ValidationError("unit '" + unit.unit_id + "' has " + std::to_string(unit.size()) +
                            " intervals, need more than z=" + std::to_string(cfg.z));
    }
    IncidentUnit u;
    u.unit_id = unit.unit_id;
    u.history = unit.history;
    u.history.insert(u.history.end(), unit.records.begin(),
                     unit.records.begin() + static_cast<std::ptrdiff_t>(cfg.z));
    u.records.assign(unit.records.begin() + static_cast<std::ptrdiff_t>(cfg.z), unit.records.end());
    for (std::size_t i = 0; i < u.records.size(); ++i) u.records[i].t_index = i;
    u.onset = find_onset(u.records);
    out.units.push_back(std::move(u));
  }
  return out;
}

std::vector<LabeledExample> assemble_raw_features(const Dataset& ds, const PairConfig& pair) {
  if (pair.x < pair.y) {
    throw ConfigError("pair [" + pair.name() + "] has fewer upstream than downstream intervals");
  }
  std::vector<LabeledExample> out;
  out.reserve(ds.interval_count());
  const std::size_t dim = pair.dimension();
  for (const auto& unit : ds.units) {
    const std::size_t h = unit.history.size();
    if (h < pair.x) {
      throw ValidationError("unit '" + unit.unit_id + "' has " + std::to_string(h) +
                            " history intervals, pair [" + pair.name() + "] needs " +
                            std::to_string(pair.x) + "; trim with z >= x first");
    }
    for (std::size_t t = 0; t < unit.size(); ++t) {
      const std::size_t pos = h + t;
      LabeledExample ex;
      ex.features.reserve(dim);
      for (auto [ch, span] : {std::pair{Channel::kVolUp, pair.x}, std::pair{Channel::kOccUp, pair.x},
                              std::pair{Channel::kVolDown, pair.y},
                              std::pair{Channel::kOccDown, pair.y}}) {
        for (std::size_t k = pos - span; k <= pos; ++k) ex.features.push_back(unit.full_value(ch, k));
      }
      ex.label = unit.records[t].label;
      ex.unit_id = unit.unit_id;
      ex.t_index = t;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<IntervalContext> assemble_context_vectors(const Dataset& ds,
                                                      const PreprocessConfig& cfg) {
  std::vector<IntervalContext> out;
  out.reserve(ds.interval_count());
  for (const auto& unit : ds.units) {
    const std::size_t h = unit.history.size();
    if (h < cfg.z) {
      throw ValidationError("unit '" + unit.unit_id + "' has " + std::to_string(h) +
                            " history intervals, context windows need z=" +
                            std::to_string(cfg.z) + "; trim first");
    }
    for (std::size_t t = 0; t < unit.size(); ++t) {
      const std::size_t pos = h + t;
      IntervalContext ctx;
      ctx.unit_id = unit.unit_id;
      ctx.t_index = t;
      ctx.label = unit.records[t].label;
      for (Channel ch : kAllChannels) {
        auto& cv = ctx.channels[static_cast<std::size_t>(ch)];
        cv.channel = ch;
        cv.values.reserve(cfg.z + 1);
        for (std::size_t k = pos - cfg.z; k <= pos; ++k) cv.values.push_back(unit.full_value(ch, k));
      }
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

std::vector<ContextVector> channel_corpus(const std::vector<IntervalContext>& contexts,
                                          Channel ch) {
  std::vector<ContextVector> out;
  out.reserve(contexts.size());
  for (const auto& c : contexts) out.push_back(c.channels[static_cast<std::size_t>(ch)]);
  return out;
}

}  // namespace featlab
