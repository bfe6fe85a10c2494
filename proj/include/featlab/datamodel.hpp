#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace featlab {

/// The four loop-detector channels. The enumerator order is the block order
/// used everywhere a per-channel layout is serialized or concatenated.
enum class Channel { kVolUp = 0, kOccUp = 1, kVolDown = 2, kOccDown = 3 };

inline constexpr std::array<Channel, 4> kAllChannels = {
    Channel::kVolUp, Channel::kOccUp, Channel::kVolDown, Channel::kOccDown};

std::string_view channel_name(Channel ch);
/// Throws ValidationError on an unknown name.
Channel parse_channel(std::string_view name);

/// One 30-second interval of detector readings.
struct IntervalRecord {
  std::size_t t_index = 0;
  double vol_up = 0.0;
  double occ_up = 0.0;
  double vol_down = 0.0;
  double occ_down = 0.0;
  int label = 0;

  double value(Channel ch) const;
  bool operator==(const IntervalRecord&) const = default;
};

/// A contiguous block of intervals around one incident.
///
/// `history` holds leading intervals removed by trim_head. They are no longer
/// evaluated but still feed the context windows of the first evaluated
/// intervals. `records` are the evaluated intervals, t_index 0-based.
struct IncidentUnit {
  std::string unit_id;
  std::vector<IntervalRecord> history;
  std::vector<IntervalRecord> records;
  std::optional<std::size_t> onset;

  std::size_t size() const { return records.size(); }
  std::size_t incident_count() const;
  /// Channel value at position `pos` of history ++ records.
  double full_value(Channel ch, std::size_t pos) const;
  std::size_t full_size() const { return history.size() + records.size(); }

  bool operator==(const IncidentUnit&) const = default;
};

struct Dataset {
  std::vector<IncidentUnit> units;
  std::string site_tag;

  std::size_t interval_count() const;
  std::size_t incident_interval_count() const;
  bool operator==(const Dataset&) const = default;
};

/// [x-y] pair: x extra upstream past intervals, y extra downstream.
struct PairConfig {
  std::size_t x = 4;
  std::size_t y = 2;

  std::size_t dimension() const { return 2 * (x + 1) + 2 * (y + 1); }
  std::string name() const;
  /// Parses "4-2". Throws ConfigError on malformed text.
  static PairConfig parse(std::string_view text);
  /// Throws ConfigError unless x >= y and x <= z.
  void validate(std::size_t z) const;
  bool operator==(const PairConfig&) const = default;
};

struct PreprocessConfig {
  std::size_t z = 12;
};

struct ContextVector {
  Channel channel = Channel::kVolUp;
  std::vector<double> values;  // oldest -> newest, length z+1
};

using FeatureVector = std::vector<double>;

struct LabeledExample {
  FeatureVector features;
  int label = 0;
  std::string unit_id;
  std::size_t t_index = 0;
};

/// Context windows for one evaluated interval, indexed by Channel.
struct IntervalContext {
  std::string unit_id;
  std::size_t t_index = 0;
  int label = 0;
  std::array<ContextVector, 4> channels;
};

/// Builds a unit from records, computing the onset and validating that the
/// incident labels form at most one contiguous run, that t_index is
/// 0..n-1, and that readings are in range.
IncidentUnit make_unit(std::string unit_id, std::vector<IntervalRecord> records);

/// Groups rows by unit_id (first-appearance order) and sorts each unit by
/// t_index. Errors: ParseError (malformed row, with line number),
/// ValidationError (bad header, non-contiguous labels or t_index), RangeError.
Dataset read_dataset(std::istream& in, std::string site_tag = {});
Dataset load_dataset(const std::filesystem::path& path, std::string site_tag = {});

/// Writes the CSV schema. Values use shortest round-trip formatting, so
/// read_dataset(write_dataset(ds)) reproduces every field bit-exactly.
/// Trimmed units are written in full (history included) with labels intact.
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

/// Moves the first z evaluated intervals of every unit into its history.
/// Throws ValidationError naming the unit if it has <= z intervals.
Dataset trim_head(const Dataset& ds, const PreprocessConfig& cfg);

/// One example per evaluated interval. Layout:
/// [vol_up t-x..t, occ_up t-x..t, vol_down t-y..t, occ_down t-y..t].
std::vector<LabeledExample> assemble_raw_features(const Dataset& ds, const PairConfig& pair);

/// The z+1 most recent values of every channel at each evaluated interval.
std::vector<IntervalContext> assemble_context_vectors(const Dataset& ds,
                                                      const PreprocessConfig& cfg);

/// All context vectors of one channel, labels ignored. This is the patch
/// sampling corpus for feature learning.
std::vector<ContextVector> channel_corpus(const std::vector<IntervalContext>& contexts,
                                          Channel ch);

}  // namespace featlab
