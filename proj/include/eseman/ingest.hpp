#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eseman/event.hpp"

namespace eseman {

// One line of the line-delimited trace format:
//   {"track": <string>, "enter": <int>, "leave": <int>, "attrs": {<string>: <string>, ...}}
struct TraceRecord {
  std::string track;
  Timestamp enter = 0;
  Timestamp leave = 0;
  std::vector<std::pair<std::string, std::string>> attrs;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Rejection {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct ParseOptions {
  std::string name = "trace";
  // When set, attributes outside the schema are dropped and kinds come from
  // the schema. Otherwise every attribute key is kept as categorical.
  std::optional<AttrSchema> schema;
};

struct ParsedTrace {
  Dataset dataset;
  std::vector<Event> events;  // id == position
  std::vector<Rejection> rejected;
};

// Decodes one trace line. Throws ParseError (line 0) on malformed JSON or
// missing/ill-typed required fields.
TraceRecord decode_record(std::string_view line);

// Trims the track label, restricts attributes to the schema (when given) and
// orders them by key. Throws ParseError on invariant violations.
TraceRecord sanitize(TraceRecord record, const AttrSchema* schema);

// Single pass over the lines of `in`. Malformed lines are rejected with their
// line number and do not abort the parse.
ParsedTrace parse_trace(std::istream& in, const ParseOptions& options = {});

// Builds a dataset from already-sanitized records (ids in record order).
ParsedTrace build_dataset(std::string name, const std::vector<TraceRecord>& records,
                          const std::optional<AttrSchema>& schema);

std::string encode_record(const TraceRecord& record);
TraceRecord to_record(const Event& e, const Dataset& ds);

// Serializes events in id order, one record per line.
void write_trace(std::ostream& out, const Dataset& ds, const std::vector<Event>& events);

enum class Distribution { kClustered, kSparse, kDense };

std::string_view distribution_name(Distribution d);
std::optional<Distribution> parse_distribution(std::string_view s);

struct SynthSpec {
  std::uint32_t tracks = 1;
  std::uint64_t events = 1;
  Distribution distribution = Distribution::kSparse;
  std::uint64_t seed = 0;
  TimeSpan time_extent{0, 60'000'000'000};
};

// Deterministic event stream for `spec`, track-major. Throws BuildError when
// events < tracks or the extent is empty.
std::vector<TraceRecord> generate_synthetic(const SynthSpec& spec);

// Same stream as generate_synthetic, materialized directly as a dataset.
// Equivalent to build_dataset(name, generate_synthetic(spec), nullopt).
ParsedTrace synthesize_dataset(const SynthSpec& spec, std::string name);

// Shapes of the six evaluation traces (distribution, tracks, events).
struct DatasetProfile {
  std::string_view name;
  Distribution distribution;
  std::uint32_t tracks;
  std::uint64_t events;
};

inline constexpr std::array<DatasetProfile, 6> kEvaluationProfiles{{
    {"dgemm", Distribution::kClustered, 16, 1'300},
    {"kmeans", Distribution::kSparse, 16, 29'400},
    {"lulesh", Distribution::kDense, 49, 160'000},
    {"lra", Distribution::kSparse, 160, 1'100'000},
    {"fibonacci", Distribution::kDense, 8, 2'300'000},
    {"synthesized", Distribution::kSparse, 496, 3'600'000},
}};

// Spec for a profile with the event count divided by `scale_down` (never below
// the track count).
SynthSpec profile_spec(const DatasetProfile& p, std::uint64_t seed, std::uint64_t scale_down = 1);

}  // namespace eseman
