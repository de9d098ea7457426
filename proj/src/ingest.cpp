#include "eseman/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>

#include <json.hpp>

#include "eseman/error.hpp"

namespace eseman {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

Timestamp integer_field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(0, std::string("missing field '") + name + "'");
  if (it->is_number_unsigned()) {
    const auto v = it->get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<Timestamp>::max())) {
      throw ParseError(0, std::string("field '") + name + "' out of range");
    }
    return static_cast<Timestamp>(v);
  }
  if (it->is_number_integer()) return it->get<std::int64_t>();
  throw ParseError(0, std::string("field '") + name + "' is not an integer");
}

bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

const AttrDecl* find_decl(const AttrSchema& schema, std::string_view name) {
  for (const auto& d : schema) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

}  // namespace

TraceRecord decode_record(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("malformed record: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(0, "record is not an object");

  TraceRecord r;
  auto track = obj.find("track");
  if (track == obj.end()) throw ParseError(0, "missing field 'track'");
  if (!track->is_string()) throw ParseError(0, "field 'track' is not a string");
  r.track = track->get<std::string>();
  r.enter = integer_field(obj, "enter");
  r.leave = integer_field(obj, "leave");

  if (auto attrs = obj.find("attrs"); attrs != obj.end() && !attrs->is_null()) {
    if (!attrs->is_object()) throw ParseError(0, "field 'attrs' is not an object");
    for (const auto& [k, v] : attrs->items()) {
      if (v.is_string()) {
        r.attrs.emplace_back(k, v.get<std::string>());
      } else if (v.is_number() || v.is_boolean()) {
        r.attrs.emplace_back(k, v.dump());
      } else {
        throw ParseError(0, "attribute '" + k + "' is not a scalar");
      }
    }
  }
  return r;
}

TraceRecord sanitize(TraceRecord record, const AttrSchema* schema) {
  record.track = std::string(trim(record.track));
  if (record.track.empty()) throw ParseError(0, "empty track label");
  if (record.enter < 0) throw ParseError(0, "negative enter timestamp");
  if (record.leave < record.enter) throw ParseError(0, "leave < enter");

  if (schema) {
    std::erase_if(record.attrs, [&](const auto& kv) { return !find_decl(*schema, kv.first); });
    for (const auto& [k, v] : record.attrs) {
      double number;
      if (find_decl(*schema, k)->kind == AttrKind::kNumeric && !parse_number(v, number)) {
        throw ParseError(0, "attribute '" + k + "' is not numeric");
      }
    }
  }
  std::stable_sort(record.attrs.begin(), record.attrs.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  record.attrs.erase(std::unique(record.attrs.begin(), record.attrs.end(),
                                 [](const auto& a, const auto& b) { return a.first == b.first; }),
                     record.attrs.end());
  return record;
}

ParsedTrace build_dataset(std::string name, const std::vector<TraceRecord>& records,
                          const std::optional<AttrSchema>& schema) {
  ParsedTrace out;
  Dataset& ds = out.dataset;
  ds.name = std::move(name);

  std::vector<std::string> labels;
  labels.reserve(64);
  {
    std::map<std::string_view, int> seen;
    for (const auto& r : records) seen.emplace(r.track, 0);
    for (const auto& [label, _] : seen) labels.emplace_back(label);
  }
  std::map<std::string_view, TrackIndex> track_of;
  for (TrackIndex i = 0; i < labels.size(); ++i) {
    ds.tracks.push_back({i, labels[i]});
  }
  for (const auto& t : ds.tracks) track_of.emplace(t.label, t.index);

  if (schema) {
    for (const auto& d : *schema) ds.attrs.declare(d.name, d.kind);
  }

  out.events.reserve(records.size());
  for (const auto& r : records) {
    Event e;
    e.id = out.events.size();
    e.track = track_of.at(r.track);
    e.enter = r.enter;
    e.leave = r.leave;
    e.attrs.reserve(r.attrs.size());
    for (const auto& [k, v] : r.attrs) {
      std::optional<AttrKey> found =
          schema ? ds.attrs.find_key(k) : ds.attrs.declare(k, AttrKind::kCategorical);
      if (!found) continue;
      const AttrKey key = *found;
      EventAttr a{key, ds.attrs.intern(key, v), 0.0};
      if (ds.attrs.kind(key) == AttrKind::kNumeric) parse_number(v, a.number);
      e.attrs.push_back(a);
    }
    std::sort(e.attrs.begin(), e.attrs.end(),
              [](const EventAttr& a, const EventAttr& b) { return a.key < b.key; });
    out.events.push_back(std::move(e));
  }
  refresh_extent(ds, out.events);
  return out;
}

ParsedTrace parse_trace(std::istream& in, const ParseOptions& options) {
  std::vector<TraceRecord> records;
  std::vector<Rejection> rejected;
  std::string line;
  std::size_t line_no = 0;
  const AttrSchema* schema = options.schema ? &*options.schema : nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(sanitize(decode_record(line), schema));
    } catch (const ParseError& e) {
      rejected.push_back({line_no, e.reason()});
    }
  }
  ParsedTrace out = build_dataset(options.name, records, options.schema);
  out.rejected = std::move(rejected);
  return out;
}

std::string encode_record(const TraceRecord& r) {
  std::string out;
  out.reserve(64 + r.track.size());
  out += "{\"track\":";
  out += json(r.track).dump();
  out += ",\"enter\":";
  out += std::to_string(r.enter);
  out += ",\"leave\":";
  out += std::to_string(r.leave);
  out += ",\"attrs\":{";
  bool first = true;
  for (const auto& [k, v] : r.attrs) {
    if (!first) out += ',';
    first = false;
    out += json(k).dump();
    out += ':';
    out += json(v).dump();
  }
  out += "}}";
  return out;
}

TraceRecord to_record(const Event& e, const Dataset& ds) {
  TraceRecord r;
  r.track = ds.tracks.at(e.track).label;
  r.enter = e.enter;
  r.leave = e.leave;
  for (const auto& a : e.attrs) {
    r.attrs.emplace_back(ds.attrs.key_name(a.key), ds.attrs.value(a.key, a.value));
  }
  std::sort(r.attrs.begin(), r.attrs.end());
  return r;
}

void write_trace(std::ostream& out, const Dataset& ds, const std::vector<Event>& events) {
  std::vector<const Event*> order;
  order.reserve(events.size());
  for (const auto& e : events) order.push_back(&e);
  std::sort(order.begin(), order.end(), [](const Event* a, const Event* b) { return a->id < b->id; });
  for (const Event* e : order) out << encode_record(to_record(*e, ds)) << '\n';
}

std::string_view distribution_name(Distribution d) {
  switch (d) {
    case Distribution::kClustered: return "clustered";
    case Distribution::kSparse: return "sparse";
    case Distribution::kDense: return "dense";
  }
  return "sparse";
}

std::optional<Distribution> parse_distribution(std::string_view s) {
  if (s == "clustered") return Distribution::kClustered;
  if (s == "sparse") return Distribution::kSparse;
  if (s == "dense") return Distribution::kDense;
  return std::nullopt;
}

namespace {

constexpr int kFunctionCount = 16;

// Portable uniform draws: std::mt19937_64 is fully specified, the standard
// distributions are not.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  int function() {
    // weights 1/(i+1)
    static const std::array<double, kFunctionCount> cdf = [] {
      std::array<double, kFunctionCount> c{};
      double total = 0;
      for (int i = 0; i < kFunctionCount; ++i) total += 1.0 / (i + 1);
      double acc = 0;
      for (int i = 0; i < kFunctionCount; ++i) {
        acc += 1.0 / (i + 1) / total;
        c[i] = acc;
      }
      c[kFunctionCount - 1] = 1.0;
      return c;
    }();
    const double u = unit();
    return static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) %
           kFunctionCount;
  }

 private:
  std::mt19937_64 rng_;
};

struct RawEvent {
  TrackIndex track;
  double start;  // unscaled
  double duration;
  int function;
};

struct SynthStream {
  std::vector<RawEvent> events;
  double scale = 1.0;
};

SynthStream synthesize(const SynthSpec& spec) {
  if (spec.tracks == 0) throw BuildError("synthetic spec needs at least one track");
  if (spec.events < spec.tracks) throw BuildError("synthetic spec needs events >= tracks");
  if (spec.time_extent.length() <= 0) throw BuildError("synthetic spec needs a non-empty extent");

  Draw draw(spec.seed);
  SynthStream s;
  s.events.reserve(spec.events);
  const std::uint64_t base = spec.events / spec.tracks;
  const std::uint64_t extra = spec.events % spec.tracks;
  double longest = 0.0;

  for (TrackIndex t = 0; t < spec.tracks; ++t) {
    const std::uint64_t n = base + (t < extra ? 1 : 0);
    double cursor = 0.0;
    std::uint64_t burst_left = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double duration = draw.uniform(1.0, 2.0);
      double ratio = 0.0;
      switch (spec.distribution) {
        case Distribution::kDense:
          ratio = draw.uniform(0.0, 0.1);
          break;
        case Distribution::kSparse:
          ratio = draw.uniform(10.0, 100.0);
          break;
        case Distribution::kClustered:
          if (burst_left == 0) {
            // new burst: long gap, then a geometric-ish run of tight events
            ratio = draw.uniform(200.0, 2000.0);
            burst_left = 1 + static_cast<std::uint64_t>(draw.uniform(0.0, 63.0));
          } else {
            ratio = draw.uniform(0.0, 0.1);
          }
          --burst_left;
          break;
      }
      // The first gap is drawn at a random fraction so tracks are staggered.
      const double gap = duration * ratio * (i == 0 ? draw.unit() : 1.0);
      cursor += gap;
      s.events.push_back({t, cursor, duration, draw.function()});
      cursor += duration;
    }
    longest = std::max(longest, cursor);
  }
  s.scale = static_cast<double>(spec.time_extent.length()) / longest;
  return s;
}

template <typename Emit>
void emit_scaled(const SynthSpec& spec, const SynthStream& s, Emit&& emit) {
  const Timestamp b = spec.time_extent.begin;
  const Timestamp limit = spec.time_extent.end;
  for (const auto& r : s.events) {
    Timestamp enter = b + static_cast<Timestamp>(std::llround(r.start * s.scale));
    Timestamp leave = b + static_cast<Timestamp>(std::llround((r.start + r.duration) * s.scale));
    enter = std::min(enter, limit);
    leave = std::clamp(leave, enter, limit);
    emit(r, enter, leave);
  }
}

std::string track_label(TrackIndex t, std::uint32_t tracks) {
  const int width = std::max<int>(3, static_cast<int>(std::to_string(tracks - 1).size()));
  std::string digits = std::to_string(t);
  return "thread-" + std::string(width - digits.size(), '0') + digits;
}

std::string function_name(int f) {
  return "fn_" + std::string(f < 10 ? "0" : "") + std::to_string(f);
}

}  // namespace

std::vector<TraceRecord> generate_synthetic(const SynthSpec& spec) {
  const SynthStream s = synthesize(spec);
  std::vector<std::string> labels;
  for (TrackIndex t = 0; t < spec.tracks; ++t) labels.push_back(track_label(t, spec.tracks));
  std::vector<TraceRecord> out;
  out.reserve(s.events.size());
  emit_scaled(spec, s, [&](const RawEvent& r, Timestamp enter, Timestamp leave) {
    out.push_back({labels[r.track], enter, leave, {{"function", function_name(r.function)}}});
  });
  return out;
}

ParsedTrace synthesize_dataset(const SynthSpec& spec, std::string name) {
  const SynthStream s = synthesize(spec);
  ParsedTrace out;
  Dataset& ds = out.dataset;
  ds.name = std::move(name);
  for (TrackIndex t = 0; t < spec.tracks; ++t) ds.tracks.push_back({t, track_label(t, spec.tracks)});
  const AttrKey fn = ds.attrs.declare("function", AttrKind::kCategorical);
  std::array<std::optional<ValueId>, kFunctionCount> ids{};
  out.events.reserve(s.events.size());
  emit_scaled(spec, s, [&](const RawEvent& r, Timestamp enter, Timestamp leave) {
    auto& id = ids[r.function];
    if (!id) id = ds.attrs.intern(fn, function_name(r.function));
    Event e;
    e.id = out.events.size();
    e.track = r.track;
    e.enter = enter;
    e.leave = leave;
    e.attrs.push_back({fn, *id, 0.0});
    out.events.push_back(std::move(e));
  });
  refresh_extent(ds, out.events);
  return out;
}

SynthSpec profile_spec(const DatasetProfile& p, std::uint64_t seed, std::uint64_t scale_down) {
  SynthSpec spec;
  spec.tracks = p.tracks;
  spec.events = std::max<std::uint64_t>(p.tracks, p.events / std::max<std::uint64_t>(1, scale_down));
  spec.distribution = p.distribution;
  spec.seed = seed;
  return spec;
}

}  // namespace eseman
