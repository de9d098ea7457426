#include "eseman/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "eseman/error.hpp"
#include "eseman/wire.hpp"

namespace eseman {

std::string_view config_name(Config c) {
  switch (c) {
    case Config::kNaive: return "naive";
    case Config::kSat: return "sat";
    case Config::kReservoir: return "reservoir";
    case Config::kM4: return "m4";
    case Config::kEseman1d: return "eseman-1dkdt";
    case Config::kEsemanKdt: return "eseman-kdt";
    case Config::kEsemanAgg: return "eseman-agg";
  }
  return "naive";
}

std::optional<Config> parse_config(std::string_view s) {
  for (Config c : kAllConfigs) {
    if (config_name(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<BuilderKind> config_builder(Config c) {
  switch (c) {
    case Config::kEseman1d: return BuilderKind::kKdt1d;
    case Config::kEsemanKdt: return BuilderKind::kKdt2d;
    case Config::kEsemanAgg: return BuilderKind::kAgglomerative;
    default: return std::nullopt;
  }
}

std::string_view query_kind_name(QueryKind k) {
  return k == QueryKind::kRange ? "range" : "conditional";
}

std::optional<QueryKind> parse_query_kind(std::string_view s) {
  if (s == "range") return QueryKind::kRange;
  if (s == "conditional") return QueryKind::kConditional;
  return std::nullopt;
}

namespace {

// Most frequent value of the first categorical attribute; ties go to the
// lower value id.
std::optional<AttrMatch> default_predicate(const Dataset& ds, const std::vector<Event>& events) {
  for (AttrKey k = 0; k < ds.attrs.key_count(); ++k) {
    if (ds.attrs.kind(k) != AttrKind::kCategorical) continue;
    std::vector<std::uint64_t> freq(ds.attrs.value_count(k), 0);
    for (const Event& e : events) {
      for (const EventAttr& a : e.attrs) {
        if (a.key == k) ++freq[a.value];
      }
    }
    const auto best = std::max_element(freq.begin(), freq.end());
    if (best == freq.end() || *best == 0) return std::nullopt;
    return AttrMatch{k, static_cast<ValueId>(best - freq.begin())};
  }
  return std::nullopt;
}

// Answers "does any matching event hit this span" in O(log n).
class MatchFinder {
 public:
  MatchFinder(const std::vector<Event>& events, AttrMatch match) {
    for (const Event& e : events) {
      if (match(e)) spans_.push_back(footprint(e.span()));
    }
    std::sort(spans_.begin(), spans_.end(),
              [](TimeSpan a, TimeSpan b) { return a.begin < b.begin; });
    reach_.reserve(spans_.size());
    Timestamp r = std::numeric_limits<Timestamp>::min();
    for (TimeSpan s : spans_) reach_.push_back(r = std::max(r, s.end));
  }

  bool any_in(TimeSpan w) const {
    const auto it = std::lower_bound(spans_.begin(), spans_.end(), w.end,
                                     [](TimeSpan s, Timestamp t) { return s.begin < t; });
    if (it == spans_.begin()) return false;
    return reach_[static_cast<std::size_t>(it - spans_.begin()) - 1] > w.begin;
  }

 private:
  std::vector<TimeSpan> spans_;  // footprints by begin
  std::vector<Timestamp> reach_;  // running max of footprint ends
};

}  // namespace

Workload generate_workload(const Dataset& ds, const std::vector<Event>& events, QueryKind kind,
                           std::uint64_t seed, const WorkloadOptions& options) {
  Workload w;
  w.dataset = ds.name;
  w.kind = kind;
  w.seed = seed;
  if (options.count == 0) return w;

  const TimeSpan extent = ds.time_extent;
  const Timestamp max_len = extent.length() / static_cast<Timestamp>(options.count);
  if (max_len < options.min_span) {
    throw Error("dataset '" + ds.name + "' extent of " + std::to_string(extent.length()) +
                " ns cannot hold " + std::to_string(options.count) + " disjoint spans of at least " +
                std::to_string(options.min_span) + " ns");
  }

  std::optional<MatchFinder> finder;
  if (kind == QueryKind::kConditional) {
    const auto match = default_predicate(ds, events);
    if (!match) throw Error("dataset '" + ds.name + "' has no categorical attribute to filter on");
    w.predicate = Predicate{ds.attrs.key_name(match->key), ds.attrs.value(match->key, match->value)};
    finder.emplace(events, *match);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Timestamp> length(options.min_span, max_len);
  std::size_t attempts = 0, overlaps = 0, unmatched = 0;
  while (w.spans.size() < options.count) {
    if (attempts++ >= options.max_attempts) {
      throw Error("workload generation for '" + ds.name + "' gave up after " +
                  std::to_string(options.max_attempts) + " draws with " +
                  std::to_string(w.spans.size()) + " spans accepted (" + std::to_string(overlaps) +
                  " overlapping, " + std::to_string(unmatched) + " without a matching event)");
    }
    const Timestamp len = length(rng);
    std::uniform_int_distribution<Timestamp> start(extent.begin, extent.end - len);
    const TimeSpan s{start(rng), 0};
    const TimeSpan span{s.begin, s.begin + len};
    if (std::any_of(w.spans.begin(), w.spans.end(),
                    [&](TimeSpan o) { return spans_overlap(o, span); })) {
      ++overlaps;
      continue;
    }
    if (finder && !finder->any_in(span)) {
      ++unmatched;
      continue;
    }
    w.spans.push_back(span);
  }
  return w;
}

namespace {

template <typename T>
void append_int(std::string& out, T v) {
  char buf[24];
  out.append(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
}

void append_rows(std::string& out, const std::vector<EventRow>& rows) {
  out += '[';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += ',';
    out += "{\"id\":";
    append_int(out, rows[i].id);
    out += ",\"track\":";
    append_int(out, rows[i].track);
    out += ",\"enter\":";
    append_int(out, rows[i].enter);
    out += ",\"leave\":";
    append_int(out, rows[i].leave);
    out += '}';
  }
  out += ']';
}

std::uint64_t elapsed_ns(std::chrono::steady_clock::time_point since) {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                        std::chrono::steady_clock::now() - since)
                                        .count());
}

// Rows grouped by track, keeping their order.
std::vector<std::vector<EventRow>> by_track(const std::vector<EventRow>& rows, TrackRange tracks) {
  std::vector<std::vector<EventRow>> out(tracks.size());
  for (const EventRow& r : rows) out[r.track - tracks.lo].push_back(r);
  return out;
}

}  // namespace

struct ConfigRunner::State {
  const BenchData* data;
  BenchOptions options;
  std::optional<Predicate> predicate;
  std::optional<AttrMatch> match;
  TrackRange tracks;
  std::shared_ptr<const HierIndex> index;
  NodeCache cache;
  std::unique_ptr<BinnedTable> table;
};

ConfigRunner::ConfigRunner(Config config, const BenchData& data, const BenchOptions& options,
                           std::optional<Predicate> predicate)
    : config_(config), state_(std::make_unique<State>()) {
  State& s = *state_;
  s.data = &data;
  s.options = options;
  s.predicate = std::move(predicate);
  const Dataset& ds = *data.dataset;
  s.tracks = ds.all_tracks();
  if (s.predicate) {
    const auto key = ds.attrs.find_key(s.predicate->key);
    if (!key) throw Error("unknown attribute '" + s.predicate->key + "'");
    const auto value = ds.attrs.find_value(*key, s.predicate->value);
    // An unknown value matches nothing; the sentinel id never occurs.
    s.match = AttrMatch{*key, value.value_or(std::numeric_limits<ValueId>::max())};
  }
  if (const auto b = config_builder(config)) {
    const auto it = data.indexes.find(*b);
    if (it == data.indexes.end()) {
      throw Error("no " + std::string(builder_name(*b)) + " index loaded for '" + ds.name + "'");
    }
    s.index = it->second;
  }
  if (config == Config::kSat) {
    s.table = std::make_unique<BinnedTable>(
        s.match ? BinnedTable::build_filtered(ds, *data.events, options.sat_bins, s.match->key,
                                              s.match->value)
                : BinnedTable::build(ds, *data.events, options.sat_bins));
  }
}

ConfigRunner::~ConfigRunner() = default;
ConfigRunner::ConfigRunner(ConfigRunner&&) noexcept = default;

ConfigOutput ConfigRunner::run(TimeSpan window, bool want_raster) {
  State& s = *state_;
  const BenchOptions& o = s.options;
  const std::vector<Event>& events = *s.data->events;
  const Frame frame{window, o.canvas_px, {s.tracks}};
  ConfigOutput out;
  std::vector<RasterMark> marks;
  const auto mark_rows = [&](const std::vector<EventRow>& rows) {
    for (const EventRow& r : rows) marks.push_back({{r.track, r.track}, r.span()});
  };
  const auto naive = [&] {
    return s.match ? naive_query(events, window, s.tracks, *s.match)
                   : naive_query(events, window, s.tracks);
  };

  const auto start = std::chrono::steady_clock::now();
  switch (config_) {
    case Config::kNaive: {
      const auto rows = naive();
      std::string payload;
      append_rows(payload, rows);
      out.fetch_ns = elapsed_ns(start);
      out.items = rows.size();
      out.bytes = payload.size();
      if (want_raster) mark_rows(rows);
      break;
    }
    case Config::kReservoir: {
      const auto groups = by_track(naive(), s.tracks);
      std::vector<EventRow> sample;
      for (std::size_t t = 0; t < groups.size(); ++t) {
        const auto part = reservoir_query(groups[t], o.canvas_px, o.reservoir_seed + s.tracks.lo + t);
        sample.insert(sample.end(), part.begin(), part.end());
      }
      std::string payload;
      append_rows(payload, sample);
      out.fetch_ns = elapsed_ns(start);
      out.items = sample.size();
      out.bytes = payload.size();
      if (want_raster) mark_rows(sample);
      break;
    }
    case Config::kM4: {
      const auto groups = by_track(naive(), s.tracks);
      std::vector<std::vector<M4Row>> per_track(groups.size());
      std::string payload = "[";
      for (std::size_t t = 0; t < groups.size(); ++t) {
        per_track[t] = m4_query(groups[t], o.canvas_px, window);
        for (const M4Row& r : per_track[t]) {
          if (payload.size() > 1) payload += ',';
          payload += "{\"track\":";
          append_int(payload, s.tracks.lo + t);
          payload += ",\"k\":";
          append_int(payload, r.k);
          payload += ",\"atime\":";
          append_int(payload, r.atime);
          payload += ",\"ct\":";
          append_int(payload, r.ct);
          payload += '}';
        }
        out.items += per_track[t].size();
      }
      payload += ']';
      out.fetch_ns = elapsed_ns(start);
      out.bytes = payload.size();
      if (want_raster) {
        for (std::size_t t = 0; t < per_track.size(); ++t) {
          const auto track = static_cast<TrackIndex>(s.tracks.lo + t);
          for (TimeSpan bar : m4_reconstruct(per_track[t], window)) {
            marks.push_back({{track, track}, bar});
          }
        }
      }
      break;
    }
    case Config::kSat: {
      const auto occupancy = sat_query(*s.table, window, s.tracks, o.canvas_px);
      std::string payload = "[";
      for (std::size_t t = 0; t < occupancy.size(); ++t) {
        if (t) payload += ',';
        payload += '[';
        for (std::size_t c = 0; c < occupancy[t].size(); ++c) {
          if (c) payload += ',';
          append_int(payload, occupancy[t][c]);
          out.items += occupancy[t][c] != 0;
        }
        payload += ']';
      }
      payload += ']';
      out.fetch_ns = elapsed_ns(start);
      out.bytes = payload.size();
      if (want_raster) out.raster = rasterize_occupancy(occupancy, frame);
      return out;
    }
    case Config::kEseman1d:
    case Config::kEsemanKdt:
    case Config::kEsemanAgg: {
      RangeQuery q{s.data->dataset->name, window, s.tracks, o.canvas_px, o.pixel_window, s.predicate};
      const QueryResult r = range_query(q, *s.index, s.cache);
      const std::string body = query_response_json(r);
      out.fetch_ns = elapsed_ns(start);
      out.items = r.stats.slices_returned;
      out.bytes = r.stats.bytes_returned;
      if (want_raster) out.raster = rasterize(r.slices, frame);
      return out;
    }
  }
  if (want_raster) out.raster = rasterize(marks, frame);
  return out;
}

double reported_mean(const std::vector<double>& fetch_ms, int warmups) {
  const auto skip = static_cast<std::size_t>(std::max(warmups, 0));
  if (fetch_ms.size() <= skip) return 0.0;
  double sum = 0.0;
  for (std::size_t i = skip; i < fetch_ms.size(); ++i) sum += fetch_ms[i];
  return sum / static_cast<double>(fetch_ms.size() - skip);
}

std::vector<Measurement> run_benchmark(const BenchData& data, const Workload& workload,
                                       const std::vector<Config>& configs,
                                       const BenchOptions& options) {
  const int reps = options.warmups + options.measured;
  if (options.measured <= 0) throw Error("at least one measured repetition is required");

  ConfigRunner truth(Config::kNaive, data, options, workload.predicate);
  std::vector<RasterGrid> truth_rasters;
  for (TimeSpan span : workload.spans) truth_rasters.push_back(truth.run(span, true).raster);

  std::vector<Measurement> rows;
  for (Config config : configs) {
    std::optional<ConfigRunner> runner;
    std::string setup_error;
    try {
      runner.emplace(config, data, options, workload.predicate);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (std::size_t qi = 0; qi < workload.spans.size(); ++qi) {
      Measurement m;
      m.dataset = data.dataset->name;
      m.config = config;
      m.query_id = qi;
      m.kind = workload.kind;
      m.pixel_window = options.pixel_window;
      if (!runner) {
        m.status = "failed: " + setup_error;
        rows.push_back(std::move(m));
        continue;
      }
      try {
        ConfigOutput last;
        for (int rep = 0; rep < reps; ++rep) {
          const auto t0 = std::chrono::steady_clock::now();
          if (options.before_repetition) options.before_repetition(config, rep);
          const std::uint64_t hook_ns = elapsed_ns(t0);
          ConfigOutput o = runner->run(workload.spans[qi], rep == reps - 1);
          m.fetch_ms.push_back(static_cast<double>(hook_ns + o.fetch_ns) / 1e6);
          if (rep == reps - 1) last = std::move(o);
        }
        m.mean_fetch_ms = reported_mean(m.fetch_ms, options.warmups);
        m.slices = last.items;
        m.bytes = last.bytes;
        m.ssim = ssim(last.raster, truth_rasters[qi]);
        if (options.png_dir) {
          export_png(last.raster, *options.png_dir / m.dataset / std::string(config_name(config)) /
                                      (std::to_string(qi) + ".png"));
        }
      } catch (const std::exception& e) {
        m.status = std::string("failed: ") + e.what();
      }
      rows.push_back(std::move(m));
    }
  }
  return rows;
}

namespace {

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<Measurement>& rows) {
  out << "dataset,config,query_id,kind,pixel_window,mean_fetch_ms,ssim,slices,bytes,status\n";
  for (const Measurement& m : rows) {
    std::ostringstream line;
    line << std::setprecision(10);
    line << csv_field(m.dataset) << ',' << config_name(m.config) << ',' << m.query_id << ','
         << query_kind_name(m.kind) << ',' << m.pixel_window << ',' << m.mean_fetch_ms << ','
         << m.ssim << ',' << m.slices << ',' << m.bytes << ',' << csv_field(m.status) << '\n';
    out << line.str();
  }
}

std::size_t Report::flagged() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const ReportCell& c) { return c.over_budget; }));
}

Report report(const std::vector<Measurement>& rows) {
  Report r;
  struct Acc {
    double fetch = 0, ssim = 0;
    std::size_t ok = 0, failed = 0;
  };
  std::vector<std::pair<ReportCell, Acc>> groups;
  for (const Measurement& m : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.first.dataset == m.dataset && g.first.config == m.config && g.first.kind == m.kind;
    });
    if (it == groups.end()) {
      ReportCell c;
      c.dataset = m.dataset;
      c.config = m.config;
      c.kind = m.kind;
      groups.push_back({c, {}});
      it = groups.end() - 1;
    }
    if (m.status == "ok") {
      it->second.fetch += m.mean_fetch_ms;
      it->second.ssim += m.ssim;
      ++it->second.ok;
    } else {
      ++it->second.failed;
    }
  }
  for (auto& [cell, acc] : groups) {
    if (acc.ok) {
      cell.mean_fetch_ms = acc.fetch / static_cast<double>(acc.ok);
      cell.dissimilarity = 1.0 - acc.ssim / static_cast<double>(acc.ok);
    }
    cell.failures = acc.failed;
    cell.over_budget = acc.ok && cell.mean_fetch_ms > kInteractiveBudgetMs;
    r.cells.push_back(cell);
  }
  return r;
}

void write_report(std::ostream& out, const Report& r) {
  out << std::left << std::setw(16) << "dataset" << std::setw(14) << "config" << std::setw(13)
      << "kind" << std::right << std::setw(12) << "fetch_ms" << std::setw(12) << "1-ssim"
      << std::setw(10) << "failed" << "\n";
  for (const ReportCell& c : r.cells) {
    out << std::left << std::setw(16) << c.dataset << std::setw(14) << config_name(c.config)
        << std::setw(13) << query_kind_name(c.kind) << std::right << std::fixed
        << std::setprecision(3) << std::setw(12) << c.mean_fetch_ms << std::setprecision(6)
        << std::setw(12) << c.dissimilarity << std::setw(10) << c.failures
        << (c.over_budget ? "  > 100 ms" : "") << "\n";
  }
  out << std::defaultfloat << r.flagged() << " cell(s) over the " << kInteractiveBudgetMs << " ms budget\n";
}

MemorySnapshot memory_snapshot() {
  MemorySnapshot s;
  std::ifstream in("/proc/self/status");
  std::string line;
  const auto value = [](const std::string& l) {
    std::uint64_t v = 0;
    const auto pos = l.find_first_of("0123456789");
    if (pos != std::string::npos) std::from_chars(l.data() + pos, l.data() + l.size(), v);
    return v;
  };
  while (std::getline(in, line)) {
    if (line.rfind("VmRSS:", 0) == 0) s.resident_kb = value(line);
    if (line.rfind("VmHWM:", 0) == 0) s.peak_resident_kb = value(line);
  }
  return s;
}

}  // namespace eseman
