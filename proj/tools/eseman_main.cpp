// eseman: ingest traces, synthesize datasets, build indexes, run the
// benchmark protocol and serve queries.

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "eseman/bench.hpp"
#include "eseman/error.hpp"
#include "eseman/index.hpp"
#include "eseman/ingest.hpp"
#include "eseman/server.hpp"
#include "eseman/wire.hpp"

using namespace eseman;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<BuilderKind> parse_builders(const std::string& list) {
  std::vector<BuilderKind> out;
  for (const auto& name : split_list(list)) {
    const auto b = parse_builder(name);
    if (!b) throw Error("unknown builder '" + name + "' (expected 1dkdt, kdt or agg)");
    out.push_back(*b);
  }
  return out;
}

void build_indexes(Catalog& catalog, const Dataset& ds, const std::vector<Event>& events,
                   const std::vector<BuilderKind>& builders, std::uint64_t map_size) {
  for (BuilderKind b : builders) {
    const auto nodes = catalog.build_index(ds, events, b, map_size);
    std::cerr << "  " << builder_name(b) << ": " << nodes << " nodes\n";
  }
}

QueryServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-sequence data manager"};
  app.require_subcommand(1);

  std::string store_dir = "store";
  std::uint64_t map_size = std::uint64_t{2} << 30;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Parse a trace file into the store and index it");
  std::string trace_path, name, schema_text, builders_text = "1dkdt,kdt,agg";
  ingest->add_option("file", trace_path, "Line-delimited trace")->required()->check(CLI::ExistingFile);
  ingest->add_option("--name", name, "Dataset name")->required();
  ingest->add_option("--schema", schema_text, "Attributes to keep, e.g. function,bytes:numeric");
  ingest->add_option("--store-dir", store_dir, "Store directory");
  ingest->add_option("--builders", builders_text, "Indexes to build");
  ingest->add_option("--map-size", map_size, "Node store map size in bytes");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic trace");
  SynthSpec spec;
  std::string dist = "sparse", out_path, profile;
  std::uint64_t scale_down = 1;
  synth->add_option("--tracks", spec.tracks, "Track count");
  synth->add_option("--events", spec.events, "Event count");
  synth->add_option("--dist", dist, "clustered | sparse | dense");
  synth->add_option("--seed", spec.seed, "Generator seed");
  synth->add_option("--profile", profile, "Use the shape of an evaluation trace (dgemm, kmeans, ...)");
  synth->add_option("--scale-down", scale_down, "Divide the profile's event count");
  synth->add_option("--out", out_path, "Output file")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Benchmark protocol");
  bench->require_subcommand(1);
  auto* bench_run = bench->add_subcommand("run", "Run a seeded workload against configurations");
  std::string bench_dataset, configs_text = "naive,sat,reservoir,m4,eseman-1dkdt,eseman-kdt,eseman-agg";
  std::string kind_text = "range", csv_path, png_dir;
  std::uint64_t bench_seed = 100;
  BenchOptions options;
  bench_run->add_option("--dataset", bench_dataset, "Dataset name")->required();
  bench_run->add_option("--configs", configs_text, "Comma-separated configurations");
  bench_run->add_option("--kind", kind_text, "range | conditional");
  bench_run->add_option("--seed", bench_seed, "Workload seed");
  bench_run->add_option("--pixel-window", options.pixel_window, "Pixel window");
  bench_run->add_option("--canvas-px", options.canvas_px, "Canvas width in pixels");
  bench_run->add_option("--warmups", options.warmups, "Unmeasured repetitions");
  bench_run->add_option("--measured", options.measured, "Measured repetitions");
  bench_run->add_option("--sat-bins", options.sat_bins, "Bins per track for the SAT table");
  bench_run->add_option("--png-dir", png_dir, "Write rasters under this directory");
  bench_run->add_option("--out", csv_path, "CSV output")->required();
  bench_run->add_option("--store-dir", store_dir, "Store directory");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve datasets over HTTP");
  int port = 8080;
  std::string host = "127.0.0.1";
  bool reject_busy = false;
  serve->add_option("--port", port, "Port (0 picks one)");
  serve->add_option("--host", host, "Address to bind");
  serve->add_option("--store-dir", store_dir, "Store directory");
  serve->add_flag("--reject-busy", reject_busy, "Answer 409 instead of queueing per session");

  // query
  auto* query = app.add_subcommand("query", "Run one query against the store and print JSON");
  std::string q_dataset, q_builder = "1dkdt", q_key, q_value;
  Timestamp q_begin = 0, q_end = 0;
  std::optional<TrackIndex> q_lo, q_hi;
  std::uint32_t q_canvas = kDefaultCanvasPx, q_pw = 1;
  query->add_option("--dataset", q_dataset, "Dataset name")->required();
  query->add_option("--begin", q_begin, "Window begin (ns)")->required();
  query->add_option("--end", q_end, "Window end (ns)")->required();
  query->add_option("--track-lo", q_lo, "First track");
  query->add_option("--track-hi", q_hi, "Last track");
  query->add_option("--canvas-px", q_canvas, "Canvas width");
  query->add_option("--pixel-window", q_pw, "Pixel window");
  query->add_option("--builder", q_builder, "1dkdt | kdt | agg");
  query->add_option("--attr-key", q_key, "Predicate attribute");
  query->add_option("--attr-value", q_value, "Predicate value");
  query->add_option("--store-dir", store_dir, "Store directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      std::ifstream in(trace_path, std::ios::binary);
      ParseOptions po;
      po.name = name;
      if (!schema_text.empty()) po.schema = parse_schema(schema_text);
      ParsedTrace parsed = parse_trace(in, po);
      for (const auto& r : parsed.rejected) {
        std::cerr << trace_path << ":" << r.line << ": rejected: " << r.reason << "\n";
      }
      std::cerr << parsed.dataset.name << ": " << parsed.dataset.tracks.size() << " tracks, "
                << parsed.events.size() << " events, " << parsed.rejected.size() << " rejected\n";
      Catalog catalog(store_dir);
      catalog.write_dataset(parsed.dataset, parsed.events);
      build_indexes(catalog, parsed.dataset, parsed.events, parse_builders(builders_text), map_size);
      return 0;
    }

    if (*synth) {
      if (!profile.empty()) {
        const auto it = std::find_if(kEvaluationProfiles.begin(), kEvaluationProfiles.end(),
                                     [&](const DatasetProfile& p) { return p.name == profile; });
        if (it == kEvaluationProfiles.end()) throw Error("unknown profile '" + profile + "'");
        const auto seed = spec.seed;
        spec = profile_spec(*it, seed, scale_down);
      } else {
        const auto d = parse_distribution(dist);
        if (!d) throw Error("unknown distribution '" + dist + "'");
        spec.distribution = *d;
      }
      const auto records = generate_synthetic(spec);
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write " + out_path);
      for (const auto& r : records) out << encode_record(r) << '\n';
      std::cerr << "wrote " << records.size() << " events on " << spec.tracks << " tracks to "
                << out_path << "\n";
      return 0;
    }

    if (*bench_run) {
      const auto kind = parse_query_kind(kind_text);
      if (!kind) throw Error("unknown kind '" + kind_text + "'");
      std::vector<Config> configs;
      for (const auto& c : split_list(configs_text)) {
        const auto parsed = parse_config(c);
        if (!parsed) throw Error("unknown config '" + c + "'");
        configs.push_back(*parsed);
      }
      if (!png_dir.empty()) options.png_dir = png_dir;

      Catalog catalog(store_dir);
      BenchData data;
      auto ds = std::make_shared<const Dataset>(catalog.load_dataset(bench_dataset));
      data.dataset = ds;
      data.events = std::make_shared<const std::vector<Event>>(catalog.load_events(*ds));
      for (Config c : configs) {
        if (const auto b = config_builder(c); b && catalog.has_index(ds->name, *b)) {
          data.indexes.emplace(*b, std::make_shared<const HierIndex>(catalog.open_index(ds, *b)));
        }
      }
      const Workload w = generate_workload(*ds, *data.events, *kind, bench_seed);
      const auto rows = run_benchmark(data, w, configs, options);
      std::ofstream csv(csv_path, std::ios::trunc);
      if (!csv) throw Error("cannot write " + csv_path);
      write_csv(csv, rows);
      write_report(std::cout, report(rows));
      const MemorySnapshot mem = memory_snapshot();
      std::cout << "memory: resident " << mem.resident_kb << " kB, peak " << mem.peak_resident_kb
                << " kB\n";
      return 0;
    }

    if (*serve) {
      QueryService service(Catalog(store_dir), reject_busy ? BusyPolicy::kReject : BusyPolicy::kQueue);
      QueryServer server(service);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << store_dir << " on http://" << host << ":" << bound << "\n";
      server.serve();
      g_server = nullptr;
      return 0;
    }

    if (*query) {
      QueryParams p{{"dataset", q_dataset},
                    {"begin", std::to_string(q_begin)},
                    {"end", std::to_string(q_end)},
                    {"canvas_px", std::to_string(q_canvas)},
                    {"pixel_window", std::to_string(q_pw)},
                    {"builder", q_builder}};
      if (q_lo) p.emplace("track_lo", std::to_string(*q_lo));
      if (q_hi) p.emplace("track_hi", std::to_string(*q_hi));
      if (!q_key.empty()) {
        p.emplace("attr_key", q_key);
        p.emplace("attr_value", q_value);
      }
      QueryService service{Catalog(store_dir)};
      const HttpReply r = service.query(p);
      std::cout << r.body << "\n";
      return r.status == 200 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
