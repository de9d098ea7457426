#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eseman/baselines.hpp"
#include "eseman/index.hpp"
#include "eseman/query.hpp"
#include "eseman/raster.hpp"

namespace eseman {

enum class Config { kNaive, kSat, kReservoir, kM4, kEseman1d, kEsemanKdt, kEsemanAgg };

inline constexpr std::array<Config, 7> kAllConfigs{Config::kNaive,    Config::kSat,
                                                   Config::kReservoir, Config::kM4,
                                                   Config::kEseman1d, Config::kEsemanKdt,
                                                   Config::kEsemanAgg};

// naive | sat | reservoir | m4 | eseman-1dkdt | eseman-kdt | eseman-agg
std::string_view config_name(Config c);
std::optional<Config> parse_config(std::string_view s);
std::optional<BuilderKind> config_builder(Config c);

enum class QueryKind { kRange, kConditional };
std::string_view query_kind_name(QueryKind k);
std::optional<QueryKind> parse_query_kind(std::string_view s);

struct Workload {
  std::string dataset;
  QueryKind kind = QueryKind::kRange;
  std::uint64_t seed = 0;
  std::vector<TimeSpan> spans;  // pairwise disjoint, in draw order
  std::optional<Predicate> predicate;

  friend bool operator==(const Workload&, const Workload&) = default;
};

struct WorkloadOptions {
  std::size_t count = 20;
  Timestamp min_span = kDefaultCanvasPx;  // keeps every pixel at least 1 ns wide
  std::size_t max_attempts = 100'000;
};

// Spans are drawn uniformly inside the dataset extent with lengths in
// [min_span, extent / count] and redrawn on overlap. Conditional workloads
// use the most frequent value of the first categorical attribute and redraw
// spans holding no matching event. Throws Error when the constraints cannot
// be met within max_attempts draws.
Workload generate_workload(const Dataset& ds, const std::vector<Event>& events, QueryKind kind,
                           std::uint64_t seed, const WorkloadOptions& options = {});

// Loaded data and indexes a benchmark runs against.
struct BenchData {
  std::shared_ptr<const Dataset> dataset;
  std::shared_ptr<const std::vector<Event>> events;  // id order
  std::map<BuilderKind, std::shared_ptr<const HierIndex>> indexes;
};

struct BenchOptions {
  std::uint32_t canvas_px = kDefaultCanvasPx;
  std::uint32_t pixel_window = 1;
  int warmups = 10;
  int measured = 10;
  std::uint32_t sat_bins = 1u << 16;
  std::uint64_t reservoir_seed = kDefaultReservoirSeed;
  // Called before each repetition (0-based); lets tests perturb timing.
  std::function<void(Config, int)> before_repetition;
  // When set, rasters are written to <png_dir>/<dataset>/<config>/<query-id>.png.
  std::optional<std::filesystem::path> png_dir;
};

// What one configuration returns for one query.
struct ConfigOutput {
  std::uint64_t fetch_ns = 0;  // query plus serialization
  RasterGrid raster;           // empty unless requested
  std::uint64_t items = 0;  // slices, rows or occupied columns
  std::uint64_t bytes = 0;  // serialized result size
};

// Per-configuration prepared state (caches, tables). Not thread-safe.
class ConfigRunner {
 public:
  ConfigRunner(Config config, const BenchData& data, const BenchOptions& options,
               std::optional<Predicate> predicate);
  ~ConfigRunner();
  ConfigRunner(ConfigRunner&&) noexcept;

  Config config() const { return config_; }
  // Runs one query and serializes the result; fetch_ns times exactly that.
  // Rasterizing, when asked for, happens afterwards.
  ConfigOutput run(TimeSpan window, bool want_raster);

 private:
  struct State;
  Config config_;
  std::unique_ptr<State> state_;
};

struct Measurement {
  std::string dataset;
  Config config = Config::kNaive;
  std::size_t query_id = 0;
  QueryKind kind = QueryKind::kRange;
  std::uint32_t pixel_window = 1;
  std::vector<double> fetch_ms;  // every repetition, warmups first
  double mean_fetch_ms = 0.0;
  double ssim = 0.0;
  std::uint64_t slices = 0;
  std::uint64_t bytes = 0;
  std::string status = "ok";
};

// Mean of the repetitions after the first `warmups`.
double reported_mean(const std::vector<double>& fetch_ms, int warmups);

// Runs every config on every workload span: warmups, then measured
// repetitions; SSIM once per (config, query) against the naive raster. A
// config that throws is recorded with a failed status and the run goes on.
std::vector<Measurement> run_benchmark(const BenchData& data, const Workload& workload,
                                       const std::vector<Config>& configs,
                                       const BenchOptions& options = {});

// Columns: dataset, config, query_id, kind, pixel_window, mean_fetch_ms, ssim,
// slices, bytes, status
void write_csv(std::ostream& out, const std::vector<Measurement>& rows);

inline constexpr double kInteractiveBudgetMs = 100.0;

struct ReportCell {
  std::string dataset;
  Config config = Config::kNaive;
  QueryKind kind = QueryKind::kRange;
  double mean_fetch_ms = 0.0;
  double dissimilarity = 0.0;  // 1 - mean ssim
  std::size_t failures = 0;
  bool over_budget = false;
};

struct Report {
  std::vector<ReportCell> cells;
  std::size_t flagged() const;
};

Report report(const std::vector<Measurement>& rows);
void write_report(std::ostream& out, const Report& r);

struct MemorySnapshot {
  std::uint64_t resident_kb = 0;
  std::uint64_t peak_resident_kb = 0;
};

MemorySnapshot memory_snapshot();

}  // namespace eseman
