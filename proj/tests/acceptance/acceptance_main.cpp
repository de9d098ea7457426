// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is non-zero when a binding criterion fails.

#include <omp.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eseman/baselines.hpp"
#include "eseman/bench.hpp"
#include "eseman/index.hpp"
#include "eseman/kernels.hpp"
#include "eseman/node_cache.hpp"
#include "eseman/node_store.hpp"
#include "eseman/query.hpp"
#include "eseman/raster.hpp"
#include "support/testing.hpp"

using namespace eseman;
namespace fs = std::filesystem;

namespace {

// Corpus shared by the accuracy, ordering and conditional criteria.
constexpr int kDatasets = 50;
constexpr std::uint64_t kMinEvents = 1'000;
constexpr std::uint64_t kMaxEvents = 100'000;
constexpr std::uint32_t kMaxTracks = 64;
constexpr std::uint64_t kWorkloadSeed = 100;
constexpr double kAccuracyBudgetSeconds = 300.0;

constexpr double kKdtMinSsim = 0.99;

constexpr std::uint64_t kSweepEvents = 1'000'000;
constexpr std::uint32_t kSweepTracks = 64;
constexpr std::uint32_t kSweepWindows[] = {1, 2, 4, 8, 16};

constexpr double kLatencyBudgetMs = 100.0;
constexpr double kNaiveSlowdown = 2.0;
constexpr int kLatencyWarmups = 10;
constexpr int kLatencyMeasured = 10;
constexpr int kLatencyBindingCores = 4;

constexpr int kOracleInstances = 200;
constexpr std::uint32_t kMaxLinkageEvents = 500;
constexpr std::size_t kReservoirRows = 100'000;
constexpr std::size_t kReservoirK = kDefaultCanvasPx;
constexpr int kReservoirTrials = 10'000;
constexpr double kReservoirMaxBeyond3Sigma = 0.005;
constexpr double kReservoirHardSigma = 6.0;

constexpr int kInvariantCases = 1'000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Verdict {
  bool pass = true;
  bool binding = true;
  std::ostringstream detail;
  std::string first_failure;

  void fail(const std::string& why) {
    if (pass) first_failure = why;
    pass = false;
  }
};

int g_binding_failures = 0;

void emit(const char* id, const char* title, Verdict& v, double secs) {
  std::printf("%s %s %s: %s", v.pass ? "PASS" : "FAIL", id, title, v.detail.str().c_str());
  if (!v.first_failure.empty()) std::printf(" | first failure: %s", v.first_failure.c_str());
  if (!v.binding) std::printf(" | informational on this machine");
  std::printf(" [%.1fs]\n", secs);
  std::fflush(stdout);
  if (!v.pass && v.binding) ++g_binding_failures;
}

struct Corpus {
  fixture::Sample sample;
  Distribution distribution;
  BenchData data;
  std::vector<Tree> kdt_trees;  // kept for the reconstruction check
};

std::vector<Corpus> make_corpus(std::mt19937_64& rng) {
  std::vector<Corpus> out;
  const Distribution dists[] = {Distribution::kSparse, Distribution::kDense, Distribution::kClustered};
  std::uniform_real_distribution<double> log_events(std::log(double(kMinEvents)),
                                                    std::log(double(kMaxEvents)));
  for (int i = 0; i < kDatasets; ++i) {
    Corpus c;
    c.distribution = dists[i % 3];
    const auto events = static_cast<std::uint64_t>(std::llround(std::exp(log_events(rng))));
    const auto tracks = std::uniform_int_distribution<std::uint32_t>(1, kMaxTracks)(rng);
    c.sample = fixture::synthetic_sample(tracks, events, c.distribution, 9000 + i,
                                         "corpus-" + std::to_string(i));
    c.data.dataset = c.sample.dataset;
    c.data.events = std::make_shared<const std::vector<Event>>(c.sample.events);
    for (BuilderKind k : kAllBuilders) {
      auto trees = build_trees(*c.sample.dataset, c.sample.events, k);
      if (k == BuilderKind::kKdt2d) c.kdt_trees = trees;
      c.data.indexes[k] = std::make_shared<const HierIndex>(
          HierIndex::in_memory(c.sample.dataset, k, std::move(trees)));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string where(const Corpus& c, std::size_t q) {
  return c.sample.dataset->name + " (" + std::string(distribution_name(c.distribution)) + ", " +
         std::to_string(c.sample.events.size()) + " events) query " + std::to_string(q);
}

// Per-query rasters for every configuration the accuracy criteria need.
struct AccuracyRun {
  std::uint64_t instances = 0;
  std::uint64_t exact_1d = 0, exact_agg = 0, reference_ok = 0;
  double min_kdt = 1.0, sum_kdt = 0.0;
  double sum_reservoir = 0.0, sum_m4 = 0.0;
  std::uint64_t ordering_ok = 0;
  std::vector<std::string> exact_failures, kdt_failures, ordering_failures, reference_failures;
  double seconds = 0.0;
};

AccuracyRun run_accuracy(const std::vector<Corpus>& corpus) {
  AccuracyRun a;
  const auto start = Clock::now();
  BenchOptions o;
  o.warmups = 0;
  o.measured = 1;
  for (const Corpus& c : corpus) {
    const Dataset& ds = *c.sample.dataset;
    const Workload w = generate_workload(ds, c.sample.events, QueryKind::kRange, kWorkloadSeed);
    std::map<Config, ConfigRunner> runners;
    for (Config cfg : kAllConfigs) {
      if (cfg == Config::kSat) continue;
      runners.emplace(cfg, ConfigRunner(cfg, c.data, o, std::nullopt));
    }
    for (std::size_t q = 0; q < w.spans.size(); ++q) {
      ++a.instances;
      const TimeSpan span = w.spans[q];
      const RasterGrid naive = runners.at(Config::kNaive).run(span, true).raster;
      // The reference itself against a direct footprint scan.
      const Frame frame{span, o.canvas_px, {ds.all_tracks()}};
      const auto hits = fixture::brute_hits(c.sample.events, span, ds.all_tracks());
      if (rasterize(std::span<const Event* const>(hits), frame) == naive) {
        ++a.reference_ok;
      } else {
        a.reference_failures.push_back(where(c, q));
      }
      const RasterGrid r1d = runners.at(Config::kEseman1d).run(span, true).raster;
      const RasterGrid ragg = runners.at(Config::kEsemanAgg).run(span, true).raster;
      const RasterGrid rkdt = runners.at(Config::kEsemanKdt).run(span, true).raster;
      const RasterGrid rres = runners.at(Config::kReservoir).run(span, true).raster;
      const RasterGrid rm4 = runners.at(Config::kM4).run(span, true).raster;
      const bool eq1d = r1d == naive && ssim(naive, r1d) == 1.0;
      const bool eqagg = ragg == naive && ssim(naive, ragg) == 1.0;
      a.exact_1d += eq1d;
      a.exact_agg += eqagg;
      if (!eq1d || !eqagg) a.exact_failures.push_back(where(c, q) + (eq1d ? " agg" : " 1dkdt"));
      const double skdt = ssim(naive, rkdt);
      a.min_kdt = std::min(a.min_kdt, skdt);
      a.sum_kdt += skdt;
      if (skdt < kKdtMinSsim) a.kdt_failures.push_back(where(c, q) + " ssim " + std::to_string(skdt));
      const double s1d = ssim(naive, r1d);
      const double sres = ssim(naive, rres);
      const double sm4 = ssim(naive, rm4);
      a.sum_reservoir += sres;
      a.sum_m4 += sm4;
      if (s1d >= sres && s1d >= sm4) {
        ++a.ordering_ok;
      } else {
        a.ordering_failures.push_back(where(c, q) + " 1d " + std::to_string(s1d) + " reservoir " +
                                      std::to_string(sres) + " m4 " + std::to_string(sm4));
      }
    }
  }
  a.seconds = seconds_since(start);
  return a;
}

// Leaves of the 2D tree reassembled must give back every event whole.
bool kdt_reconstructs(const Corpus& c, std::string& why) {
  std::vector<SummarySlice> slices;
  for (const Tree& t : c.kdt_trees) {
    for (const SummaryNode& n : t.nodes) {
      if (!n.leaf) continue;
      SummarySlice s;
      s.track_span = {n.leaf->track, n.leaf->track};
      s.time_span = n.leaf->span();
      s.event_count = 1;
      s.is_exact_event = true;
      s.event_id = n.leaf->event_id;
      slices.push_back(s);
    }
  }
  const auto whole = assemble_2d_results(std::move(slices));
  if (whole.size() != c.sample.events.size()) {
    why = c.sample.dataset->name + ": " + std::to_string(whole.size()) + " pieces for " +
          std::to_string(c.sample.events.size()) + " events";
    return false;
  }
  for (const SummarySlice& s : whole) {
    const Event& e = c.sample.events.at(s.event_id);
    if (s.time_span != e.span() || s.track_span != TrackRange{e.track, e.track}) {
      why = c.sample.dataset->name + ": event " + std::to_string(e.id) + " not restored";
      return false;
    }
  }
  return true;
}

// Exact slices returned by 2D queries never reach outside their event.
bool kdt_query_slices_within_events(const Corpus& c, std::string& why) {
  const Dataset& ds = *c.sample.dataset;
  const Workload w = generate_workload(ds, c.sample.events, QueryKind::kRange, kWorkloadSeed);
  NodeCache cache;
  for (TimeSpan span : w.spans) {
    const auto r = range_query(fixture::make_query(ds, span), *c.data.indexes.at(BuilderKind::kKdt2d),
                               cache);
    for (const SummarySlice& s : r.slices) {
      if (!s.is_exact_event) continue;
      const Event& e = c.sample.events.at(s.event_id);
      if (s.time_span.begin < e.enter || s.time_span.end > e.leave) {
        why = ds.name + ": slice of event " + std::to_string(e.id) + " exceeds it";
        return false;
      }
    }
  }
  return true;
}

void criterion_pixel_perfect(const AccuracyRun& a) {
  Verdict v;
  v.detail << "1dkdt " << a.exact_1d << "/" << a.instances << " and agg " << a.exact_agg << "/"
           << a.instances << " grid-equal to naive over " << kDatasets
           << " datasets; naive raster equals direct scan on " << a.reference_ok << "/"
           << a.instances << "; corpus run " << a.seconds << " s (budget " << kAccuracyBudgetSeconds
           << " s)";
  if (!a.exact_failures.empty()) v.fail(a.exact_failures.front());
  if (!a.reference_failures.empty()) v.fail("reference mismatch at " + a.reference_failures.front());
  if (a.seconds >= kAccuracyBudgetSeconds) v.fail("corpus run over the time budget");
  emit("C1", "pixel-perfect summarization", v, a.seconds);
}

void criterion_kdt(const AccuracyRun& a, const std::vector<Corpus>& corpus) {
  const auto start = Clock::now();
  Verdict v;
  std::size_t rebuilt = 0, within = 0;
  std::string why;
  for (const Corpus& c : corpus) {
    if (kdt_reconstructs(c, why)) {
      ++rebuilt;
    } else {
      v.fail(why);
    }
    if (kdt_query_slices_within_events(c, why)) {
      ++within;
    } else {
      v.fail(why);
    }
  }
  v.detail << "min ssim " << a.min_kdt << " (need >= " << kKdtMinSsim << "), mean "
           << a.sum_kdt / double(a.instances) << " over " << a.instances
           << " queries; leaf reassembly restores every event in " << rebuilt << "/" << corpus.size()
           << " datasets; query slices inside their events in " << within << "/" << corpus.size();
  if (!a.kdt_failures.empty()) v.fail(a.kdt_failures.front());
  emit("C2", "2D KD-tree accuracy", v, seconds_since(start));
}

void criterion_ordering(const AccuracyRun& a) {
  Verdict v;
  v.detail << "1dkdt >= reservoir and m4 on " << a.ordering_ok << "/" << a.instances
           << " queries; mean ssim reservoir " << a.sum_reservoir / double(a.instances) << ", m4 "
           << a.sum_m4 / double(a.instances);
  if (!a.ordering_failures.empty()) v.fail(a.ordering_failures.front());
  emit("C5", "accuracy ordering", v, 0.0);
}

// Large store-backed dataset for the sweep and latency criteria.
struct LargeSet {
  fs::path root;
  BenchData data;
  Workload workload;

  LargeSet() {
    root = fs::temp_directory_path() / ("eseman_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    auto s = fixture::synthetic_sample(kSweepTracks, kSweepEvents, Distribution::kSparse, 2024,
                                       "sweep");
    Catalog catalog(root);
    catalog.write_dataset(*s.dataset, s.events);
    catalog.build_index(*s.dataset, s.events, BuilderKind::kKdt1d);
    data.dataset = s.dataset;
    data.indexes[BuilderKind::kKdt1d] =
        std::make_shared<const HierIndex>(catalog.open_index(s.dataset, BuilderKind::kKdt1d));
    workload = generate_workload(*s.dataset, s.events, QueryKind::kRange, kWorkloadSeed);
    data.events = std::make_shared<const std::vector<Event>>(std::move(s.events));
  }
  ~LargeSet() { fs::remove_all(root); }
};

void criterion_sweep(const LargeSet& large) {
  const auto start = Clock::now();
  Verdict v;
  const std::size_t n = large.workload.spans.size();
  std::vector<std::vector<Measurement>> by_window;
  for (std::uint32_t pw : kSweepWindows) {
    BenchOptions o;
    o.pixel_window = pw;
    o.warmups = 0;
    o.measured = 1;
    by_window.push_back(run_benchmark(large.data, large.workload, {Config::kEseman1d}, o));
  }
  std::size_t monotone = 0, ssim_ok = 0;
  for (std::size_t q = 0; q < n; ++q) {
    bool ok = true;
    for (std::size_t i = 1; i < by_window.size(); ++i) {
      const Measurement& prev = by_window[i - 1][q];
      const Measurement& cur = by_window[i][q];
      if (cur.status != "ok" || prev.status != "ok") {
        v.fail("query " + std::to_string(q) + ": " + cur.status);
        ok = false;
      } else if (cur.bytes > prev.bytes || cur.slices > prev.slices) {
        v.fail("query " + std::to_string(q) + " pixel window " + std::to_string(kSweepWindows[i]) +
               ": bytes " + std::to_string(prev.bytes) + " -> " + std::to_string(cur.bytes) +
               ", slices " + std::to_string(prev.slices) + " -> " + std::to_string(cur.slices));
        ok = false;
      }
    }
    monotone += ok;
    if (by_window.back()[q].ssim <= by_window.front()[q].ssim) {
      ++ssim_ok;
    } else {
      v.fail("query " + std::to_string(q) + ": ssim rises from window 1 to 16");
    }
  }
  v.detail << kSweepEvents << " sparse events; bytes and slices non-increasing on " << monotone << "/"
           << n << " queries, ssim(16) <= ssim(1) on " << ssim_ok << "/" << n << "; mean per window";
  for (std::size_t i = 0; i < by_window.size(); ++i) {
    double bytes = 0, slices = 0, s = 0;
    for (const auto& m : by_window[i]) {
      bytes += double(m.bytes);
      slices += double(m.slices);
      s += m.ssim;
    }
    v.detail << " [" << kSweepWindows[i] << ": " << std::llround(bytes / double(n)) << " B, "
             << std::llround(slices / double(n)) << " slices, ssim " << s / double(n) << "]";
  }
  emit("C3", "fidelity tradeoff", v, seconds_since(start));
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

void criterion_latency(const LargeSet& large) {
  const auto start = Clock::now();
  Verdict v;
  const int cores = omp_get_num_procs();
  v.binding = cores >= kLatencyBindingCores;
  BenchOptions o;
  o.warmups = kLatencyWarmups;
  o.measured = kLatencyMeasured;
  const auto rows =
      run_benchmark(large.data, large.workload, {Config::kNaive, Config::kEseman1d}, o);
  std::vector<double> naive, fast;
  for (const Measurement& m : rows) {
    if (m.status != "ok") v.fail(std::string(config_name(m.config)) + ": " + m.status);
    (m.config == Config::kNaive ? naive : fast).push_back(m.mean_fetch_ms);
  }
  const double med_fast = median(fast), med_naive = median(naive);
  v.detail << "warm median fetch 1dkdt " << med_fast << " ms (budget " << kLatencyBudgetMs
           << "), naive " << med_naive << " ms, ratio " << med_naive / med_fast << " (need >= "
           << kNaiveSlowdown << "); " << cores << " core(s)";
  if (med_fast >= kLatencyBudgetMs) v.fail("1dkdt median over budget");
  if (med_naive < kNaiveSlowdown * med_fast) v.fail("naive less than 2x slower");
  emit("C4", "latency budget", v, seconds_since(start));
}

// Merge order from the fast path against exhaustive single linkage.
void check_linkage(Verdict& v, std::mt19937_64& rng, int& passed) {
  for (int c = 0; c < kOracleInstances; ++c) {
    fixture::RandomShape shape;
    shape.tracks = 1;
    shape.events = std::uniform_int_distribution<std::uint32_t>(1, kMaxLinkageEvents)(rng);
    shape.extent = std::uniform_int_distribution<Timestamp>(10, 10'000'000)(rng);
    const auto s = fixture::random_sample(50'000 + c, shape);
    EventRefs refs = event_refs(s.events);
    sort_events(refs);
    std::vector<TimeSpan> spans;
    for (const Event* e : refs) spans.push_back(e->span());
    if (agglomerative_merges(refs) == fixture::single_linkage_oracle(spans)) {
      ++passed;
    } else {
      v.fail("linkage instance " + std::to_string(c));
    }
  }
}

void check_m4(Verdict& v, std::mt19937_64& rng, int& passed) {
  for (int c = 0; c < kOracleInstances; ++c) {
    fixture::RandomShape shape;
    shape.tracks = 2;
    shape.events = std::uniform_int_distribution<std::uint32_t>(0, 2000)(rng);
    shape.extent = std::uniform_int_distribution<Timestamp>(10, 10'000'000)(rng);
    shape.numeric = false;
    const auto s = fixture::random_sample(60'000 + c, shape);
    const TimeSpan w = fixture::random_window(rng, 0, shape.extent, 1, shape.extent);
    const auto bins = std::uniform_int_distribution<std::uint32_t>(1, kDefaultCanvasPx)(rng);
    const auto rows = naive_query(s.events, w, TrackRange{1, 1});
    if (m4_query(rows, bins, w) == fixture::m4_sql_oracle(s.events, 1, bins, w)) {
      ++passed;
    } else {
      v.fail("m4 instance " + std::to_string(c));
    }
  }
}

void check_sat(Verdict& v, std::mt19937_64& rng, int& passed) {
  for (int c = 0; c < kOracleInstances; ++c) {
    fixture::RandomShape shape;
    shape.tracks = std::uniform_int_distribution<std::uint32_t>(1, 6)(rng);
    shape.events = std::uniform_int_distribution<std::uint32_t>(1, 400)(rng);
    shape.extent = std::uniform_int_distribution<Timestamp>(100, 1'000'000)(rng);
    shape.numeric = false;
    const auto s = fixture::random_sample(70'000 + c, shape);
    const auto bins = std::uniform_int_distribution<std::uint32_t>(1, 512)(rng);
    const auto table = BinnedTable::build(*s.dataset, s.events, bins);
    const auto px = std::uniform_int_distribution<std::uint32_t>(1, 64)(rng);
    const Timestamp min_len = table.bin_width() * px;
    const TimeSpan x = s.dataset->time_extent;
    const TimeSpan w =
        fixture::random_window(rng, x.begin - 50, x.end + min_len + 50, min_len, 4 * min_len);
    const TrackRange tracks = s.dataset->all_tracks();
    if (sat_query(table, w, tracks, px) ==
        fixture::sat_brute(s.events, table.origin(), table.bin_width(), table.bins(), w, tracks, px)) {
      ++passed;
    } else {
      v.fail("sat instance " + std::to_string(c));
    }
  }
}

void check_reservoir(Verdict& v, double& beyond3_fraction, double& worst_sigma, bool& replay) {
  std::vector<EventRow> rows;
  rows.reserve(kReservoirRows);
  for (EventId i = 0; i < kReservoirRows; ++i) rows.push_back({i, 0, Timestamp(i), Timestamp(i + 1)});
  replay = reservoir_query(rows, kReservoirK) == reservoir_query(rows, kReservoirK);
  if (!replay) v.fail("reservoir replay differs");
  std::vector<std::uint32_t> hits(kReservoirRows, 0);
  for (int t = 0; t < kReservoirTrials; ++t) {
    for (const EventRow& r : reservoir_query(rows, kReservoirK, 1'000'000 + t)) ++hits[r.id];
  }
  const double p = double(kReservoirK) / double(kReservoirRows);
  const double mean = kReservoirTrials * p;
  const double sigma = std::sqrt(kReservoirTrials * p * (1 - p));
  std::size_t beyond3 = 0;
  worst_sigma = 0;
  for (std::uint32_t h : hits) {
    const double z = std::abs(double(h) - mean) / sigma;
    worst_sigma = std::max(worst_sigma, z);
    beyond3 += z > 3.0;
  }
  beyond3_fraction = double(beyond3) / double(kReservoirRows);
  if (beyond3_fraction > kReservoirMaxBeyond3Sigma) v.fail("too many rows beyond 3 sigma");
  if (worst_sigma > kReservoirHardSigma) v.fail("a row beyond 6 sigma");
}

void criterion_oracles() {
  const auto start = Clock::now();
  Verdict v;
  std::mt19937_64 rng(606);
  int linkage = 0, m4 = 0, sat = 0;
  check_linkage(v, rng, linkage);
  check_m4(v, rng, m4);
  check_sat(v, rng, sat);
  double beyond3 = 0, worst = 0;
  bool replay = false;
  check_reservoir(v, beyond3, worst, replay);
  v.detail << "linkage " << linkage << "/" << kOracleInstances << ", m4 vs SQL " << m4 << "/"
           << kOracleInstances << ", sat vs per-bin " << sat << "/" << kOracleInstances
           << ", reservoir replay " << (replay ? "identical" : "differs") << ", "
           << 100.0 * beyond3 << "% of " << kReservoirRows << " rows beyond 3 sigma over "
           << kReservoirTrials << " trials (allow " << 100.0 * kReservoirMaxBeyond3Sigma
           << "%), worst " << worst << " sigma";
  emit("C6", "oracle equivalences", v, seconds_since(start));
}

// Structural invariants, each over kInvariantCases random inputs.
fixture::Sample invariant_sample(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  fixture::RandomShape shape;
  shape.tracks = std::uniform_int_distribution<std::uint32_t>(1, 5)(rng);
  shape.events = std::uniform_int_distribution<std::uint32_t>(1, 120)(rng);
  shape.extent = std::uniform_int_distribution<Timestamp>(2, 100'000)(rng);
  return fixture::random_sample(seed, shape);
}

struct TreeChecks {
  std::size_t balance = 0, hull = 0, partition = 0, attrs = 0;
};

void check_tree(const Tree& t, const fixture::Sample& s, Verdict& v, TreeChecks& ok,
                std::optional<TrackIndex> track) {
  bool balance = true, hull_ok = true, attrs_ok = true;
  std::vector<AttrSummary> from_leaves(t.nodes.size());
  for (std::size_t i = t.nodes.size(); i-- > 0;) {
    const SummaryNode& n = t.nodes[i];
    if (n.is_leaf()) {
      hull_ok &= n.leaf && n.time_span == footprint(n.leaf->span()) && n.event_count == 1;
      from_leaves[i] = AttrSummary::of_event(s.events.at(n.leaf->event_id).attrs, s.dataset->attrs);
      continue;
    }
    const SummaryNode& l = t.at(*n.left);
    const SummaryNode& r = t.at(*n.right);
    hull_ok &= n.time_span == hull(l.time_span, r.time_span) &&
               n.track_span == hull(l.track_span, r.track_span) &&
               n.event_count == l.event_count + r.event_count;
    if (t.kind == BuilderKind::kKdt1d) balance &= r.event_count - l.event_count <= 1 && r.event_count >= l.event_count;
    from_leaves[i] = from_leaves[l.key.preorder];
    from_leaves[i].merge(from_leaves[r.key.preorder]);
  }
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& want = from_leaves[i].entries();
    const auto& got = t.nodes[i].attrs.entries();
    attrs_ok &= want.size() == got.size();
    for (std::size_t k = 0; attrs_ok && k < want.size(); ++k) {
      attrs_ok &= want[k].key == got[k].key && want[k].values == got[k].values &&
                  want[k].stats.count == got[k].stats.count && want[k].stats.min == got[k].stats.min &&
                  want[k].stats.max == got[k].stats.max &&
                  std::abs(want[k].stats.mean - got[k].stats.mean) <=
                      1e-9 * std::max(1.0, std::abs(want[k].stats.mean));
    }
  }
  // Leaves: whole events of the track, or for the 2D tree pieces tiling each event.
  std::map<EventId, std::vector<LeafSegment>> pieces;
  for (const SummaryNode& n : t.nodes) {
    if (n.leaf) pieces[n.leaf->event_id].push_back(*n.leaf);
  }
  bool partition = true;
  std::size_t expected = 0;
  for (const Event& e : s.events) {
    if (track && e.track != *track) continue;
    ++expected;
    auto it = pieces.find(e.id);
    if (it == pieces.end()) {
      partition = false;
      continue;
    }
    auto& segs = it->second;
    std::sort(segs.begin(), segs.end(), [](auto& a, auto& b) { return a.enter < b.enter; });
    partition &= segs.front().enter == e.enter && segs.back().leave == e.leave;
    if (track) partition &= segs.size() == 1;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      partition &= segs[i].track == e.track;
      if (i) partition &= segs[i - 1].leave == segs[i].enter;
    }
  }
  partition &= pieces.size() == expected;
  if (t.kind == BuilderKind::kKdt1d) {
    ok.balance += balance;
    if (!balance) v.fail("fair split unbalanced");
  }
  ok.hull += hull_ok;
  ok.attrs += attrs_ok;
  ok.partition += partition;
  if (!hull_ok) v.fail(std::string(builder_name(t.kind)) + " hull mismatch");
  if (!attrs_ok) v.fail(std::string(builder_name(t.kind)) + " attribute union mismatch");
  if (!partition) v.fail(std::string(builder_name(t.kind)) + " leaves do not partition events");
}

SummaryNode random_node(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint32_t> u32;
  std::uniform_int_distribution<Timestamp> ts(0, Timestamp{1} << 52);
  SummaryNode n;
  n.key = {u32(rng), u32(rng)};
  n.time_span.begin = ts(rng);
  n.time_span.end = n.time_span.begin + ts(rng);
  n.track_span.lo = u32(rng) % 1000;
  n.track_span.hi = n.track_span.lo + u32(rng) % 1000;
  n.event_count = u32(rng);
  if (u32(rng) % 2) {
    n.left = NodeKey{u32(rng), u32(rng)};
    n.right = NodeKey{u32(rng), u32(rng)};
  } else {
    n.leaf = LeafSegment{u32(rng), u32(rng), ts(rng), ts(rng)};
  }
  const int keys = int(u32(rng) % 5);
  for (int k = 0; k < keys; ++k) {
    AttrEntry e;
    e.key = static_cast<AttrKey>(2 * k + u32(rng) % 2);
    if (u32(rng) % 2) {
      e.kind = AttrKind::kNumeric;
      e.stats.min = std::uniform_real_distribution<double>(-1e12, 1e12)(rng);
      e.stats.max = e.stats.min + 1;
      e.stats.mean = e.stats.min + 0.5;
      e.stats.count = u32(rng);
    } else {
      std::set<ValueId> vals;
      for (int i = int(u32(rng) % 6); i > 0; --i) vals.insert(u32(rng) % 500);
      e.values.assign(vals.begin(), vals.end());
    }
    n.attrs.mutable_entries().push_back(std::move(e));
  }
  return n;
}

void criterion_invariants() {
  const auto start = Clock::now();
  Verdict v;
  TreeChecks ok;
  std::size_t trees = 0;
  for (int c = 0; c < kInvariantCases; ++c) {
    const auto s = invariant_sample(80'000 + c);
    for (BuilderKind k : kAllBuilders) {
      for (const Tree& t : build_trees(*s.dataset, s.events, k)) {
        ++trees;
        check_tree(t, s, v, ok,
                   k == BuilderKind::kKdt2d ? std::nullopt : std::optional<TrackIndex>(t.tree_id));
      }
    }
  }

  // Cache: after every query exactly the touched set remains.
  const auto s = invariant_sample(99);
  const auto forest = build_trees(*s.dataset, s.events, BuilderKind::kKdt1d);
  TreeSource src(forest);
  std::vector<NodeKey> keys;
  for (const Tree& t : forest) {
    for (const SummaryNode& n : t.nodes) keys.push_back(n.key);
  }
  std::mt19937_64 rng(707);
  NodeCache cache;
  std::set<std::uint64_t> previous;
  int cache_ok = 0;
  for (int q = 0; q < kInvariantCases; ++q) {
    std::set<std::uint64_t> touched;
    for (int i = std::uniform_int_distribution<int>(0, 40)(rng); i > 0; --i) {
      const NodeKey k = keys[std::uniform_int_distribution<std::size_t>(0, keys.size() - 1)(rng)];
      touched.insert(k.packed());
      cache.get(src, k);
    }
    std::size_t gone = 0;
    for (auto k : previous) gone += touched.count(k) == 0;
    bool good = cache.end_query_evict() == gone && cache.size() == touched.size();
    for (auto k : touched) good &= cache.contains(NodeKey::unpack(k));
    cache_ok += good;
    if (!good) v.fail("cache eviction at query " + std::to_string(q));
    previous = std::move(touched);
  }

  // Codec: random nodes and every node of a built tree survive the round trip.
  int codec_ok = 0;
  for (int c = 0; c < kInvariantCases; ++c) {
    const SummaryNode n = random_node(rng);
    const bool good = decode_node(encode_node(n)) == n;
    codec_ok += good;
    if (!good) v.fail("codec case " + std::to_string(c));
  }
  std::size_t tree_nodes = 0;
  for (const Tree& t : forest) {
    for (const SummaryNode& n : t.nodes) {
      ++tree_nodes;
      if (decode_node(encode_node(n)) != n) v.fail("codec tree node");
    }
  }

  v.detail << "over " << kInvariantCases << " random datasets (" << trees
           << " trees): fair-split balance " << ok.balance << " 1dkdt trees, hull " << ok.hull
           << ", leaf partition " << ok.partition << ", attribute union " << ok.attrs
           << " trees pass; cache exact eviction " << cache_ok << "/" << kInvariantCases
           << " queries; codec round trip " << codec_ok << "/" << kInvariantCases
           << " random nodes plus " << tree_nodes << " tree nodes";
  emit("C7", "structural invariants", v, seconds_since(start));
}

// Per track, intervals sorted by begin with the running max of end, for
// "does any interval meet [a, b)" lookups.
struct CoverIndex {
  std::map<TrackIndex, std::vector<std::pair<Timestamp, Timestamp>>> by_track;

  void add(TrackRange tracks, TimeSpan span) {
    const TimeSpan f = footprint(span);
    for (TrackIndex t = tracks.lo; t <= tracks.hi; ++t) by_track[t].push_back({f.begin, f.end});
  }
  void seal() {
    for (auto& [t, v] : by_track) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 1; i < v.size(); ++i) v[i].second = std::max(v[i].second, v[i - 1].second);
    }
  }
  bool covers(TrackIndex t, TimeSpan span) const {
    const auto it = by_track.find(t);
    if (it == by_track.end()) return false;
    const TimeSpan f = footprint(span);
    const auto& v = it->second;
    const auto end = std::lower_bound(v.begin(), v.end(), std::pair{f.end, Timestamp{0}});
    return end != v.begin() && std::prev(end)->second > f.begin;
  }
};

void criterion_conditional(const std::vector<Corpus>& corpus) {
  const auto start = Clock::now();
  Verdict v;
  std::uint64_t matches = 0, covered = 0, slices = 0, sound = 0, summaries = 0, within = 0;
  double worst_ratio = 0.0;
  for (const Corpus& c : corpus) {
    const Dataset& ds = *c.sample.dataset;
    const Workload w = generate_workload(ds, c.sample.events, QueryKind::kConditional, kWorkloadSeed);
    const AttrKey key = *ds.attrs.find_key(w.predicate->key);
    const ValueId value = *ds.attrs.find_value(key, w.predicate->value);
    const AttrMatch match{key, value};
    for (BuilderKind k : kAllBuilders) {
      const HierIndex& index = *c.data.indexes.at(k);
      NodeCache cache;
      for (std::size_t q = 0; q < w.spans.size(); ++q) {
        RangeQuery rq = fixture::make_query(ds, w.spans[q]);
        rq.predicate = w.predicate;
        const auto r = conditional_range_query(rq, index, cache);
        CoverIndex slice_cover, match_cover;
        for (const SummarySlice& s : r.slices) {
          ++slices;
          if (s.attrs.contains(key, value)) {
            ++sound;
          } else {
            v.fail(where(c, q) + " " + std::string(builder_name(k)) + " slice lacks the value");
          }
          slice_cover.add(s.track_span, s.time_span);
        }
        slice_cover.seal();
        std::vector<const Event*> hits;
        for (const Event* e : fixture::brute_hits(c.sample.events, rq.window, rq.tracks)) {
          if (!match(*e)) continue;
          hits.push_back(e);
          ++matches;
          if (slice_cover.covers(e->track, e->span())) {
            ++covered;
          } else {
            v.fail(where(c, q) + " " + std::string(builder_name(k)) + " misses event " +
                   std::to_string(e->id));
          }
        }
        if (k == BuilderKind::kKdt2d) continue;
        // Time a summary spends outside matching events, against one column.
        std::map<TrackIndex, std::vector<TimeSpan>> match_spans;
        for (const Event* e : hits) match_spans[e->track].push_back(footprint(e->span()));
        for (auto& [t, spans] : match_spans) {
          std::sort(spans.begin(), spans.end(), [](TimeSpan a, TimeSpan b) { return a.begin < b.begin; });
        }
        const double column = double(rq.window.length()) / rq.canvas_px;
        for (const SummarySlice& s : r.slices) {
          if (s.is_exact_event) continue;
          ++summaries;
          const TimeSpan box = footprint(s.time_span);
          Timestamp inside = 0, cursor = box.begin;
          for (const TimeSpan& m : match_spans[s.track_span.lo]) {
            if (m.begin >= box.end) break;
            const Timestamp b = std::max(m.begin, cursor), e = std::min(m.end, box.end);
            if (b < e) {
              inside += e - b;
              cursor = e;
            }
          }
          const double over = double(box.length() - inside);
          worst_ratio = std::max(worst_ratio, over / column);
          if (over < column) {
            ++within;
          } else {
            v.fail(where(c, q) + " " + std::string(builder_name(k)) + " over-covers " +
                   std::to_string(over) + " ns with a " + std::to_string(column) + " ns column");
          }
        }
      }
    }
  }
  v.detail << kDatasets << " conditional workloads x 3 builders: " << covered << "/" << matches
           << " matching events covered, " << sound << "/" << slices
           << " slices carry the value; per-track summaries over-cover less than one column in "
           << within << "/" << summaries << " (worst " << worst_ratio << " column)";
  emit("C8", "conditional completeness", v, seconds_since(start));
}

}  // namespace

int main() {
  std::printf("acceptance: %d core(s), %d OpenMP thread(s)\n", omp_get_num_procs(),
              omp_get_max_threads());
  std::mt19937_64 rng(4242);
  auto t = Clock::now();
  const auto corpus = make_corpus(rng);
  std::uint64_t total = 0;
  for (const auto& c : corpus) total += c.sample.events.size();
  std::printf("corpus: %d datasets, %llu events, built in %.1fs\n", kDatasets,
              static_cast<unsigned long long>(total), seconds_since(t));

  const AccuracyRun accuracy = run_accuracy(corpus);
  criterion_pixel_perfect(accuracy);
  criterion_kdt(accuracy, corpus);
  criterion_ordering(accuracy);

  t = Clock::now();
  {
    const LargeSet large;
    std::printf("large set: %llu events, index built and opened in %.1fs\n",
                static_cast<unsigned long long>(large.data.events->size()), seconds_since(t));
    criterion_sweep(large);
    criterion_latency(large);
  }
  criterion_oracles();
  criterion_invariants();
  criterion_conditional(corpus);

  std::printf("%d binding criterion failure(s)\n", g_binding_failures);
  return g_binding_failures == 0 ? 0 : 1;
}
