#include "eseman/baselines.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include "eseman/error.hpp"

namespace eseman {

__extension__ typedef __int128 i128;

std::vector<EventRow> naive_query(std::span<const Event> events, TimeSpan window,
                                  std::optional<TrackRange> tracks, Execution exec) {
  const TrackRange all{0, std::numeric_limits<TrackIndex>::max()};
  const auto hits = scan_overlapping(events, window, tracks.value_or(all), exec);
  std::vector<EventRow> rows;
  rows.reserve(hits.size());
  for (std::uint32_t i : hits) {
    const Event& e = events[i];
    rows.push_back({e.id, e.track, e.enter, e.leave});
  }
  return rows;
}

bool AttrMatch::operator()(const Event& e) const {
  return std::any_of(e.attrs.begin(), e.attrs.end(),
                     [&](const EventAttr& a) { return a.key == key && a.value == value; });
}

std::vector<EventRow> naive_query(std::span<const Event> events, TimeSpan window,
                                  std::optional<TrackRange> tracks, AttrMatch match,
                                  Execution exec) {
  const TrackRange all{0, std::numeric_limits<TrackIndex>::max()};
  const auto hits = scan_overlapping(events, window, tracks.value_or(all), exec);
  std::vector<EventRow> rows;
  for (std::uint32_t i : hits) {
    const Event& e = events[i];
    if (match(e)) rows.push_back({e.id, e.track, e.enter, e.leave});
  }
  return rows;
}

std::pair<std::uint32_t, std::uint32_t> BinnedTable::covering_bins(TimeSpan s) const {
  const auto clamp_bin = [&](i128 b) {
    return static_cast<std::uint32_t>(std::clamp<i128>(b, 0, bins_));
  };
  const i128 lo = s.begin - origin_;
  const i128 hi = s.end - origin_;
  const i128 w = bin_width_;
  const i128 first = lo >= 0 ? lo / w : -((-lo + w - 1) / w);
  const i128 past = hi >= 0 ? (hi + w - 1) / w : -((-hi) / w);
  return {clamp_bin(first), clamp_bin(past)};
}

// Shared by build and build_filtered.
struct BinnedTableBuilder {
  template <typename Keep>
  static BinnedTable run(const Dataset& ds, std::span<const Event> events, std::uint32_t bins,
                         Execution exec, Keep&& keep);
};

template <typename Keep>
BinnedTable BinnedTableBuilder::run(const Dataset& ds, std::span<const Event> events,
                                    std::uint32_t bins, Execution exec, Keep&& keep) {
  if (bins == 0) throw Error("binned table needs at least one bin");
  BinnedTable t;
  t.bins_ = bins;
  t.origin_ = ds.time_extent.begin;
  // One extra nanosecond so zero-width events at the extent end are covered.
  const Timestamp span = std::max<Timestamp>(1, ds.time_extent.length() + 1);
  t.bin_width_ = std::max<Timestamp>(1, (span + bins - 1) / bins);

  std::vector<std::vector<std::uint32_t>> by_track(ds.tracks.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (keep(events[i])) by_track.at(events[i].track).push_back(static_cast<std::uint32_t>(i));
  }
  t.presence_.assign(ds.tracks.size(), {});
  t.duration_.assign(ds.tracks.size(), {});

  const Timestamp w = t.bin_width_;
  const auto build_track = [&](std::size_t tr) {
    std::vector<std::int64_t> count_diff(bins + 1, 0);
    std::vector<std::int64_t> full_diff(bins + 1, 0);
    std::vector<double> partial(bins, 0.0);
    for (std::uint32_t i : by_track[tr]) {
      const Event& e = events[i];
      const auto [first, past] = t.covering_bins(footprint(e.span()));
      if (first >= past) continue;
      ++count_diff[first];
      --count_diff[past];
      if (e.enter == e.leave) continue;
      const Timestamp first_end = t.origin_ + static_cast<Timestamp>(first + 1) * w;
      if (past - first == 1) {
        partial[first] += static_cast<double>(e.leave - e.enter);
        continue;
      }
      const Timestamp last_begin = t.origin_ + static_cast<Timestamp>(past - 1) * w;
      partial[first] += static_cast<double>(first_end - e.enter);
      partial[past - 1] += static_cast<double>(e.leave - last_begin);
      ++full_diff[first + 1];
      --full_diff[past - 1];
    }
    auto& pres = t.presence_[tr];
    auto& dur = t.duration_[tr];
    pres.assign(bins + 1, 0);
    dur.assign(bins + 1, 0.0);
    std::int64_t count = 0;
    std::int64_t full = 0;
    for (std::uint32_t b = 0; b < bins; ++b) {
      count += count_diff[b];
      full += full_diff[b];
      pres[b + 1] = pres[b] + static_cast<std::uint64_t>(count);
      dur[b + 1] = dur[b] + partial[b] + static_cast<double>(full) * static_cast<double>(w);
    }
  };

  if (exec == Execution::kSerial) {
    for (std::size_t tr = 0; tr < by_track.size(); ++tr) build_track(tr);
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t tr = 0; tr < by_track.size(); ++tr) build_track(tr);
  }
  return t;
}

BinnedTable BinnedTable::build(const Dataset& ds, std::span<const Event> events,
                               std::uint32_t bins_per_track, Execution exec) {
  return BinnedTableBuilder::run(ds, events, bins_per_track, exec, [](const Event&) { return true; });
}

BinnedTable BinnedTable::build_filtered(const Dataset& ds, std::span<const Event> events,
                                        std::uint32_t bins_per_track, AttrKey key, ValueId value,
                                        Execution exec) {
  return BinnedTableBuilder::run(ds, events, bins_per_track, exec, AttrMatch{key, value});
}

std::vector<std::vector<std::uint64_t>> sat_query(const BinnedTable& table, TimeSpan window,
                                                  TrackRange tracks, std::uint32_t canvas_px) {
  if (window.empty() || canvas_px == 0) throw Error("sat_query: empty window or canvas");
  const i128 px = canvas_px;
  const i128 len = window.length();
  const i128 w = table.bin_width();
  if (len < w * px) {
    throw ResolutionError("pixel width " + std::to_string(static_cast<double>(len) / canvas_px) +
                          " ns is finer than the table's bin width " +
                          std::to_string(table.bin_width()) + " ns");
  }
  if (tracks.hi >= table.tracks()) throw Error("sat_query: track outside the table");

  // Column c covers [begin + c*len/px, begin + (c+1)*len/px), scaled by px.
  const i128 base = static_cast<i128>(window.begin - table.origin()) * px;
  const i128 scale = w * px;
  const auto floor_div = [](i128 a, i128 b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  const auto ceil_div = [](i128 a, i128 b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); };
  const auto clamp_bin = [&](i128 b) {
    return static_cast<std::uint32_t>(std::clamp<i128>(b, 0, table.bins()));
  };
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cols(canvas_px);
  for (std::uint32_t c = 0; c < canvas_px; ++c) {
    cols[c] = {clamp_bin(floor_div(base + len * c, scale)),
               clamp_bin(ceil_div(base + len * (c + 1), scale))};
  }

  std::vector<std::vector<std::uint64_t>> out(tracks.size(), std::vector<std::uint64_t>(canvas_px));
  for (TrackIndex t = tracks.lo; t <= tracks.hi; ++t) {
    auto& row = out[t - tracks.lo];
    for (std::uint32_t c = 0; c < canvas_px; ++c) {
      row[c] = cols[c].first < cols[c].second ? table.presence(t, cols[c].first, cols[c].second) : 0;
    }
  }
  return out;
}

namespace {

// Uniform draw in [0, bound] without modulo bias.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == std::numeric_limits<std::uint64_t>::max()) return rng();
  const std::uint64_t range = bound + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % range;
}

}  // namespace

std::vector<EventRow> reservoir_query(std::span<const EventRow> rows, std::size_t k,
                                      std::uint64_t seed) {
  std::vector<EventRow> sample;
  if (k == 0) return sample;
  sample.reserve(std::min(k, rows.size()));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i < k) {
      sample.push_back(rows[i]);
    } else {
      const std::uint64_t j = bounded(rng, i);
      if (j < k) sample[j] = rows[i];
    }
  }
  return sample;
}

std::vector<M4Row> m4_query(std::span<const EventRow> rows, std::uint32_t bins, TimeSpan window) {
  if (window.end == window.begin) throw Error("m4_query: empty window");
  if (bins == 0) throw Error("m4_query: bins must be positive");
  std::vector<std::pair<Timestamp, int>> points;
  points.reserve(rows.size() * 2);
  for (const EventRow& r : rows) {
    points.emplace_back(r.enter, 1);
    points.emplace_back(r.leave, 0);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  const i128 den = window.length();
  std::vector<M4Row> all;
  all.reserve(points.size());
  for (const auto& [atime, ct] : points) {
    const i128 num = static_cast<i128>(bins) * (atime - window.begin);
    // round(num / den), halves away from zero
    const i128 k = num >= 0 ? (2 * num + den) / (2 * den) : -((-2 * num + den) / (2 * den));
    all.push_back({static_cast<std::int64_t>(k), atime, ct});
  }

  std::map<std::int64_t, std::pair<Timestamp, Timestamp>> extremes;
  for (const M4Row& r : all) {
    auto [it, fresh] = extremes.try_emplace(r.k, r.atime, r.atime);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.atime);
      it->second.second = std::max(it->second.second, r.atime);
    }
  }
  std::vector<M4Row> out;
  for (const M4Row& r : all) {
    const auto& [lo, hi] = extremes.at(r.k);
    if (r.atime == lo || r.atime == hi) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const M4Row& a, const M4Row& b) {
    if (a.k != b.k) return a.k < b.k;
    if (a.atime != b.atime) return a.atime < b.atime;
    return a.ct < b.ct;
  });
  return out;
}

std::vector<TimeSpan> m4_reconstruct(std::span<const M4Row> rows, TimeSpan window) {
  const auto clamp = [&](Timestamp t) { return std::clamp(t, window.begin, window.end); };
  std::vector<TimeSpan> bars;
  std::optional<Timestamp> open;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const M4Row& r = rows[i];
    if (r.ct == 1) {
      if (open) bars.push_back({clamp(*open), clamp(*open)});
      open = r.atime;
    } else if (open) {
      bars.push_back({clamp(*open), clamp(r.atime)});
      open.reset();
    } else if (i == 0) {
      bars.push_back({window.begin, clamp(r.atime)});
    } else {
      bars.push_back({clamp(r.atime), clamp(r.atime)});
    }
  }
  if (open) bars.push_back({clamp(*open), window.end});
  return bars;
}

}  // namespace eseman
