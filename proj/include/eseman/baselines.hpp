#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eseman/event.hpp"
#include "eseman/kernels.hpp"
#include "eseman/query.hpp"

namespace eseman {

// Row shape shared by the event-returning baselines.
struct EventRow {
  EventId id = 0;
  TrackIndex track = 0;
  Timestamp enter = 0;
  Timestamp leave = 0;

  TimeSpan span() const { return {enter, leave}; }
  friend bool operator==(const EventRow&, const EventRow&) = default;
};

struct AttrMatch {
  AttrKey key = 0;
  ValueId value = 0;

  bool operator()(const Event& e) const;
};

// Events with leave >= window.begin and enter <= window.end (closed overlap)
// on the given tracks, in id order. `events` must be in id order.
std::vector<EventRow> naive_query(std::span<const Event> events, TimeSpan window,
                                  std::optional<TrackRange> tracks = std::nullopt,
                                  Execution exec = Execution::kParallel);
// The same, keeping only events carrying the attribute value.
std::vector<EventRow> naive_query(std::span<const Event> events, TimeSpan window,
                                  std::optional<TrackRange> tracks, AttrMatch match,
                                  Execution exec = Execution::kParallel);

// Per-track prefix sums over a fixed grid of equal-width bins spanning the
// dataset extent: count of events present in each bin and covered duration.
class BinnedTable {
 public:
  // Events whose footprint meets a bin with positive measure are present in
  // it. Only events matching `keep` (when given) are counted.
  static BinnedTable build(const Dataset& ds, std::span<const Event> events,
                           std::uint32_t bins_per_track, Execution exec = Execution::kParallel);
  static BinnedTable build_filtered(const Dataset& ds, std::span<const Event> events,
                                    std::uint32_t bins_per_track, AttrKey key, ValueId value,
                                    Execution exec = Execution::kParallel);

  std::uint32_t bins() const { return bins_; }
  Timestamp origin() const { return origin_; }
  Timestamp bin_width() const { return bin_width_; }
  std::size_t tracks() const { return presence_.size(); }

  // Sum of presence over bins [lo, hi).
  std::uint64_t presence(TrackIndex t, std::uint32_t lo, std::uint32_t hi) const {
    return presence_[t][hi] - presence_[t][lo];
  }
  double duration(TrackIndex t, std::uint32_t lo, std::uint32_t hi) const {
    return duration_[t][hi] - duration_[t][lo];
  }
  const std::vector<std::uint64_t>& presence_prefix(TrackIndex t) const { return presence_[t]; }
  const std::vector<double>& duration_prefix(TrackIndex t) const { return duration_[t]; }

  // Bins meeting [begin, end) with positive measure, as [first, last + 1).
  std::pair<std::uint32_t, std::uint32_t> covering_bins(TimeSpan s) const;

 private:
  friend struct BinnedTableBuilder;

  std::uint32_t bins_ = 0;
  Timestamp origin_ = 0;
  Timestamp bin_width_ = 1;
  std::vector<std::vector<std::uint64_t>> presence_;  // bins + 1 entries
  std::vector<std::vector<double>> duration_;
};

// Per track in `tracks` (outer index = track - tracks.lo), the presence sum
// over the bins covering each of canvas_px equal columns of the window.
// Throws ResolutionError when a column is narrower than a bin.
std::vector<std::vector<std::uint64_t>> sat_query(const BinnedTable& table, TimeSpan window,
                                                  TrackRange tracks, std::uint32_t canvas_px);

inline constexpr std::uint64_t kDefaultReservoirSeed = 100;

// Algorithm R over `rows` in order with a seeded generator: a uniform sample
// of min(k, n) rows without replacement, in reservoir slot order.
std::vector<EventRow> reservoir_query(std::span<const EventRow> rows, std::size_t k,
                                      std::uint64_t seed = kDefaultReservoirSeed);

struct M4Row {
  std::int64_t k = 0;
  Timestamp atime = 0;
  int ct = 0;  // 1 = enter, 0 = leave

  friend bool operator==(const M4Row&, const M4Row&) = default;
};

// Distinct (atime, ct) pairs from the enters and leaves of `rows`, binned by
// k = round(bins * (atime - begin) / (end - begin)) with halves rounded away
// from zero; per k only rows at the bin's minimum or maximum atime remain.
// Ordered by (k, atime, ct). Throws Error when the window is empty.
std::vector<M4Row> m4_query(std::span<const EventRow> rows, std::uint32_t bins, TimeSpan window);

// Bars for one track's M4 rows: each enter pairs with the next leave; a leave
// with no pending enter opens at the window begin, an enter left open closes
// at the window end.
std::vector<TimeSpan> m4_reconstruct(std::span<const M4Row> rows, TimeSpan window);

}  // namespace eseman
