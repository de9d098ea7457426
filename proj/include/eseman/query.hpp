#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eseman/index.hpp"
#include "eseman/node_cache.hpp"

namespace eseman {

struct Predicate {
  std::string key;
  std::string value;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

inline constexpr std::uint32_t kDefaultCanvasPx = 3672;

struct RangeQuery {
  std::string dataset;
  TimeSpan window;
  TrackRange tracks;
  std::uint32_t canvas_px = kDefaultCanvasPx;
  std::uint32_t pixel_window = 1;
  std::optional<Predicate> predicate;

  friend bool operator==(const RangeQuery&, const RangeQuery&) = default;
};

// One rendered rectangle. For a summary, time_span is the node's unclipped
// bounds; for an exact event it is the event (or segment) span itself.
struct SummarySlice {
  TrackRange track_span;
  TimeSpan time_span;
  std::uint64_t event_count = 0;
  AttrSummary attrs;
  bool is_exact_event = false;
  EventId event_id = 0;  // exact slices only

  TimeSpan clipped(TimeSpan window) const { return intersection(footprint(time_span), window); }

  friend bool operator==(const SummarySlice&, const SummarySlice&) = default;
};

struct FetchStats {
  std::uint64_t nodes_visited = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t slices_returned = 0;
  std::uint64_t bytes_returned = 0;
  std::uint64_t fetch_time_ns = 0;
};

struct QueryResult {
  std::vector<SummarySlice> slices;
  FetchStats stats;
  std::string payload;  // JSON array of the slices as sent on the wire
};

// ceil(window length * pixel_window / canvas_px), at least 1.
std::uint64_t pixel_window_span(const RangeQuery& q);

// Throws QueryError for malformed queries, an index of another dataset, a
// predicate on an unknown key (invalid) or on a numeric key (unsupported).
void validate(const RangeQuery& q, const HierIndex& index);

// Traverses the index for q and ends the cache's query (evicting untouched
// nodes). Handles queries with or without a predicate. Timing covers the
// traversal and the payload encoding.
QueryResult range_query(const RangeQuery& q, const HierIndex& index, NodeCache& cache);

// As range_query, requiring a predicate.
QueryResult conditional_range_query(const RangeQuery& q, const HierIndex& index, NodeCache& cache);

// Merges exact segments of the same event that abut in time. Summaries pass
// through unchanged. Output is in slice order.
std::vector<SummarySlice> assemble_2d_results(std::vector<SummarySlice> slices);

// (track_lo, track_hi, begin, end, exact first, event id)
bool slice_order(const SummarySlice& a, const SummarySlice& b);

}  // namespace eseman
