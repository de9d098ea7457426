#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "eseman/attrs.hpp"

namespace eseman {

// Nanoseconds since trace origin. Always non-negative for valid data.
using Timestamp = std::int64_t;
using TrackIndex = std::uint32_t;
using EventId = std::uint64_t;

// Half-open [begin, end).
struct TimeSpan {
  Timestamp begin = 0;
  Timestamp end = 0;

  constexpr bool empty() const { return begin == end; }
  constexpr Timestamp length() const { return end - begin; }

  friend constexpr bool operator==(const TimeSpan&, const TimeSpan&) = default;
};

// True iff the spans share a sub-interval of positive length. An empty span
// overlaps nothing.
constexpr bool spans_overlap(TimeSpan a, TimeSpan b) {
  return std::max(a.begin, b.begin) < std::min(a.end, b.end);
}

constexpr TimeSpan hull(TimeSpan a, TimeSpan b) {
  return {std::min(a.begin, b.begin), std::max(a.end, b.end)};
}

constexpr TimeSpan intersection(TimeSpan a, TimeSpan b) {
  const Timestamp lo = std::max(a.begin, b.begin);
  const Timestamp hi = std::min(a.end, b.end);
  return lo < hi ? TimeSpan{lo, hi} : TimeSpan{lo, lo};
}

// Geometric extent of an event span: a zero-duration event occupies the single
// nanosecond starting at its timestamp, so it can be hit-tested, indexed and
// drawn like any other event.
constexpr TimeSpan footprint(TimeSpan s) {
  return s.empty() ? TimeSpan{s.begin, s.begin + 1} : s;
}

// Inclusion rule shared by every configuration: the event's footprint overlaps
// the half-open window.
constexpr bool hits_window(TimeSpan event_span, TimeSpan window) {
  return spans_overlap(footprint(event_span), window);
}

// Inclusive [lo, hi] interval of track indices.
struct TrackRange {
  TrackIndex lo = 0;
  TrackIndex hi = 0;

  constexpr bool contains(TrackIndex t) const { return lo <= t && t <= hi; }
  constexpr bool intersects(TrackRange o) const { return lo <= o.hi && o.lo <= hi; }
  constexpr std::uint32_t size() const { return hi - lo + 1; }

  friend constexpr bool operator==(const TrackRange&, const TrackRange&) = default;
};

constexpr TrackRange hull(TrackRange a, TrackRange b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

struct Track {
  TrackIndex index = 0;
  std::string label;

  friend bool operator==(const Track&, const Track&) = default;
};

struct Event {
  EventId id = 0;
  TrackIndex track = 0;
  Timestamp enter = 0;
  Timestamp leave = 0;
  std::vector<EventAttr> attrs;  // sorted by key

  TimeSpan span() const { return {enter, leave}; }

  friend bool operator==(const Event&, const Event&) = default;
};

Timestamp event_duration(const Event& e);

struct Dataset {
  std::string name;
  std::vector<Track> tracks;  // dense, index == position, lexicographic labels
  std::uint64_t event_count = 0;
  TimeSpan time_extent;  // [min enter, max leave)
  AttrDictionary attrs;

  TrackRange all_tracks() const {
    return {0, tracks.empty() ? 0 : static_cast<TrackIndex>(tracks.size() - 1)};
  }
};

// Recomputes event_count and time_extent from the events.
void refresh_extent(Dataset& ds, const std::vector<Event>& events);

// Groups event positions by track; each group is sorted by (enter, leave, id).
std::vector<std::vector<std::uint32_t>> events_by_track(
    const std::vector<Event>& events, std::size_t track_count);

}  // namespace eseman
