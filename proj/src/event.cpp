#include "eseman/event.hpp"

#include <algorithm>
#include <limits>

namespace eseman {

Timestamp event_duration(const Event& e) { return e.leave - e.enter; }

void refresh_extent(Dataset& ds, const std::vector<Event>& events) {
  ds.event_count = events.size();
  if (events.empty()) {
    ds.time_extent = {};
    return;
  }
  Timestamp lo = std::numeric_limits<Timestamp>::max();
  Timestamp hi = std::numeric_limits<Timestamp>::min();
  for (const auto& e : events) {
    lo = std::min(lo, e.enter);
    hi = std::max(hi, e.leave);
  }
  ds.time_extent = {lo, hi};
}

std::vector<std::vector<std::uint32_t>> events_by_track(const std::vector<Event>& events,
                                                        std::size_t track_count) {
  std::vector<std::vector<std::uint32_t>> groups(track_count);
  for (std::uint32_t i = 0; i < events.size(); ++i) groups.at(events[i].track).push_back(i);
  for (auto& g : groups) {
    std::sort(g.begin(), g.end(), [&](std::uint32_t a, std::uint32_t b) {
      const Event& x = events[a];
      const Event& y = events[b];
      if (x.enter != y.enter) return x.enter < y.enter;
      if (x.leave != y.leave) return x.leave < y.leave;
      return x.id < y.id;
    });
  }
  return groups;
}

}  // namespace eseman
