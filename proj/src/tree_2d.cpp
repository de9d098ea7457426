#include <algorithm>
#include <limits>

#include "eseman/tree.hpp"
#include "tree_build.hpp"

namespace eseman {
namespace {

using detail::Item;

enum class Axis { kTime, kTrack };

Axis other(Axis a) { return a == Axis::kTime ? Axis::kTrack : Axis::kTime; }

struct Split {
  std::vector<Item> left;
  std::vector<Item> right;
};

// Midpoint cut of the footprint extent. Items ending at or before the
// midpoint go left, items starting at or after it go right, the rest are cut.
bool split_time(const std::vector<Item>& items, TimeSpan extent, Split& out) {
  if (extent.length() < 2) return false;
  const Timestamp mid = extent.begin + extent.length() / 2;
  for (const Item& it : items) {
    if (it.footprint().end <= mid) {
      out.left.push_back(it);
    } else if (it.enter >= mid) {
      out.right.push_back(it);
    } else {
      out.left.push_back({it.event, it.enter, mid});
      out.right.push_back({it.event, mid, it.leave});
    }
  }
  return true;
}

// Even division of the occupied track range; the top region (lower indices)
// takes the extra track.
bool split_tracks(const std::vector<Item>& items, TrackRange tracks, Split& out) {
  if (tracks.lo == tracks.hi) return false;
  const TrackIndex top_last = tracks.lo + (tracks.size() + 1) / 2 - 1;
  for (const Item& it : items) {
    (it.track() <= top_last ? out.left : out.right).push_back(it);
  }
  return true;
}

std::uint32_t build(Tree& t, std::vector<Item> items, Axis axis, const AttrDictionary& dict) {
  if (items.size() == 1) return detail::append_leaf(t, items.front(), dict);

  TimeSpan extent{std::numeric_limits<Timestamp>::max(), std::numeric_limits<Timestamp>::min()};
  TrackRange tracks{std::numeric_limits<TrackIndex>::max(), 0};
  for (const Item& it : items) {
    extent = hull(extent, it.footprint());
    tracks = hull(tracks, TrackRange{it.track(), it.track()});
  }

  if (tracks.lo == tracks.hi) {
    detail::sort_items(items);
    return detail::append_fair(t, items, dict);
  }

  Split split;
  Axis used = axis;
  const auto try_axis = [&](Axis a) {
    return a == Axis::kTime ? split_time(items, extent, split) : split_tracks(items, tracks, split);
  };
  if (!try_axis(axis)) {
    used = other(axis);
    // A multi-track node can always split by track.
    try_axis(used);
  }
  items.clear();
  items.shrink_to_fit();

  const std::uint32_t index = detail::append_internal(t);
  const std::uint32_t l = build(t, std::move(split.left), other(used), dict);
  const std::uint32_t r = build(t, std::move(split.right), other(used), dict);
  detail::finish_internal(t, index, l, r);
  return index;
}

}  // namespace

Tree build_2d_kdt(EventRefs events, const AttrDictionary& dict, std::uint32_t tree_id) {
  Tree t;
  t.tree_id = tree_id;
  t.kind = BuilderKind::kKdt2d;
  if (events.empty()) return t;

  sort_events(events);
  std::vector<Item> items;
  items.reserve(events.size());
  for (const Event* e : events) items.push_back({e, e->enter, e->leave});
  t.nodes.reserve(2 * items.size());
  build(t, std::move(items), Axis::kTime, dict);
  propagate_attributes(t);
  return t;
}

}  // namespace eseman
