#pragma once

// Shared pieces of the tree builders.

#include <span>

#include "eseman/tree.hpp"

namespace eseman::detail {

// A whole event or, in the 2D tree, a piece of one.
struct Item {
  const Event* event;
  Timestamp enter;
  Timestamp leave;

  TrackIndex track() const { return event->track; }
  TimeSpan footprint() const { return eseman::footprint(TimeSpan{enter, leave}); }
};

void sort_items(std::span<Item> items);

std::uint32_t append_leaf(Tree& t, const Item& item, const AttrDictionary& dict);

// Reserves an internal node slot; fill it with finish_internal once both
// children exist.
std::uint32_t append_internal(Tree& t);
void finish_internal(Tree& t, std::uint32_t index, std::uint32_t left, std::uint32_t right);

// Fair split over items already in sort order.
std::uint32_t append_fair(Tree& t, std::span<const Item> items, const AttrDictionary& dict);

}  // namespace eseman::detail
