#include <algorithm>

#include "eseman/tree.hpp"
#include "tree_build.hpp"

namespace eseman {

std::string_view builder_name(BuilderKind kind) {
  switch (kind) {
    case BuilderKind::kKdt1d: return "1dkdt";
    case BuilderKind::kKdt2d: return "kdt";
    case BuilderKind::kAgglomerative: return "agg";
  }
  return "1dkdt";
}

std::optional<BuilderKind> parse_builder(std::string_view name) {
  for (BuilderKind k : kAllBuilders) {
    if (builder_name(k) == name) return k;
  }
  return std::nullopt;
}

std::array<std::byte, 8> NodeKey::bytes() const {
  std::array<std::byte, 8> out{};
  const std::uint64_t v = packed();
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::byte>(v >> (56 - 8 * i));
  return out;
}

NodeKey NodeKey::from_bytes(std::span<const std::byte, 8> b) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<std::uint64_t>(b[i]);
  return unpack(v);
}

EventRefs event_refs(std::span<const Event> events) {
  EventRefs out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(&e);
  return out;
}

void sort_events(EventRefs& events) {
  std::sort(events.begin(), events.end(), [](const Event* a, const Event* b) {
    if (a->enter != b->enter) return a->enter < b->enter;
    if (a->leave != b->leave) return a->leave < b->leave;
    return a->id < b->id;
  });
}

void propagate_attributes(Tree& tree) {
  for (std::size_t i = tree.nodes.size(); i-- > 0;) {
    SummaryNode& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    AttrSummary s = tree.at(*n.left).attrs;
    s.merge(tree.at(*n.right).attrs);
    n.attrs = std::move(s);
  }
}

namespace detail {

void sort_items(std::span<Item> items) {
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.enter != b.enter) return a.enter < b.enter;
    if (a.leave != b.leave) return a.leave < b.leave;
    return a.event->id < b.event->id;
  });
}

std::uint32_t append_leaf(Tree& t, const Item& item, const AttrDictionary& dict) {
  const auto index = static_cast<std::uint32_t>(t.nodes.size());
  SummaryNode& n = t.nodes.emplace_back();
  n.key = {t.tree_id, index};
  n.time_span = item.footprint();
  n.track_span = {item.track(), item.track()};
  n.event_count = 1;
  n.attrs = AttrSummary::of_event(item.event->attrs, dict);
  n.leaf = LeafSegment{item.event->id, item.track(), item.enter, item.leave};
  return index;
}

std::uint32_t append_internal(Tree& t) {
  const auto index = static_cast<std::uint32_t>(t.nodes.size());
  t.nodes.emplace_back().key = {t.tree_id, index};
  return index;
}

void finish_internal(Tree& t, std::uint32_t index, std::uint32_t left, std::uint32_t right) {
  const SummaryNode& l = t.nodes[left];
  const SummaryNode& r = t.nodes[right];
  SummaryNode& n = t.nodes[index];
  n.left = l.key;
  n.right = r.key;
  n.time_span = hull(l.time_span, r.time_span);
  n.track_span = hull(l.track_span, r.track_span);
  n.event_count = l.event_count + r.event_count;
}

std::uint32_t append_fair(Tree& t, std::span<const Item> items, const AttrDictionary& dict) {
  if (items.size() == 1) return append_leaf(t, items.front(), dict);
  const std::size_t left_count = items.size() / 2;  // extra goes right
  const std::uint32_t index = append_internal(t);
  const std::uint32_t l = append_fair(t, items.first(left_count), dict);
  const std::uint32_t r = append_fair(t, items.subspan(left_count), dict);
  finish_internal(t, index, l, r);
  return index;
}

}  // namespace detail
}  // namespace eseman
