#include "eseman/tree.hpp"
#include "tree_build.hpp"

namespace eseman {

Tree build_1d_kdt(EventRefs events, std::uint32_t tree_id, const AttrDictionary& dict) {
  Tree t;
  t.tree_id = tree_id;
  t.kind = BuilderKind::kKdt1d;
  if (events.empty()) return t;

  sort_events(events);
  std::vector<detail::Item> items;
  items.reserve(events.size());
  for (const Event* e : events) items.push_back({e, e->enter, e->leave});

  t.nodes.reserve(2 * items.size() - 1);
  detail::append_fair(t, items, dict);
  propagate_attributes(t);
  return t;
}

}  // namespace eseman
