#include <algorithm>
#include <numeric>

#include "eseman/tree.hpp"
#include "tree_build.hpp"

namespace eseman {

// Single linkage on a line: clusters at any threshold are contiguous runs of
// the (enter, leave, id) order, and the cheapest link across the cut after
// position k is max(0, enter[k+1] - max(leave[0..k])). Merging cuts in
// (gap, k) order reproduces the naive merge order including its tie-break.
std::vector<Merge> agglomerative_merges(const EventRefs& sorted) {
  const std::size_t n = sorted.size();
  std::vector<Merge> merges;
  if (n < 2) return merges;

  std::vector<Timestamp> gap(n - 1);
  Timestamp reach = sorted[0]->leave;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    reach = std::max(reach, sorted[k]->leave);
    gap[k] = std::max<Timestamp>(0, sorted[k + 1]->enter - reach);
  }

  std::vector<std::uint32_t> cuts(n - 1);
  std::iota(cuts.begin(), cuts.end(), 0u);
  std::stable_sort(cuts.begin(), cuts.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return gap[a] < gap[b]; });

  // Cluster bounds indexed by their endpoints.
  std::vector<std::uint32_t> first_of_last(n);
  std::vector<std::uint32_t> last_of_first(n);
  std::iota(first_of_last.begin(), first_of_last.end(), 0u);
  std::iota(last_of_first.begin(), last_of_first.end(), 0u);

  merges.reserve(n - 1);
  for (std::uint32_t k : cuts) {
    const std::uint32_t lf = first_of_last[k];
    const std::uint32_t rl = last_of_first[k + 1];
    merges.push_back({lf, k, k + 1, rl, gap[k]});
    last_of_first[lf] = rl;
    first_of_last[rl] = lf;
  }
  return merges;
}

Tree build_agglomerative(EventRefs events, std::uint32_t tree_id, const AttrDictionary& dict) {
  Tree t;
  t.tree_id = tree_id;
  t.kind = BuilderKind::kAgglomerative;
  if (events.empty()) return t;

  sort_events(events);
  const std::size_t n = events.size();
  const std::vector<Merge> merges = agglomerative_merges(events);

  // Temporary ids: 0..n-1 leaves by position, then one per merge.
  struct Temp {
    std::uint32_t left;
    std::uint32_t right;
  };
  std::vector<Temp> temps(n + merges.size(), Temp{0, 0});
  std::vector<std::uint32_t> node_at_first(n);
  std::iota(node_at_first.begin(), node_at_first.end(), 0u);
  for (std::size_t m = 0; m < merges.size(); ++m) {
    const auto id = static_cast<std::uint32_t>(n + m);
    temps[id] = {node_at_first[merges[m].left_first], node_at_first[merges[m].right_first]};
    node_at_first[merges[m].left_first] = id;
  }
  const std::uint32_t root = static_cast<std::uint32_t>(temps.size() - 1);

  // Iterative preorder: the tree can be as deep as the track is long.
  t.nodes.reserve(temps.size());
  struct Pending {
    std::uint32_t temp;
    std::uint32_t parent;
    bool is_right;
  };
  constexpr std::uint32_t kNoParent = ~0u;
  std::vector<Pending> stack{{root, kNoParent, false}};
  std::vector<std::uint32_t> internal_order;
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    std::uint32_t index;
    if (p.temp < n) {
      const Event* e = events[p.temp];
      index = detail::append_leaf(t, {e, e->enter, e->leave}, dict);
    } else {
      index = detail::append_internal(t);
      internal_order.push_back(index);
      stack.push_back({temps[p.temp].right, index, true});
      stack.push_back({temps[p.temp].left, index, false});
    }
    if (p.parent != kNoParent) {
      (p.is_right ? t.nodes[p.parent].right : t.nodes[p.parent].left) = t.nodes[index].key;
    }
  }
  // Children have larger preorder indices than their parent.
  for (auto it = internal_order.rbegin(); it != internal_order.rend(); ++it) {
    SummaryNode& node = t.nodes[*it];
    detail::finish_internal(t, *it, node.left->preorder, node.right->preorder);
  }
  propagate_attributes(t);
  return t;
}

}  // namespace eseman
