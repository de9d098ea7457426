#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "eseman/attrs.hpp"
#include "eseman/event.hpp"

namespace eseman {

enum class BuilderKind : std::uint8_t { kKdt1d = 0, kKdt2d = 1, kAgglomerative = 2 };

inline constexpr std::array<BuilderKind, 3> kAllBuilders{
    BuilderKind::kKdt1d, BuilderKind::kKdt2d, BuilderKind::kAgglomerative};

// "1dkdt", "kdt", "agg"
std::string_view builder_name(BuilderKind kind);
std::optional<BuilderKind> parse_builder(std::string_view name);

// (tree id, preorder position). Packs into 64 bits with the tree id in the
// high word, so numeric and big-endian byte order both follow (tree, preorder).
struct NodeKey {
  std::uint32_t tree_id = 0;
  std::uint32_t preorder = 0;

  constexpr std::uint64_t packed() const {
    return (static_cast<std::uint64_t>(tree_id) << 32) | preorder;
  }
  static constexpr NodeKey unpack(std::uint64_t v) {
    return {static_cast<std::uint32_t>(v >> 32), static_cast<std::uint32_t>(v)};
  }
  std::array<std::byte, 8> bytes() const;
  static NodeKey from_bytes(std::span<const std::byte, 8> b);

  friend constexpr auto operator<=>(const NodeKey&, const NodeKey&) = default;
};

// The event (or, in the 2D tree, the piece of an event) stored at a leaf.
struct LeafSegment {
  EventId event_id = 0;
  TrackIndex track = 0;
  Timestamp enter = 0;
  Timestamp leave = 0;

  TimeSpan span() const { return {enter, leave}; }
  friend bool operator==(const LeafSegment&, const LeafSegment&) = default;
};

struct SummaryNode {
  NodeKey key;
  TimeSpan time_span;  // hull of the footprints of contained segments
  TrackRange track_span;
  std::uint64_t event_count = 0;  // segments under this node
  std::optional<NodeKey> left;
  std::optional<NodeKey> right;
  AttrSummary attrs;
  std::optional<LeafSegment> leaf;

  bool is_leaf() const { return !left.has_value(); }
  friend bool operator==(const SummaryNode&, const SummaryNode&) = default;
};

// Nodes stored in preorder: nodes[0] is the root and nodes[i].key.preorder == i.
struct Tree {
  std::uint32_t tree_id = 0;
  BuilderKind kind = BuilderKind::kKdt1d;
  std::vector<SummaryNode> nodes;

  bool empty() const { return nodes.empty(); }
  const SummaryNode& root() const { return nodes.front(); }
  const SummaryNode& at(NodeKey k) const { return nodes.at(k.preorder); }
};

using EventRefs = std::vector<const Event*>;

EventRefs event_refs(std::span<const Event> events);
// Sort order used by every builder: (enter, leave, id).
void sort_events(EventRefs& events);

// Top-down fair split over one track: a node with n > 1 events gets n/2 on the
// left and the remainder on the right. Empty input yields an empty tree.
Tree build_1d_kdt(EventRefs events, std::uint32_t tree_id, const AttrDictionary& dict);

// Top-down over all tracks, alternating time and track splits (time first).
// Time splits cut at the midpoint of the node's extent and split any event
// crossing it into two segments carrying the same event id; track splits give
// the extra track to the top (lower indices). A node whose segments all lie on
// one track continues with the fair split.
Tree build_2d_kdt(EventRefs events, const AttrDictionary& dict, std::uint32_t tree_id = 0);

// One merge of two adjacent clusters. Positions index the events sorted by
// (enter, leave, id); clusters are always contiguous runs in that order.
struct Merge {
  std::uint32_t left_first = 0;
  std::uint32_t left_last = 0;
  std::uint32_t right_first = 0;
  std::uint32_t right_last = 0;
  Timestamp gap = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

// Single-linkage merge sequence with distance max(0, later.enter -
// earlier.leave). Ties go to the cluster pair whose left cluster starts first.
// `sorted` must already be in sort_events order.
std::vector<Merge> agglomerative_merges(const EventRefs& sorted);

// Bottom-up single-linkage tree over one track.
Tree build_agglomerative(EventRefs events, std::uint32_t tree_id, const AttrDictionary& dict);

// Recomputes every internal node's summary as the merge of its children's.
// Leaf summaries are left as built.
void propagate_attributes(Tree& tree);

}  // namespace eseman
