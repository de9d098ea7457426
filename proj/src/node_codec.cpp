#include <bit>
#include <cstring>

#include "eseman/error.hpp"
#include "eseman/node_store.hpp"

namespace eseman {
namespace {

static_assert(std::endian::native == std::endian::little,
              "the node codec copies integers in native order");

constexpr std::uint8_t kInternal = 1;
constexpr std::uint8_t kLeaf = 2;

template <typename T>
void put(std::vector<std::byte>& out, T v) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  std::memcpy(out.data() + at, &v, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> b) : b_(b) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) throw StoreError("truncated node record");
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return b_.size(); }

 private:
  std::span<const std::byte> b_;
  std::size_t pos_ = 0;
};

}  // namespace

void encode_node(const SummaryNode& n, std::vector<std::byte>& out) {
  std::uint8_t flags = 0;
  if (n.left) flags |= kInternal;
  if (n.leaf) flags |= kLeaf;
  put(out, n.key.packed());
  put(out, flags);
  put(out, n.track_span.lo);
  put(out, n.track_span.hi);
  put(out, n.time_span.begin);
  put(out, n.time_span.end);
  put(out, n.event_count);
  put(out, n.left ? n.left->packed() : std::uint64_t{0});
  put(out, n.right ? n.right->packed() : std::uint64_t{0});
  if (n.leaf) {
    put(out, n.leaf->event_id);
    put(out, n.leaf->track);
    put(out, n.leaf->enter);
    put(out, n.leaf->leave);
  }

  const std::size_t len_at = out.size();
  put(out, std::uint32_t{0});
  put(out, static_cast<std::uint32_t>(n.attrs.entries().size()));
  for (const AttrEntry& e : n.attrs.entries()) {
    put(out, e.key);
    put(out, static_cast<std::uint8_t>(e.kind));
    if (e.kind == AttrKind::kCategorical) {
      put(out, static_cast<std::uint32_t>(e.values.size()));
      for (ValueId v : e.values) put(out, v);
    } else {
      put(out, e.stats.min);
      put(out, e.stats.max);
      put(out, e.stats.mean);
      put(out, e.stats.count);
    }
  }
  const auto len = static_cast<std::uint32_t>(out.size() - len_at - sizeof(std::uint32_t));
  std::memcpy(out.data() + len_at, &len, sizeof(len));
}

std::vector<std::byte> encode_node(const SummaryNode& node) {
  std::vector<std::byte> out;
  out.reserve(kNodeHeaderBytes + 64);
  encode_node(node, out);
  return out;
}

SummaryNode decode_node(std::span<const std::byte> bytes) {
  Reader r(bytes);
  SummaryNode n;
  n.key = NodeKey::unpack(r.get<std::uint64_t>());
  const auto flags = r.get<std::uint8_t>();
  if (flags & ~(kInternal | kLeaf)) throw StoreError("bad node flags");
  n.track_span.lo = r.get<TrackIndex>();
  n.track_span.hi = r.get<TrackIndex>();
  n.time_span.begin = r.get<Timestamp>();
  n.time_span.end = r.get<Timestamp>();
  n.event_count = r.get<std::uint64_t>();
  const auto left = r.get<std::uint64_t>();
  const auto right = r.get<std::uint64_t>();
  if (flags & kInternal) {
    n.left = NodeKey::unpack(left);
    n.right = NodeKey::unpack(right);
  }
  if (flags & kLeaf) {
    LeafSegment s;
    s.event_id = r.get<EventId>();
    s.track = r.get<TrackIndex>();
    s.enter = r.get<Timestamp>();
    s.leave = r.get<Timestamp>();
    n.leaf = s;
  }

  const auto len = r.get<std::uint32_t>();
  const std::size_t end = r.pos() + len;
  if (end != r.size()) throw StoreError("attribute section length mismatch");
  const auto count = r.get<std::uint32_t>();
  auto& entries = n.attrs.mutable_entries();
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    AttrEntry e;
    e.key = r.get<AttrKey>();
    const auto kind = r.get<std::uint8_t>();
    if (kind > 1) throw StoreError("bad attribute kind");
    e.kind = static_cast<AttrKind>(kind);
    if (e.kind == AttrKind::kCategorical) {
      const auto nv = r.get<std::uint32_t>();
      if (nv > (r.size() - r.pos()) / sizeof(ValueId)) throw StoreError("truncated node record");
      e.values.resize(nv);
      for (auto& v : e.values) v = r.get<ValueId>();
    } else {
      e.stats.min = r.get<double>();
      e.stats.max = r.get<double>();
      e.stats.mean = r.get<double>();
      e.stats.count = r.get<std::uint64_t>();
    }
    entries.push_back(std::move(e));
  }
  if (r.pos() != end) throw StoreError("trailing bytes in node record");
  return n;
}

TreeSource::TreeSource(std::vector<Tree> trees) : trees_(std::move(trees)) {
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    const std::uint32_t id = trees_[i].tree_id;
    if (slot_.size() <= id) slot_.resize(id + 1, -1);
    slot_[id] = static_cast<std::int64_t>(i);
  }
}

SummaryNode TreeSource::load(NodeKey key) const {
  if (key.tree_id < slot_.size() && slot_[key.tree_id] >= 0) {
    const Tree& t = trees_[static_cast<std::size_t>(slot_[key.tree_id])];
    if (key.preorder < t.nodes.size()) return t.nodes[key.preorder];
  }
  throw NotFoundError("node " + std::to_string(key.tree_id) + ":" +
                      std::to_string(key.preorder) + " not found");
}

}  // namespace eseman
