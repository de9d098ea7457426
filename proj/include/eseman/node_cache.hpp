#pragma once

#include <cstdint>
#include <unordered_map>

#include "eseman/node_store.hpp"

namespace eseman {

// Per-session node cache. Holds exactly the nodes touched by the current
// query until end_query_evict, after which it holds exactly those and nothing
// else. Not thread-safe; a session serializes its queries.
class NodeCache {
 public:
  // Returns the cached node or loads it from `source`. Either way the key
  // joins the current query's touched set. The reference stays valid until
  // the next end_query_evict or clear.
  const SummaryNode& get(const NodeSource& source, NodeKey key);

  // Drops every entry not touched since the previous call and starts a new
  // touched set. Returns the number evicted.
  std::size_t end_query_evict();

  void clear();

  bool contains(NodeKey key) const { return entries_.count(key.packed()) != 0; }
  std::size_t size() const { return entries_.size(); }
  std::size_t touched() const { return touched_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  struct Entry {
    SummaryNode node;
    std::uint64_t generation;
  };
  std::unordered_map<std::uint64_t, Entry> entries_;
  std::uint64_t generation_ = 0;
  std::size_t touched_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace eseman
