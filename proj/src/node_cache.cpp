#include "eseman/node_cache.hpp"

namespace eseman {

const SummaryNode& NodeCache::get(const NodeSource& source, NodeKey key) {
  const auto [it, inserted] = entries_.try_emplace(key.packed());
  if (inserted) {
    try {
      it->second.node = source.load(key);
    } catch (...) {
      entries_.erase(it);
      throw;
    }
    ++misses_;
    it->second.generation = generation_;
    ++touched_;
  } else {
    ++hits_;
    if (it->second.generation != generation_) {
      it->second.generation = generation_;
      ++touched_;
    }
  }
  return it->second.node;
}

std::size_t NodeCache::end_query_evict() {
  const std::size_t evicted = std::erase_if(
      entries_, [&](const auto& kv) { return kv.second.generation != generation_; });
  ++generation_;
  touched_ = 0;
  return evicted;
}

void NodeCache::clear() {
  entries_.clear();
  touched_ = 0;
  ++generation_;
}

}  // namespace eseman
