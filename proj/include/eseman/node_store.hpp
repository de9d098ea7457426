#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eseman/tree.hpp"

namespace eseman {

// Node serialization, all integers little-endian:
//
//   u64 key | u8 flags (1 = internal, 2 = leaf segment) | u32 track_lo | u32 track_hi
//   i64 begin | i64 end | u64 event_count | u64 left key | u64 right key
//   [leaf: u64 event id | u32 track | i64 enter | i64 leave]
//   u32 attr section length | u32 entry count | entries
//
// entry: u32 key | u8 kind | categorical: u32 n, n x u32 value id
//                          | numeric: f64 min, f64 max, f64 mean, u64 count
// Child keys are zero when absent.
inline constexpr std::size_t kNodeHeaderBytes = 57;

std::vector<std::byte> encode_node(const SummaryNode& node);
void encode_node(const SummaryNode& node, std::vector<std::byte>& out);
// Throws StoreError on truncated or malformed input.
SummaryNode decode_node(std::span<const std::byte> bytes);

// Anything nodes can be loaded from by key.
class NodeSource {
 public:
  virtual ~NodeSource() = default;
  // Throws NotFoundError for unknown keys.
  virtual SummaryNode load(NodeKey key) const = 0;
};

// Trees held in memory, keyed by tree id.
class TreeSource final : public NodeSource {
 public:
  explicit TreeSource(std::vector<Tree> trees);
  SummaryNode load(NodeKey key) const override;
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  std::vector<std::int64_t> slot_;  // tree id -> position in trees_, -1 if absent
};

struct StoreConfig {
  std::filesystem::path path;  // the data file
  std::uint64_t map_size_bytes = std::uint64_t{2} << 30;
  bool read_only = false;
};

// Embedded key-value store for serialized nodes in one memory-mapped file of
// fixed size. Records are appended; each committed write also appends a fresh
// sorted key index and then publishes it by rewriting the header, so an
// interrupted or rejected write leaves the previous state visible.
//
// Writers hold an exclusive file lock and readers a shared one, so a store is
// open for one writer or many readers.
class NodeStore final : public NodeSource {
 public:
  // Opens or creates. A new file is sized to map_size_bytes; an existing
  // file keeps its recorded map size.
  explicit NodeStore(const StoreConfig& config);
  ~NodeStore() override;

  NodeStore(const NodeStore&) = delete;
  NodeStore& operator=(const NodeStore&) = delete;

  // Writes every node of the trees in one commit. Returns the number of keys
  // written. Throws CapacityError, leaving the store unchanged, when the
  // result would not fit.
  std::size_t put_trees(std::span<const Tree> trees);
  std::size_t put_tree(const Tree& tree) { return put_trees({&tree, 1}); }

  SummaryNode load(NodeKey key) const override;
  // Raw record bytes; valid while the store is open and unmodified.
  std::span<const std::byte> get_bytes(NodeKey key) const;
  bool contains(NodeKey key) const;

  std::uint64_t size() const;  // committed keys
  std::uint64_t map_size() const { return map_size_; }
  std::uint64_t bytes_used() const;
  bool read_only() const { return read_only_; }

 private:
  struct IndexEntry;
  const IndexEntry* find(NodeKey key) const;
  std::span<const IndexEntry> index() const;

  int fd_ = -1;
  std::byte* base_ = nullptr;
  std::uint64_t map_size_ = 0;
  bool read_only_ = false;
};

}  // namespace eseman
