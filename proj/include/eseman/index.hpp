#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eseman/kernels.hpp"
#include "eseman/node_store.hpp"
#include "eseman/tree.hpp"

namespace eseman {

struct TreeInfo {
  std::uint32_t tree_id = 0;
  TrackIndex track = 0;  // meaningful for per-track forests only
  NodeKey root;
  std::uint64_t node_count = 0;

  friend bool operator==(const TreeInfo&, const TreeInfo&) = default;
};

std::vector<TreeInfo> describe_trees(const std::vector<Tree>& trees);

// A built index for one dataset and builder kind: tree roots plus the node
// source the traversal reads from.
class HierIndex {
 public:
  HierIndex(std::shared_ptr<const Dataset> dataset, BuilderKind kind, std::vector<TreeInfo> trees,
            std::shared_ptr<const NodeSource> source);

  static HierIndex in_memory(std::shared_ptr<const Dataset> dataset, BuilderKind kind,
                             std::vector<Tree> trees);

  const Dataset& dataset() const { return *dataset_; }
  const std::shared_ptr<const Dataset>& dataset_ptr() const { return dataset_; }
  BuilderKind kind() const { return kind_; }
  const std::vector<TreeInfo>& trees() const { return trees_; }
  const NodeSource& source() const { return *source_; }
  std::uint64_t node_count() const;

 private:
  std::shared_ptr<const Dataset> dataset_;
  BuilderKind kind_;
  std::vector<TreeInfo> trees_;
  std::shared_ptr<const NodeSource> source_;
};

struct DatasetDescriptor {
  std::string name;
  std::uint64_t tracks = 0;
  std::uint64_t events = 0;
  TimeSpan time_extent;
  std::vector<BuilderKind> builders;
  AttrSchema attr_schema;
};

inline constexpr int kFormatVersion = 1;

// Store directory layout:
//
//   <root>/<dataset>/manifest.json    name, track labels, counts, extent, schema
//   <root>/<dataset>/attrs.json       attribute dictionary in id order
//   <root>/<dataset>/events.jsonl     sanitized trace, id order
//   <root>/<dataset>/<builder>/manifest.json   builder, node count, tree roots
//   <root>/<dataset>/<builder>/data.kv          node store
class Catalog {
 public:
  explicit Catalog(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  void write_dataset(const Dataset& ds, const std::vector<Event>& events);
  bool has_dataset(const std::string& name) const;
  // Manifest and attribute dictionary only.
  Dataset load_dataset(const std::string& name) const;
  std::vector<Event> load_events(const Dataset& ds) const;

  // Builds, persists and returns the node count.
  std::uint64_t build_index(const Dataset& ds, const std::vector<Event>& events, BuilderKind kind,
                            std::uint64_t map_size = std::uint64_t{2} << 30,
                            Execution exec = Execution::kParallel);
  bool has_index(const std::string& name, BuilderKind kind) const;
  // Opens the node store read-only.
  HierIndex open_index(std::shared_ptr<const Dataset> ds, BuilderKind kind) const;

  std::vector<BuilderKind> builders(const std::string& name) const;
  std::vector<DatasetDescriptor> list() const;

 private:
  std::filesystem::path root_;
};

// Rejects names that are not a single plain path component.
bool valid_dataset_name(const std::string& name);

}  // namespace eseman
