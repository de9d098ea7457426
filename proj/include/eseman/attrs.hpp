#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace eseman {

enum class AttrKind : std::uint8_t { kCategorical = 0, kNumeric = 1 };

std::string_view attr_kind_name(AttrKind kind);
std::optional<AttrKind> parse_attr_kind(std::string_view name);

using AttrKey = std::uint32_t;
using ValueId = std::uint32_t;

struct AttrDecl {
  std::string name;
  AttrKind kind = AttrKind::kCategorical;

  friend bool operator==(const AttrDecl&, const AttrDecl&) = default;
};

using AttrSchema = std::vector<AttrDecl>;

// Parses "function,bytes:numeric". Kinds default to categorical.
AttrSchema parse_schema(std::string_view text);

// One attribute value on an event. `number` is the parsed value for numeric
// attributes and 0 otherwise.
struct EventAttr {
  AttrKey key = 0;
  ValueId value = 0;
  double number = 0.0;

  friend bool operator==(const EventAttr&, const EventAttr&) = default;
};

// Interns attribute names and values. Keys are dense in declaration order;
// value ids are dense per key in first-seen order.
class AttrDictionary {
 public:
  // Declares a key; re-declaring with a different kind throws BuildError.
  AttrKey declare(std::string_view name, AttrKind kind);
  std::optional<AttrKey> find_key(std::string_view name) const;

  ValueId intern(AttrKey key, std::string_view value);
  std::optional<ValueId> find_value(AttrKey key, std::string_view value) const;

  std::size_t key_count() const { return entries_.size(); }
  std::size_t value_count(AttrKey key) const { return entries_.at(key).values.size(); }
  const std::string& key_name(AttrKey key) const { return entries_.at(key).name; }
  AttrKind kind(AttrKey key) const { return entries_.at(key).kind; }
  const std::string& value(AttrKey key, ValueId id) const {
    return entries_.at(key).values.at(id);
  }

  AttrSchema schema() const;

  bool operator==(const AttrDictionary& o) const;

 private:
  struct Entry {
    std::string name;
    AttrKind kind;
    std::vector<std::string> values;
    std::unordered_map<std::string, ValueId> lookup;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, AttrKey> keys_;
};

struct NumericStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::uint64_t count = 0;

  static NumericStats of(double v) { return {v, v, v, 1}; }
  // Count-weighted merge.
  void merge(const NumericStats& o);

  friend bool operator==(const NumericStats&, const NumericStats&) = default;
};

struct AttrEntry {
  AttrKey key = 0;
  AttrKind kind = AttrKind::kCategorical;
  std::vector<ValueId> values;  // categorical: sorted, unique
  NumericStats stats;           // numeric only

  friend bool operator==(const AttrEntry&, const AttrEntry&) = default;
};

// Per-node attribute summary: the set of distinct categorical values and
// mergeable numeric statistics observed in a subtree.
class AttrSummary {
 public:
  AttrSummary() = default;

  static AttrSummary of_event(const std::vector<EventAttr>& attrs,
                              const AttrDictionary& dict);

  // Union of categorical sets, weighted merge of numeric stats. Throws
  // BuildError when the same key has different kinds on the two sides.
  void merge(const AttrSummary& other);

  bool contains(AttrKey key, ValueId value) const;
  const AttrEntry* find(AttrKey key) const;

  bool empty() const { return entries_.empty(); }
  const std::vector<AttrEntry>& entries() const { return entries_; }
  std::vector<AttrEntry>& mutable_entries() { return entries_; }

  friend bool operator==(const AttrSummary&, const AttrSummary&) = default;

 private:
  std::vector<AttrEntry> entries_;  // sorted by key
};

}  // namespace eseman
