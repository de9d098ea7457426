#include "eseman/attrs.hpp"

#include <algorithm>
#include <iterator>

#include "eseman/error.hpp"

namespace eseman {

std::string_view attr_kind_name(AttrKind kind) {
  return kind == AttrKind::kNumeric ? "numeric" : "categorical";
}

std::optional<AttrKind> parse_attr_kind(std::string_view name) {
  if (name == "categorical") return AttrKind::kCategorical;
  if (name == "numeric") return AttrKind::kNumeric;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

AttrSchema parse_schema(std::string_view text) {
  AttrSchema schema;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;

    AttrDecl decl;
    const auto colon = item.find(':');
    decl.name = std::string(trim(item.substr(0, colon)));
    if (colon != std::string_view::npos) {
      const auto kind = parse_attr_kind(trim(item.substr(colon + 1)));
      if (!kind) throw BuildError("unknown attribute kind in schema entry '" + std::string(item) + "'");
      decl.kind = *kind;
    }
    for (const auto& prev : schema) {
      if (prev.name == decl.name && prev.kind != decl.kind) {
        throw BuildError("attribute '" + decl.name + "' declared with conflicting kinds");
      }
    }
    if (std::none_of(schema.begin(), schema.end(),
                     [&](const AttrDecl& d) { return d.name == decl.name; })) {
      schema.push_back(std::move(decl));
    }
  }
  return schema;
}

AttrKey AttrDictionary::declare(std::string_view name, AttrKind kind) {
  if (auto it = keys_.find(std::string(name)); it != keys_.end()) {
    if (entries_[it->second].kind != kind) {
      throw BuildError("attribute '" + std::string(name) + "' declared with conflicting kinds");
    }
    return it->second;
  }
  const auto key = static_cast<AttrKey>(entries_.size());
  entries_.push_back(Entry{std::string(name), kind, {}, {}});
  keys_.emplace(std::string(name), key);
  return key;
}

std::optional<AttrKey> AttrDictionary::find_key(std::string_view name) const {
  if (auto it = keys_.find(std::string(name)); it != keys_.end()) return it->second;
  return std::nullopt;
}

ValueId AttrDictionary::intern(AttrKey key, std::string_view value) {
  Entry& e = entries_.at(key);
  auto [it, inserted] = e.lookup.try_emplace(std::string(value), static_cast<ValueId>(e.values.size()));
  if (inserted) e.values.emplace_back(value);
  return it->second;
}

std::optional<ValueId> AttrDictionary::find_value(AttrKey key, std::string_view value) const {
  const Entry& e = entries_.at(key);
  if (auto it = e.lookup.find(std::string(value)); it != e.lookup.end()) return it->second;
  return std::nullopt;
}

AttrSchema AttrDictionary::schema() const {
  AttrSchema out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.name, e.kind});
  return out;
}

bool AttrDictionary::operator==(const AttrDictionary& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = o.entries_[i];
    if (a.name != b.name || a.kind != b.kind || a.values != b.values) return false;
  }
  return true;
}

void NumericStats::merge(const NumericStats& o) {
  if (o.count == 0) return;
  if (count == 0) {
    *this = o;
    return;
  }
  const double total = static_cast<double>(count + o.count);
  mean = (mean * static_cast<double>(count) + o.mean * static_cast<double>(o.count)) / total;
  min = std::min(min, o.min);
  max = std::max(max, o.max);
  count += o.count;
}

AttrSummary AttrSummary::of_event(const std::vector<EventAttr>& attrs,
                                  const AttrDictionary& dict) {
  AttrSummary s;
  s.entries_.reserve(attrs.size());
  for (const auto& a : attrs) {
    AttrEntry e;
    e.key = a.key;
    e.kind = dict.kind(a.key);
    if (e.kind == AttrKind::kNumeric) {
      e.stats = NumericStats::of(a.number);
    } else {
      e.values.push_back(a.value);
    }
    s.entries_.push_back(std::move(e));
  }
  std::sort(s.entries_.begin(), s.entries_.end(),
            [](const AttrEntry& x, const AttrEntry& y) { return x.key < y.key; });
  return s;
}

void AttrSummary::merge(const AttrSummary& other) {
  if (other.entries_.empty()) return;
  if (entries_.empty()) {
    entries_ = other.entries_;
    return;
  }
  std::vector<AttrEntry> out;
  out.reserve(entries_.size() + other.entries_.size());
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() || b != other.entries_.end()) {
    if (b == other.entries_.end() || (a != entries_.end() && a->key < b->key)) {
      out.push_back(std::move(*a++));
    } else if (a == entries_.end() || b->key < a->key) {
      out.push_back(*b++);
    } else {
      if (a->kind != b->kind) {
        throw BuildError("attribute key " + std::to_string(a->key) +
                         " has conflicting kinds in sibling summaries");
      }
      AttrEntry merged = std::move(*a);
      if (merged.kind == AttrKind::kNumeric) {
        merged.stats.merge(b->stats);
      } else {
        std::vector<ValueId> values;
        values.reserve(merged.values.size() + b->values.size());
        std::set_union(merged.values.begin(), merged.values.end(), b->values.begin(),
                       b->values.end(), std::back_inserter(values));
        merged.values = std::move(values);
      }
      out.push_back(std::move(merged));
      ++a;
      ++b;
    }
  }
  entries_ = std::move(out);
}

const AttrEntry* AttrSummary::find(AttrKey key) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                             [](const AttrEntry& e, AttrKey k) { return e.key < k; });
  return it != entries_.end() && it->key == key ? &*it : nullptr;
}

bool AttrSummary::contains(AttrKey key, ValueId value) const {
  const AttrEntry* e = find(key);
  return e && e->kind == AttrKind::kCategorical &&
         std::binary_search(e->values.begin(), e->values.end(), value);
}

}  // namespace eseman
