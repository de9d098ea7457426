#include "eseman/query.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "eseman/error.hpp"
#include "eseman/wire.hpp"

namespace eseman {

__extension__ typedef unsigned __int128 u128;

std::uint64_t pixel_window_span(const RangeQuery& q) {
  const auto length = static_cast<u128>(std::max<Timestamp>(q.window.length(), 0));
  const auto px = std::max<std::uint32_t>(q.canvas_px, 1);
  const auto span = (length * q.pixel_window + px - 1) / px;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(span));
}

void validate(const RangeQuery& q, const HierIndex& index) {
  using K = QueryError::Kind;
  const Dataset& ds = index.dataset();
  if (q.dataset != ds.name) throw QueryError(K::kUnknownDataset, "unknown dataset '" + q.dataset + "'");
  if (q.window.begin < 0) throw QueryError(K::kInvalid, "begin must be non-negative");
  if (q.window.begin >= q.window.end) throw QueryError(K::kInvalid, "begin must be less than end");
  if (q.canvas_px == 0) throw QueryError(K::kInvalid, "canvas_px must be positive");
  if (q.pixel_window == 0 || q.pixel_window > q.canvas_px) {
    throw QueryError(K::kInvalid, "pixel_window must be in [1, canvas_px]");
  }
  if (q.tracks.lo > q.tracks.hi || q.tracks.hi >= ds.tracks.size()) {
    throw QueryError(K::kInvalid, "track range outside the dataset");
  }
  if (q.predicate) {
    const auto key = ds.attrs.find_key(q.predicate->key);
    if (!key) throw QueryError(K::kInvalid, "unknown attribute '" + q.predicate->key + "'");
    if (ds.attrs.kind(*key) != AttrKind::kCategorical) {
      throw QueryError(K::kUnsupportedPredicate,
                       "predicates on numeric attribute '" + q.predicate->key + "' are not supported");
    }
  }
}

bool slice_order(const SummarySlice& a, const SummarySlice& b) {
  if (a.track_span.lo != b.track_span.lo) return a.track_span.lo < b.track_span.lo;
  if (a.track_span.hi != b.track_span.hi) return a.track_span.hi < b.track_span.hi;
  if (a.time_span.begin != b.time_span.begin) return a.time_span.begin < b.time_span.begin;
  if (a.time_span.end != b.time_span.end) return a.time_span.end < b.time_span.end;
  if (a.is_exact_event != b.is_exact_event) return a.is_exact_event;
  return a.event_id < b.event_id;
}

std::vector<SummarySlice> assemble_2d_results(std::vector<SummarySlice> slices) {
  std::vector<SummarySlice> out;
  std::vector<SummarySlice> exact;
  out.reserve(slices.size());
  for (auto& s : slices) (s.is_exact_event ? exact : out).push_back(std::move(s));

  std::sort(exact.begin(), exact.end(), [](const SummarySlice& a, const SummarySlice& b) {
    if (a.event_id != b.event_id) return a.event_id < b.event_id;
    return a.time_span.begin < b.time_span.begin;
  });
  for (auto& s : exact) {
    if (!out.empty() && out.back().is_exact_event && out.back().event_id == s.event_id &&
        out.back().track_span == s.track_span && out.back().time_span.end == s.time_span.begin) {
      out.back().time_span.end = s.time_span.end;
    } else {
      out.push_back(std::move(s));
    }
  }
  std::sort(out.begin(), out.end(), slice_order);
  return out;
}

namespace {

struct Filter {
  AttrKey key;
  ValueId value;
};

void traverse(const RangeQuery& q, const HierIndex& index, NodeCache& cache,
              const std::optional<Filter>& filter, std::vector<SummarySlice>& out,
              std::uint64_t& visited) {
  const auto threshold = static_cast<Timestamp>(
      std::min<std::uint64_t>(pixel_window_span(q), std::numeric_limits<Timestamp>::max()));
  const bool per_track = index.kind() != BuilderKind::kKdt2d;
  const NodeSource& source = index.source();

  std::vector<NodeKey> stack;
  for (const TreeInfo& tree : index.trees()) {
    if (per_track && !q.tracks.contains(tree.track)) continue;
    stack.push_back(tree.root);
    while (!stack.empty()) {
      const NodeKey key = stack.back();
      stack.pop_back();
      const SummaryNode& n = cache.get(source, key);
      ++visited;
      if (!spans_overlap(n.time_span, q.window)) continue;
      if (!n.track_span.intersects(q.tracks)) continue;
      if (filter && !n.attrs.contains(filter->key, filter->value)) continue;

      if (n.leaf) {
        SummarySlice s;
        s.track_span = {n.leaf->track, n.leaf->track};
        s.time_span = n.leaf->span();
        s.event_count = 1;
        s.attrs = n.attrs;
        s.is_exact_event = true;
        s.event_id = n.leaf->event_id;
        out.push_back(std::move(s));
      } else if (n.time_span.length() <= threshold) {
        SummarySlice s;
        s.track_span = n.track_span;
        s.time_span = n.time_span;
        s.event_count = n.event_count;
        s.attrs = n.attrs;
        out.push_back(std::move(s));
      } else {
        stack.push_back(*n.right);
        stack.push_back(*n.left);
      }
    }
  }
}

}  // namespace

QueryResult range_query(const RangeQuery& q, const HierIndex& index, NodeCache& cache) {
  const auto start = std::chrono::steady_clock::now();
  validate(q, index);

  QueryResult r;
  const std::uint64_t hits_before = cache.hits();
  std::uint64_t visited = 0;

  std::optional<Filter> filter;
  bool unmatched = false;
  if (q.predicate) {
    const Dataset& ds = index.dataset();
    const AttrKey key = *ds.attrs.find_key(q.predicate->key);
    const auto value = ds.attrs.find_value(key, q.predicate->value);
    if (value) {
      filter = Filter{key, *value};
    } else {
      unmatched = true;  // no event carries the value
    }
  }
  if (!unmatched) traverse(q, index, cache, filter, r.slices, visited);
  cache.end_query_evict();

  if (index.kind() == BuilderKind::kKdt2d) {
    r.slices = assemble_2d_results(std::move(r.slices));
  } else {
    std::sort(r.slices.begin(), r.slices.end(), slice_order);
  }

  append_slices_json(r.payload, r.slices, index.dataset().attrs);
  r.stats.nodes_visited = visited;
  r.stats.cache_hits = cache.hits() - hits_before;
  r.stats.slices_returned = r.slices.size();
  r.stats.bytes_returned = r.payload.size();
  r.stats.fetch_time_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start)
          .count());
  return r;
}

QueryResult conditional_range_query(const RangeQuery& q, const HierIndex& index, NodeCache& cache) {
  if (!q.predicate) throw QueryError(QueryError::Kind::kInvalid, "conditional query needs a predicate");
  return range_query(q, index, cache);
}

}  // namespace eseman
