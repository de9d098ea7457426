#include "eseman/kernels.hpp"

#include <omp.h>

#include "eseman/error.hpp"

namespace eseman {

std::string_view execution_name(Execution e) {
  return e == Execution::kSerial ? "serial" : "parallel";
}

std::vector<Tree> build_trees(const Dataset& ds, const std::vector<Event>& events,
                              BuilderKind kind, Execution exec) {
  if (kind == BuilderKind::kKdt2d) {
    std::vector<Tree> out;
    if (!events.empty()) out.push_back(build_2d_kdt(event_refs(events), ds.attrs, 0));
    return out;
  }

  const auto groups = events_by_track(events, ds.tracks.size());
  std::vector<Tree> built(groups.size());
  const auto build_one = [&](std::size_t t) {
    if (groups[t].empty()) return;
    EventRefs refs;
    refs.reserve(groups[t].size());
    for (std::uint32_t i : groups[t]) refs.push_back(&events[i]);
    const auto id = static_cast<std::uint32_t>(t);
    built[t] = kind == BuilderKind::kKdt1d ? build_1d_kdt(std::move(refs), id, ds.attrs)
                                           : build_agglomerative(std::move(refs), id, ds.attrs);
  };

  if (exec == Execution::kSerial) {
    for (std::size_t t = 0; t < groups.size(); ++t) build_one(t);
  } else {
    // Track sizes vary widely; dynamic scheduling balances them.
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t t = 0; t < groups.size(); ++t) {
      try {
        build_one(t);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<Tree> out;
  for (auto& t : built) {
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::uint32_t> scan_overlapping(std::span<const Event> events, TimeSpan window,
                                            TrackRange tracks, Execution exec) {
  const auto keep = [&](const Event& e) {
    return e.leave >= window.begin && e.enter <= window.end && tracks.contains(e.track);
  };
  std::vector<std::uint32_t> out;
  if (exec == Execution::kSerial) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (keep(events[i])) out.push_back(static_cast<std::uint32_t>(i));
    }
    return out;
  }

  // Static chunks concatenated in chunk order keep the serial output order.
  const int chunks = std::max(1, omp_get_max_threads());
  std::vector<std::vector<std::uint32_t>> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(static, 1)
  for (int c = 0; c < chunks; ++c) {
    const std::size_t lo = events.size() * static_cast<std::size_t>(c) / chunks;
    const std::size_t hi = events.size() * static_cast<std::size_t>(c + 1) / chunks;
    auto& part = parts[static_cast<std::size_t>(c)];
    for (std::size_t i = lo; i < hi; ++i) {
      if (keep(events[i])) part.push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace eseman
