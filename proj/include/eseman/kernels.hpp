#pragma once

// Data-parallel kernels. Each has a serial reference path kept for parity
// tests and for the benchmark target that compares the two.

#include <span>
#include <string_view>
#include <vector>

#include "eseman/event.hpp"
#include "eseman/tree.hpp"

namespace eseman {

enum class Execution { kSerial, kParallel };

std::string_view execution_name(Execution e);

// Per-track forest (one tree per non-empty track, tree id == track index) for
// the 1D KD-tree and agglomerative builders, or the single global tree
// (tree id 0) for the 2D KD-tree.
std::vector<Tree> build_trees(const Dataset& ds, const std::vector<Event>& events,
                              BuilderKind kind, Execution exec = Execution::kParallel);

// Positions of events with leave >= window.begin and enter <= window.end on
// tracks in `tracks`, in id order.
std::vector<std::uint32_t> scan_overlapping(std::span<const Event> events, TimeSpan window,
                                            TrackRange tracks,
                                            Execution exec = Execution::kParallel);

}  // namespace eseman
