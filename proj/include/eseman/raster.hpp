#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "eseman/event.hpp"
#include "eseman/kernels.hpp"
#include "eseman/query.hpp"

namespace eseman {

// Row-major intensities in [0, 1].
struct RasterGrid {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> cells;

  RasterGrid() = default;
  RasterGrid(std::uint32_t w, std::uint32_t h) : width(w), height(h), cells(std::size_t{w} * h, 0.0) {}

  double at(std::uint32_t x, std::uint32_t y) const { return cells[std::size_t{y} * width + x]; }
  double& at(std::uint32_t x, std::uint32_t y) { return cells[std::size_t{y} * width + x]; }

  friend bool operator==(const RasterGrid&, const RasterGrid&) = default;
};

// Vertical placement: each visible track gets a band of row_px rows, bands
// separated by gap_px empty rows.
struct TrackLayout {
  TrackRange tracks;
  std::uint32_t row_px = 4;
  std::uint32_t gap_px = 1;

  std::uint32_t height() const { return tracks.size() * (row_px + gap_px) - gap_px; }
  std::uint32_t band_top(TrackIndex t) const { return (t - tracks.lo) * (row_px + gap_px); }
};

// Horizontal placement: the window split into `width` equal columns.
struct Frame {
  TimeSpan window;
  std::uint32_t width = kDefaultCanvasPx;
  TrackLayout layout;

  static Frame of(const RangeQuery& q) { return {q.window, q.canvas_px, {q.tracks}}; }
};

// Anything drawable: a bar over a track range.
struct RasterMark {
  TrackRange tracks;
  TimeSpan span;  // zero width draws its one-nanosecond footprint
};

// Columns [first, last] touched with positive measure by the span's footprint
// clipped to the window; nullopt when the clipped footprint is empty. Throws
// Error when the span lies entirely outside the closed window.
std::optional<std::pair<std::uint32_t, std::uint32_t>> column_range(TimeSpan span, const Frame& f);

RasterGrid rasterize(std::span<const RasterMark> marks, const Frame& f);
RasterGrid rasterize(std::span<const SummarySlice> slices, const Frame& f);
RasterGrid rasterize(std::span<const Event> events, const Frame& f);
RasterGrid rasterize(std::span<const Event* const> events, const Frame& f);

// Per track, one occupancy value per column; nonzero columns are filled.
RasterGrid rasterize_occupancy(const std::vector<std::vector<std::uint64_t>>& per_track,
                               const Frame& f);

struct SsimParams {
  std::uint32_t window = 8;
  std::uint32_t stride = 1;
  double dynamic_range = 1.0;
  double k1 = 0.01;
  double k2 = 0.03;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

// Mean SSIM over all window positions (population statistics). Windows larger
// than the grid are clamped to its dimensions. Throws Error on dimension
// mismatch or an invalid window.
double ssim(const RasterGrid& a, const RasterGrid& b, const SsimParams& p = {},
            Execution exec = Execution::kParallel);

// Direct evaluation of every window; the reference for the fast paths.
double ssim_reference(const RasterGrid& a, const RasterGrid& b, const SsimParams& p = {});

// 8-bit grayscale PNG, value = round(255 * cell).
void export_png(const RasterGrid& grid, const std::filesystem::path& path);
RasterGrid import_png(const std::filesystem::path& path);

}  // namespace eseman
