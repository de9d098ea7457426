#include "eseman/raster.hpp"

#include <algorithm>
#include <cmath>

#include "eseman/error.hpp"

namespace eseman {

__extension__ typedef __int128 i128;

std::optional<std::pair<std::uint32_t, std::uint32_t>> column_range(TimeSpan span, const Frame& f) {
  const TimeSpan w = f.window;
  if (span.end < w.begin || span.begin > w.end) {
    throw Error("raster item [" + std::to_string(span.begin) + ", " + std::to_string(span.end) +
                ") lies outside the window");
  }
  const TimeSpan c = intersection(footprint(span), w);
  if (c.empty()) return std::nullopt;
  const i128 px = f.width;
  const i128 len = w.length();
  const i128 s = static_cast<i128>(c.begin - w.begin) * px;
  const i128 e = static_cast<i128>(c.end - w.begin) * px;
  const auto first = static_cast<std::uint32_t>(s / len);
  const auto last = static_cast<std::uint32_t>((e + len - 1) / len - 1);
  return std::pair{first, last};
}

namespace {

void fill(RasterGrid& g, const Frame& f, TrackRange tracks, std::uint32_t c0, std::uint32_t c1) {
  const TrackLayout& l = f.layout;
  if (!tracks.intersects(l.tracks)) return;
  const TrackIndex lo = std::max(tracks.lo, l.tracks.lo);
  const TrackIndex hi = std::min(tracks.hi, l.tracks.hi);
  for (TrackIndex t = lo; t <= hi; ++t) {
    const std::uint32_t top = l.band_top(t);
    for (std::uint32_t y = top; y < top + l.row_px; ++y) {
      std::fill_n(g.cells.begin() + std::size_t{y} * g.width + c0, c1 - c0 + 1, 1.0);
    }
  }
}

void check_frame(const Frame& f) {
  if (f.width == 0 || f.window.begin >= f.window.end || f.layout.tracks.lo > f.layout.tracks.hi ||
      f.layout.row_px == 0) {
    throw Error("invalid raster frame");
  }
}

template <typename Range, typename Mark>
RasterGrid draw(const Range& items, const Frame& f, Mark&& mark) {
  check_frame(f);
  RasterGrid g(f.width, f.layout.height());
  for (const auto& item : items) {
    const RasterMark m = mark(item);
    if (const auto cols = column_range(m.span, f)) fill(g, f, m.tracks, cols->first, cols->second);
  }
  return g;
}

}  // namespace

RasterGrid rasterize(std::span<const RasterMark> marks, const Frame& f) {
  return draw(marks, f, [](const RasterMark& m) { return m; });
}

RasterGrid rasterize(std::span<const SummarySlice> slices, const Frame& f) {
  return draw(slices, f, [](const SummarySlice& s) { return RasterMark{s.track_span, s.time_span}; });
}

RasterGrid rasterize(std::span<const Event> events, const Frame& f) {
  return draw(events, f, [](const Event& e) { return RasterMark{{e.track, e.track}, e.span()}; });
}

RasterGrid rasterize(std::span<const Event* const> events, const Frame& f) {
  return draw(events, f, [](const Event* e) { return RasterMark{{e->track, e->track}, e->span()}; });
}

RasterGrid rasterize_occupancy(const std::vector<std::vector<std::uint64_t>>& per_track,
                               const Frame& f) {
  check_frame(f);
  RasterGrid g(f.width, f.layout.height());
  if (per_track.size() != f.layout.tracks.size()) throw Error("occupancy track count mismatch");
  for (std::uint32_t i = 0; i < per_track.size(); ++i) {
    const auto& cols = per_track[i];
    if (cols.size() != f.width) throw Error("occupancy column count mismatch");
    const TrackIndex t = f.layout.tracks.lo + i;
    for (std::uint32_t c = 0; c < f.width; ++c) {
      if (cols[c] != 0) fill(g, f, {t, t}, c, c);
    }
  }
  return g;
}

namespace {

struct WindowShape {
  std::uint32_t w;
  std::uint32_t h;
};

WindowShape window_shape(const RasterGrid& a, const RasterGrid& b, const SsimParams& p) {
  if (a.width != b.width || a.height != b.height) {
    throw Error("ssim: grid dimensions differ (" + std::to_string(a.width) + "x" +
                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                std::to_string(b.height) + ")");
  }
  if (a.width == 0 || a.height == 0) throw Error("ssim: empty grid");
  if (p.window < 2 || p.stride == 0) throw Error("ssim: window must be >= 2 and stride >= 1");
  return {std::min(p.window, a.width), std::min(p.window, a.height)};
}

// One window's SSIM from its moments. Kept in one place so identical inputs
// give numerator == denominator bit for bit.
double window_ssim(double n, double sa, double sb, double saa, double sbb, double sab,
                   const SsimParams& p) {
  const double ma = sa / n;
  const double mb = sb / n;
  const double va = saa / n - ma * ma;
  const double vb = sbb / n - mb * mb;
  const double cov = sab / n - ma * mb;
  const double num = (2.0 * ma * mb + p.c1()) * (2.0 * cov + p.c2());
  const double den = (ma * ma + mb * mb + p.c1()) * (va + vb + p.c2());
  return num / den;
}

}  // namespace

double ssim_reference(const RasterGrid& a, const RasterGrid& b, const SsimParams& p) {
  const WindowShape win = window_shape(a, b, p);
  const double n = static_cast<double>(win.w) * win.h;
  double total = 0.0;
  std::uint64_t count = 0;
  for (std::uint32_t y = 0; y + win.h <= a.height; y += p.stride) {
    for (std::uint32_t x = 0; x + win.w <= a.width; x += p.stride) {
      double ma = 0, mb = 0;
      for (std::uint32_t j = 0; j < win.h; ++j) {
        for (std::uint32_t i = 0; i < win.w; ++i) {
          ma += a.at(x + i, y + j);
          mb += b.at(x + i, y + j);
        }
      }
      ma /= n;
      mb /= n;
      double va = 0, vb = 0, cov = 0;
      for (std::uint32_t j = 0; j < win.h; ++j) {
        for (std::uint32_t i = 0; i < win.w; ++i) {
          const double da = a.at(x + i, y + j) - ma;
          const double db = b.at(x + i, y + j) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      }
      va /= n;
      vb /= n;
      cov /= n;
      total += ((2 * ma * mb + p.c1()) * (2 * cov + p.c2())) /
               ((ma * ma + mb * mb + p.c1()) * (va + vb + p.c2()));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double ssim(const RasterGrid& a, const RasterGrid& b, const SsimParams& p, Execution exec) {
  const WindowShape win = window_shape(a, b, p);
  const double n = static_cast<double>(win.w) * win.h;
  const std::uint32_t rows = (a.height - win.h) / p.stride + 1;
  const std::uint32_t cols = (a.width - win.w) / p.stride + 1;
  std::vector<double> row_total(rows, 0.0);

  // For each window row: column sums over the window height, then a running
  // sum across the window width.
  const auto do_row = [&](std::uint32_t r) {
    const std::uint32_t y0 = r * p.stride;
    std::vector<double> ca(a.width), cb(a.width), caa(a.width), cbb(a.width), cab(a.width);
    for (std::uint32_t x = 0; x < a.width; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::uint32_t y = y0; y < y0 + win.h; ++y) {
        const double va = a.at(x, y);
        const double vb = b.at(x, y);
        sa += va;
        sb += vb;
        saa += va * va;
        sbb += vb * vb;
        sab += va * vb;
      }
      ca[x] = sa;
      cb[x] = sb;
      caa[x] = saa;
      cbb[x] = sbb;
      cab[x] = sab;
    }
    double total = 0.0;
    for (std::uint32_t c = 0; c < cols; ++c) {
      const std::uint32_t x0 = c * p.stride;
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (std::uint32_t x = x0; x < x0 + win.w; ++x) {
        sa += ca[x];
        sb += cb[x];
        saa += caa[x];
        sbb += cbb[x];
        sab += cab[x];
      }
      total += window_ssim(n, sa, sb, saa, sbb, sab, p);
    }
    row_total[r] = total;
  };

  if (exec == Execution::kSerial) {
    for (std::uint32_t r = 0; r < rows; ++r) do_row(r);
  } else {
#pragma omp parallel for schedule(static)
    for (std::uint32_t r = 0; r < rows; ++r) do_row(r);
  }
  double total = 0.0;
  for (double t : row_total) total += t;
  return total / (static_cast<double>(rows) * cols);
}

}  // namespace eseman
