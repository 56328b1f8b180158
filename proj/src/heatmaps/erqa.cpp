#include <algorithm>
#include <cmath>

#include "srprom/heatmaps.hpp"
#include "srprom/raster.hpp"

// Edge-restoration score in the spirit of ERQA: edges of reference and test
// are extracted per block and compared with a small spatial tolerance. This
// is a reconstruction; the released ERQA implementation differs in its edge
// detector and shift compensation.

namespace srprom::heatmaps {

std::vector<double> sobel_magnitude(const ImageBuffer& img) {
  const auto g = raster::to_grayscale(img);
  const int w = g.width();
  const int h = g.height();
  auto px = [&](int x, int y) -> double { return g.at(raster::reflect_index(x, w), raster::reflect_index(y, h)); };
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      out[static_cast<std::size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

std::vector<std::uint8_t> block_edges(const std::vector<double>& magnitude, int width, int x0, int y0,
                                      const ErqaParams& p) {
  const int b = p.block;
  double peak = 0.0;
  for (int y = 0; y < b; ++y)
    for (int x = 0; x < b; ++x) peak = std::max(peak, magnitude[static_cast<std::size_t>(y0 + y) * width + x0 + x]);
  std::vector<std::uint8_t> edges(static_cast<std::size_t>(b) * b, 0);
  if (peak <= p.min_gradient) return edges;
  const double thr = p.relative_threshold * peak;
  for (int y = 0; y < b; ++y) {
    for (int x = 0; x < b; ++x) {
      const double m = magnitude[static_cast<std::size_t>(y0 + y) * width + x0 + x];
      if (m >= thr && m > p.min_gradient) edges[static_cast<std::size_t>(y) * b + x] = 1;
    }
  }
  return edges;
}

namespace {

// Fraction of `from` pixels with an `to` pixel within Chebyshev distance `tol`.
double covered_fraction(const std::vector<std::uint8_t>& from, const std::vector<std::uint8_t>& to, int b, int tol,
                        std::size_t from_count) {
  std::size_t hit = 0;
  for (int y = 0; y < b; ++y) {
    for (int x = 0; x < b; ++x) {
      if (!from[static_cast<std::size_t>(y) * b + x]) continue;
      bool found = false;
      for (int dy = -tol; dy <= tol && !found; ++dy) {
        for (int dx = -tol; dx <= tol && !found; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= b || ny >= b) continue;
          found = to[static_cast<std::size_t>(ny) * b + nx] != 0;
        }
      }
      if (found) ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(from_count);
}

}  // namespace

double edge_f1(const std::vector<std::uint8_t>& ref_edges, const std::vector<std::uint8_t>& test_edges, int block,
               int tolerance) {
  const auto nr = static_cast<std::size_t>(std::count(ref_edges.begin(), ref_edges.end(), 1));
  const auto nt = static_cast<std::size_t>(std::count(test_edges.begin(), test_edges.end(), 1));
  if (nr == 0 && nt == 0) return 1.0;
  if (nr == 0 || nt == 0) return 0.0;
  const double precision = covered_fraction(test_edges, ref_edges, block, tolerance, nt);
  const double recall = covered_fraction(ref_edges, test_edges, block, tolerance, nr);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

BlockGrid erqa_map(const ImageBuffer& ref, const ImageBuffer& test, const ErqaParams& params) {
  if (ref.size() != test.size()) throw ValidationError("erqa_map: image dimensions differ");
  BlockGrid grid = BlockGrid::make(ref.size(), params.block, params.block);
  const auto mr = sobel_magnitude(ref);
  const auto mt = sobel_magnitude(test);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int x0 = c * params.block;
      const int y0 = r * params.block;
      const auto er = block_edges(mr, ref.width(), x0, y0, params);
      const auto et = block_edges(mt, ref.width(), x0, y0, params);
      grid.at(c, r) = edge_f1(er, et, params.block, params.tolerance);
    }
  }
  return grid;
}

}  // namespace srprom::heatmaps
