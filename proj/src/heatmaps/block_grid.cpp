#include <algorithm>

#include "srprom/heatmaps.hpp"

namespace srprom::heatmaps {

namespace {

struct AxisCover {
  int lo = 0;
  int hi = 0;
};

// Blocks [lo, hi] covering each coordinate along one axis.
std::vector<AxisCover> axis_cover(int dim, int block, int stride, int count) {
  std::vector<AxisCover> out(static_cast<std::size_t>(dim));
  for (int p = 0; p < dim; ++p) {
    const int num = p - block + 1;
    int lo = num <= 0 ? 0 : (num + stride - 1) / stride;
    int hi = std::min(count - 1, p / stride);
    if (lo > hi) {
      // Not covered: nearest block interval [i*stride, i*stride + block - 1].
      auto distance = [&](int i) {
        const int a = i * stride;
        const int b = a + block - 1;
        return p < a ? a - p : (p > b ? p - b : 0);
      };
      int best = std::clamp(p / stride, 0, count - 1);
      if (best + 1 < count && distance(best + 1) < distance(best)) ++best;
      if (best > 0 && distance(best - 1) <= distance(best)) --best;
      lo = hi = best;
    }
    out[static_cast<std::size_t>(p)] = {lo, hi};
  }
  return out;
}

}  // namespace

int BlockGrid::grid_extent(int dim, int block, int stride) {
  if (block < 1 || stride < 1) throw ValidationError("block and stride must be positive");
  if (dim < block) return 0;
  return (dim - block) / stride + 1;
}

BlockGrid BlockGrid::make(Size image, int block, int stride, double fill) {
  BlockGrid g;
  g.block = block;
  g.stride = stride;
  g.image = image;
  g.cols = grid_extent(image.width, block, stride);
  g.rows = grid_extent(image.height, block, stride);
  if (g.cols < 1 || g.rows < 1) {
    throw ValidationError("image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                          " is smaller than one " + std::to_string(block) + "-pixel block");
  }
  g.scores.assign(static_cast<std::size_t>(g.cols) * g.rows, fill);
  return g;
}

std::vector<double> BlockGrid::expand() const {
  const auto xs = axis_cover(image.width, block, stride, cols);
  const auto ys = axis_cover(image.height, block, stride, rows);
  std::vector<double> out(image.area());
  for (int y = 0; y < image.height; ++y) {
    const auto& cy = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < image.width; ++x) {
      const auto& cx = xs[static_cast<std::size_t>(x)];
      double sum = 0.0;
      for (int r = cy.lo; r <= cy.hi; ++r)
        for (int c = cx.lo; c <= cx.hi; ++c) sum += at(c, r);
      const int n = (cy.hi - cy.lo + 1) * (cx.hi - cx.lo + 1);
      out[static_cast<std::size_t>(y) * image.width + x] = sum / n;
    }
  }
  return out;
}

Heatmap BlockGrid::to_heatmap(Polarity polarity) const {
  return Heatmap(image.width, image.height, polarity, expand());
}

BlockGrid BlockGrid::from_heatmap(const Heatmap& grid_values, const io::GridLayout& layout) {
  BlockGrid g = make(layout.image, layout.block, layout.stride);
  if (grid_values.width() != g.cols || grid_values.height() != g.rows) {
    throw ValidationError("block grid has shape " + std::to_string(grid_values.width()) + "x" +
                          std::to_string(grid_values.height()) + ", expected " + std::to_string(g.cols) + "x" +
                          std::to_string(g.rows));
  }
  g.scores = grid_values.values();
  return g;
}

Heatmap bd_jup(const BlockGrid& lpips, const BlockGrid& erqa) {
  if (lpips.image != erqa.image) throw ValidationError("bd_jup: LPIPS and ERQA grids describe different image sizes");
  const auto l = lpips.expand();
  const auto e = erqa.expand();
  std::vector<double> out(l.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.6 * l[i] + 0.4 * (1.0 - e[i]);
  Heatmap h(lpips.image.width, lpips.image.height, Polarity::DistortionHigh, std::move(out));
  h.set_provider("bd_jup");
  return h;
}

}  // namespace srprom::heatmaps
