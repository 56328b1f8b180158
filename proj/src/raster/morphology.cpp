#include <algorithm>
#include <vector>

#include "srprom/raster.hpp"

namespace srprom::raster {

namespace {

// Per-row prefix counts: prefix[y*(w+1) + x] = number of set pixels in row y, columns [0, x).
std::vector<int> row_prefix_counts(const BinaryMask& mask) {
  const int w = mask.width();
  std::vector<int> prefix(static_cast<std::size_t>(w + 1) * mask.height(), 0);
  for (int y = 0; y < mask.height(); ++y) {
    int* row = prefix.data() + static_cast<std::size_t>(y) * (w + 1);
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (mask.at(x, y) ? 1 : 0);
  }
  return prefix;
}

void check_fits(const BinaryMask& mask, const StructuringElement& se) {
  if (se.size() > std::min(mask.width(), mask.height())) {
    throw ValidationError("structuring element of size " + std::to_string(se.size()) + " does not fit a " +
                          std::to_string(mask.width()) + "x" + std::to_string(mask.height()) + " mask");
  }
}

}  // namespace

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se) {
  check_fits(mask, se);
  const int w = mask.width();
  const int h = mask.height();
  const auto prefix = row_prefix_counts(mask);
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (const auto& run : se.runs()) {
        const int sy = y - run.dy;
        if (sy < 0 || sy >= h) continue;
        const int lo = std::max(0, x - run.dx_hi);
        const int hi = std::min(w - 1, x - run.dx_lo);
        if (lo > hi) continue;
        const int* row = prefix.data() + static_cast<std::size_t>(sy) * (w + 1);
        if (row[hi + 1] - row[lo] > 0) {
          out.set(x, y, true);
          break;
        }
      }
    }
  }
  out.set_display_dilated(mask.display_dilated());
  return out;
}

BinaryMask erode(const BinaryMask& mask, const StructuringElement& se) {
  check_fits(mask, se);
  const int w = mask.width();
  const int h = mask.height();
  const auto prefix = row_prefix_counts(mask);
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool keep = true;
      for (const auto& run : se.runs()) {
        const int sy = y + run.dy;
        const int lo = x + run.dx_lo;
        const int hi = x + run.dx_hi;
        if (sy < 0 || sy >= h || lo < 0 || hi >= w) {
          keep = false;
          break;
        }
        const int* row = prefix.data() + static_cast<std::size_t>(sy) * (w + 1);
        if (row[hi + 1] - row[lo] != hi - lo + 1) {
          keep = false;
          break;
        }
      }
      if (keep) out.set(x, y, true);
    }
  }
  out.set_display_dilated(mask.display_dilated());
  return out;
}

BinaryMask morphology(const BinaryMask& mask, MorphOp op, const StructuringElement& se) {
  switch (op) {
    case MorphOp::Erode:
      return erode(mask, se);
    case MorphOp::Dilate:
      return dilate(mask, se);
    case MorphOp::Open:
      return dilate(erode(mask, se), se);
    case MorphOp::Close:
      return erode(dilate(mask, se), se);
  }
  throw ValidationError("unknown morphology operation");
}

BinaryMask ComponentLabeling::component_mask(int label) const {
  BinaryMask out(width, height);
  for (std::size_t i = 0; i < labels.size(); ++i) out.bits()[i] = labels[i] == label ? 1 : 0;
  return out;
}

std::vector<std::size_t> ComponentLabeling::component_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(count) + 1, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  sizes[0] = 0;
  return sizes;
}

std::vector<Rect> ComponentLabeling::component_boxes() const {
  std::vector<Rect> boxes(static_cast<std::size_t>(count) + 1, Rect{width, height, -1, -1});
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int l = at(x, y);
      if (l == 0) continue;
      auto& b = boxes[static_cast<std::size_t>(l)];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }
  boxes[0] = Rect{};
  return boxes;
}

namespace {

int find_root(std::vector<int>& parent, int a) {
  while (parent[a] != a) {
    parent[a] = parent[parent[a]];
    a = parent[a];
  }
  return a;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  if (a < b) {
    parent[b] = a;
  } else {
    parent[a] = b;
  }
}

}  // namespace

ComponentLabeling connected_components(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  ComponentLabeling out;
  out.width = w;
  out.height = h;
  out.labels.assign(static_cast<std::size_t>(w) * h, 0);

  // First pass: provisional labels and equivalences from the already-visited
  // 8-neighbors (W, NW, N, NE).
  std::vector<int> parent{0};
  auto& lab = out.labels;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int current = 0;
      constexpr int kNeighbors[4][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
      for (const auto& d : kNeighbors) {
        const int nx = x + d[0];
        const int ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w) continue;
        const int l = lab[static_cast<std::size_t>(ny) * w + nx];
        if (l == 0) continue;
        if (current == 0) {
          current = l;
        } else {
          unite(parent, current, l);
        }
      }
      if (current == 0) {
        current = static_cast<int>(parent.size());
        parent.push_back(current);
      }
      lab[static_cast<std::size_t>(y) * w + x] = current;
    }
  }

  // Second pass: resolve and renumber by first appearance in the scan.
  std::vector<int> final_label(parent.size(), 0);
  int next = 0;
  for (auto& l : lab) {
    if (l == 0) continue;
    const int root = find_root(parent, l);
    if (final_label[root] == 0) final_label[root] = ++next;
    l = final_label[root];
  }
  out.count = next;
  return out;
}

}  // namespace srprom::raster
