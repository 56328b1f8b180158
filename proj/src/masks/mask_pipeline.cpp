#include <algorithm>
#include <iostream>
#include <numeric>

#include "srprom/masks.hpp"

namespace srprom::masks {

BinaryMask threshold_heatmap(const Heatmap& h, double threshold, heatmaps::Comparator comparator) {
  BinaryMask out(h.width(), h.height());
  const auto& v = h.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool hit = comparator == heatmaps::Comparator::Above ? v[i] > threshold : v[i] < threshold;
    out.bits()[i] = hit ? 1 : 0;
  }
  return out;
}

BinaryMask threshold_heatmap(const Heatmap& h, const heatmaps::ProviderSpec& spec) {
  spec.validate();
  return threshold_heatmap(h, spec.threshold, spec.comparator);
}

std::vector<Candidate> extract_candidates(const BinaryMask& mask, const Heatmap& h, int k, std::size_t min_pixels) {
  if (k < 1) throw ValidationError("extract_candidates: k must be >= 1");
  if (mask.size() != h.size()) throw ValidationError("extract_candidates: mask and heatmap sizes differ");
  const auto labeling = raster::connected_components(mask);
  if (labeling.count == 0) return {};

  const auto oriented = h.oriented_values();
  std::vector<double> sums(static_cast<std::size_t>(labeling.count) + 1, 0.0);
  const auto sizes = labeling.component_sizes();
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) sums[static_cast<std::size_t>(labeling.labels[i])] += oriented[i];

  std::vector<int> order;
  for (int l = 1; l <= labeling.count; ++l) {
    if (sizes[static_cast<std::size_t>(l)] >= min_pixels) order.push_back(l);
  }
  auto mean = [&](int l) { return sums[static_cast<std::size_t>(l)] / static_cast<double>(sizes[static_cast<std::size_t>(l)]); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return mean(a) > mean(b); });
  if (order.size() > static_cast<std::size_t>(k)) order.resize(static_cast<std::size_t>(k));

  std::vector<Candidate> out;
  out.reserve(order.size());
  for (int l : order) {
    Candidate c;
    c.mask = labeling.component_mask(l);
    c.score = mean(l);
    c.pixels = sizes[static_cast<std::size_t>(l)];
    c.bbox = raster::bounding_box(c.mask);
    out.push_back(std::move(c));
  }
  return out;
}

std::optional<BinaryMask> prep_view(const BinaryMask& mask) {
  using raster::MorphOp;
  const auto square = StructuringElement::square(kViewOpenSide);
  const auto disk = StructuringElement::disk(kViewDilateDiameter);
  const auto close_square = StructuringElement::square(kViewCloseSide);
  auto m = raster::morphology(mask, MorphOp::Open, square);
  m = raster::dilate(m, disk);
  m = raster::morphology(m, MorphOp::Close, close_square);
  if (m.empty()) return std::nullopt;
  m.set_display_dilated(true);
  return m;
}

BinaryMask undo_dilation(const BinaryMask& mask) {
  if (!mask.display_dilated()) {
    std::clog << "warning: undo_dilation called on a mask without display dilation; returned unchanged\n";
    return mask;
  }
  auto out = raster::erode(mask, StructuringElement::disk(kViewDilateDiameter));
  out.set_display_dilated(false);
  return out;
}

namespace {

ImageBuffer as_rgb(const ImageBuffer& img) {
  if (img.channels() == 3) return img;
  ImageBuffer out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y);
  return out;
}

void highlight(ImageBuffer& img, const BinaryMask& mask, const RenderStyle& style,
               const std::vector<Rect>& boxes) {
  const auto keep = static_cast<float>(1.0 - style.lighten);
  const auto add = static_cast<float>(style.lighten);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = std::min(1.0f, keep * img.at(x, y, c) + add);
    }
  }
  const int bw = style.box_width;
  for (const auto& b : boxes) {
    const Rect outer{b.x0 - bw, b.y0 - bw, b.x1 + bw, b.y1 + bw};
    for (int y = std::max(0, outer.y0); y <= std::min(img.height() - 1, outer.y1); ++y) {
      for (int x = std::max(0, outer.x0); x <= std::min(img.width() - 1, outer.x1); ++x) {
        const bool inside = x >= b.x0 && x <= b.x1 && y >= b.y0 && y <= b.y1;
        if (inside) continue;
        img.at(x, y, 0) = 1.0f;
        img.at(x, y, 1) = 0.0f;
        img.at(x, y, 2) = 0.0f;
      }
    }
  }
}

}  // namespace

AnnotationPair render_annotation_pair(const ImageBuffer& lr, const ImageBuffer& sr, const BinaryMask& mask,
                                      const std::optional<Rect>& crop, const RenderStyle& style) {
  if (sr.width() % lr.width() != 0 || sr.height() % lr.height() != 0)
    throw ValidationError("render_annotation_pair: SR size is not an integer multiple of the LR size");
  const int sx = sr.width() / lr.width();
  const int sy = sr.height() / lr.height();
  if (sx != sy) throw ValidationError("render_annotation_pair: horizontal and vertical scale factors differ");
  if (mask.size() != sr.size()) throw ValidationError("render_annotation_pair: mask size differs from the SR image");

  AnnotationPair pair{as_rgb(raster::resize(lr, sr.width(), sr.height(), raster::ResizeMode::Nearest)), as_rgb(sr)};
  const auto labeling = raster::connected_components(mask);
  auto boxes = labeling.component_boxes();
  boxes.erase(boxes.begin());
  highlight(pair.original, mask, style, boxes);
  highlight(pair.upscaled, mask, style, boxes);
  if (crop) {
    pair.original = raster::crop(pair.original, *crop);
    pair.upscaled = raster::crop(pair.upscaled, *crop);
  }
  return pair;
}

}  // namespace srprom::masks
