#pragma once

#include <vector>

#include "srprom/types.hpp"

namespace srprom::raster {

/// Half-sample symmetric reflection of an index into [0, n): ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
/// Valid for any integer i, including offsets larger than n.
int reflect_index(int i, int n);

/// Luma 0.299 R + 0.587 G + 0.114 B; single-channel input is returned as is.
ImageBuffer to_grayscale(const ImageBuffer& img);

enum class ResizeMode { Nearest, Bicubic };

/// Pixel-center aligned resampling. Bicubic uses the Catmull-Rom kernel
/// (a = -0.5) with clamped edges; the result is clamped to [0,1].
ImageBuffer resize(const ImageBuffer& img, int width, int height, ResizeMode mode);

/// Catmull-Rom cubic convolution weight (a = -0.5).
double cubic_weight(double t);

/// Normalized 1-D Gaussian taps for radius ceil(3*sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian smoothing with reflected borders. Scalar planes are
/// passed as (values, width, height) so heatmaps and image channels share code.
std::vector<double> gaussian_blur(const std::vector<double>& plane, int width, int height, double sigma);
Heatmap gaussian_blur(const Heatmap& field, double sigma);
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

/// Population variance over an n x n window (n odd, n >= 3), reflected borders.
std::vector<double> local_variance(const std::vector<double>& plane, int width, int height, int n);
Heatmap local_variance(const Heatmap& field, int n);

/// Population variance of all values.
double global_variance(const std::vector<double>& values);

enum class MorphOp { Erode, Dilate, Open, Close };

/// Binary morphology with the image exterior treated as background.
/// dilate(m)(p) = exists o in se with p - o in m; erode(m)(p) = for all o, p + o in m.
/// open = dilate(erode(m)); close = erode(dilate(m)).
BinaryMask morphology(const BinaryMask& mask, MorphOp op, const StructuringElement& se);
BinaryMask erode(const BinaryMask& mask, const StructuringElement& se);
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se);

struct ComponentLabeling {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // 0 = background, components 1..count
  int count = 0;

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  BinaryMask component_mask(int label) const;
  std::vector<std::size_t> component_sizes() const;  // index 0 unused
  std::vector<Rect> component_boxes() const;         // index 0 unused
};

/// 8-connected labeling; labels are numbered by each component's first pixel
/// in row-major order.
ComponentLabeling connected_components(const BinaryMask& mask);

/// Tight bounding box of the set pixels.
Rect bounding_box(const BinaryMask& mask);
/// Bounding box grown by `pad` on each side and clamped to `bounds`.
Rect padded_bbox(const BinaryMask& mask, int pad, Size bounds);

ImageBuffer crop(const ImageBuffer& img, const Rect& r);
BinaryMask crop(const BinaryMask& mask, const Rect& r);

}  // namespace srprom::raster
