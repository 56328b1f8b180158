#include "srprom/raster.hpp"

#include <algorithm>
#include <cmath>

namespace srprom::raster {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

ImageBuffer to_grayscale(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw ValidationError("to_grayscale expects 1 or 3 channels");
  std::vector<float> out(static_cast<std::size_t>(img.width()) * img.height());
  const auto& d = img.data();
  for (std::size_t p = 0; p < out.size(); ++p) {
    const double v = 0.299 * d[3 * p] + 0.587 * d[3 * p + 1] + 0.114 * d[3 * p + 2];
    out[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return ImageBuffer(img.width(), img.height(), 1, std::move(out));
}

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct Taps {
  int index[4];
  double weight[4];
};

std::vector<Taps> bicubic_taps(int src, int dst) {
  std::vector<Taps> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int x = 0; x < dst; ++x) {
    const double pos = (x + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(pos));
    const double t = pos - base;
    for (int k = 0; k < 4; ++k) {
      taps[x].index[k] = std::clamp(base - 1 + k, 0, src - 1);
      taps[x].weight[k] = cubic_weight(t - (k - 1));
    }
  }
  return taps;
}

int nearest_source(int x, int src, int dst) {
  const auto s = static_cast<int>(std::floor((x + 0.5) * src / dst));
  return std::clamp(s, 0, src - 1);
}

}  // namespace

ImageBuffer resize(const ImageBuffer& img, int width, int height, ResizeMode mode) {
  if (width < 1 || height < 1) throw ValidationError("resize target dimensions must be positive");
  const int sw = img.width();
  const int sh = img.height();
  const int ch = img.channels();
  ImageBuffer out(width, height, ch);

  if (mode == ResizeMode::Nearest) {
    for (int y = 0; y < height; ++y) {
      const int sy = nearest_source(y, sh, height);
      for (int x = 0; x < width; ++x) {
        const int sx = nearest_source(x, sw, width);
        for (int c = 0; c < ch; ++c) out.at(x, y, c) = img.at(sx, sy, c);
      }
    }
    return out;
  }

  const auto xt = bicubic_taps(sw, width);
  const auto yt = bicubic_taps(sh, height);
  // Horizontal pass into a double buffer of size width x sh.
  std::vector<double> tmp(static_cast<std::size_t>(width) * sh * ch);
  for (int y = 0; y < sh; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += xt[x].weight[k] * img.at(xt[x].index[k], y, c);
        tmp[(static_cast<std::size_t>(y) * width + x) * ch + c] = acc;
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += yt[y].weight[k] * tmp[(static_cast<std::size_t>(yt[y].index[k]) * width + x) * ch + c];
        out.at(x, y, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

namespace {

// One separable pass; `horizontal` selects the axis.
std::vector<double> convolve_axis(const std::vector<double>& in, int width, int height, const std::vector<double>& k,
                                  bool horizontal) {
  const int radius = static_cast<int>(k.size() / 2);
  std::vector<double> out(in.size());
  const int n = horizontal ? width : height;
  std::vector<int> idx(static_cast<std::size_t>(n + 2 * radius));
  for (int i = -radius; i < n + radius; ++i) idx[static_cast<std::size_t>(i + radius)] = reflect_index(i, n);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int pos = horizontal ? x : y;
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t) {
        const int s = idx[static_cast<std::size_t>(pos + t + radius)];
        const std::size_t src = horizontal ? static_cast<std::size_t>(y) * width + s : static_cast<std::size_t>(s) * width + x;
        acc += k[static_cast<std::size_t>(t + radius)] * in[src];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

// Sliding box sum of side n along one axis with reflected borders.
std::vector<double> box_sum_axis(const std::vector<double>& in, int width, int height, int n, bool horizontal) {
  const int r = n / 2;
  std::vector<double> out(in.size());
  const int len = horizontal ? width : height;
  const int lines = horizontal ? height : width;
  auto at = [&](int line, int i) -> double {
    const int j = reflect_index(i, len);
    return horizontal ? in[static_cast<std::size_t>(line) * width + j] : in[static_cast<std::size_t>(j) * width + line];
  };
  for (int line = 0; line < lines; ++line) {
    double s = 0.0;
    for (int t = -r; t <= r; ++t) s += at(line, t);
    for (int i = 0; i < len; ++i) {
      const std::size_t dst = horizontal ? static_cast<std::size_t>(line) * width + i : static_cast<std::size_t>(i) * width + line;
      out[dst] = s;
      s += at(line, i + r + 1) - at(line, i - r);
    }
  }
  return out;
}

}  // namespace

std::vector<double> gaussian_blur(const std::vector<double>& plane, int width, int height, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return convolve_axis(convolve_axis(plane, width, height, k, true), width, height, k, false);
}

Heatmap gaussian_blur(const Heatmap& field, double sigma) {
  Heatmap out(field.width(), field.height(), field.polarity(),
              gaussian_blur(field.values(), field.width(), field.height(), sigma));
  out.set_provider(field.provider());
  return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
  ImageBuffer out(img.width(), img.height(), img.channels());
  std::vector<double> plane(n);
  for (int c = 0; c < img.channels(); ++c) {
    for (std::size_t p = 0; p < n; ++p) plane[p] = img.data()[p * img.channels() + c];
    const auto blurred = gaussian_blur(plane, img.width(), img.height(), sigma);
    for (std::size_t p = 0; p < n; ++p)
      out.data()[p * img.channels() + c] = static_cast<float>(std::clamp(blurred[p], 0.0, 1.0));
  }
  return out;
}

std::vector<double> local_variance(const std::vector<double>& plane, int width, int height, int n) {
  if (n < 3 || n % 2 == 0) throw ValidationError("local variance window must be odd and >= 3");
  // Centering on the global mean keeps E[x^2] - E[x]^2 well conditioned.
  double mean = 0.0;
  for (double v : plane) mean += v;
  mean /= static_cast<double>(plane.size());
  std::vector<double> x(plane.size());
  std::vector<double> x2(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) {
    x[i] = plane[i] - mean;
    x2[i] = x[i] * x[i];
  }
  const auto s1 = box_sum_axis(box_sum_axis(x, width, height, n, true), width, height, n, false);
  const auto s2 = box_sum_axis(box_sum_axis(x2, width, height, n, true), width, height, n, false);
  const double inv = 1.0 / (static_cast<double>(n) * n);
  std::vector<double> out(plane.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = s1[i] * inv;
    out[i] = std::max(0.0, s2[i] * inv - m * m);
  }
  return out;
}

Heatmap local_variance(const Heatmap& field, int n) {
  return Heatmap(field.width(), field.height(), Polarity::DistortionHigh,
                 local_variance(field.values(), field.width(), field.height(), n));
}

double global_variance(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / static_cast<double>(values.size());
}

Rect bounding_box(const BinaryMask& mask) {
  Rect r{mask.width(), mask.height(), -1, -1};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      r.x0 = std::min(r.x0, x);
      r.y0 = std::min(r.y0, y);
      r.x1 = std::max(r.x1, x);
      r.y1 = std::max(r.y1, y);
    }
  }
  if (r.x1 < 0) return Rect{};
  return r;
}

Rect padded_bbox(const BinaryMask& mask, int pad, Size bounds) {
  const Rect tight = bounding_box(mask);
  if (tight.empty()) throw ValidationError("padded_bbox: mask is empty");
  return Rect{std::max(0, tight.x0 - pad), std::max(0, tight.y0 - pad), std::min(bounds.width - 1, tight.x1 + pad),
              std::min(bounds.height - 1, tight.y1 + pad)};
}

ImageBuffer crop(const ImageBuffer& img, const Rect& r) {
  if (r.empty() || r.x0 < 0 || r.y0 < 0 || r.x1 >= img.width() || r.y1 >= img.height())
    throw ValidationError("crop rectangle outside image");
  ImageBuffer out(r.width(), r.height(), img.channels());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(r.x0 + x, r.y0 + y, c);
  return out;
}

BinaryMask crop(const BinaryMask& mask, const Rect& r) {
  if (r.empty() || r.x0 < 0 || r.y0 < 0 || r.x1 >= mask.width() || r.y1 >= mask.height())
    throw ValidationError("crop rectangle outside mask");
  BinaryMask out(r.width(), r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) out.set(x, y, mask.at(r.x0 + x, r.y0 + y));
  out.set_display_dilated(mask.display_dilated());
  return out;
}

}  // namespace srprom::raster
