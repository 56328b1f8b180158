#include "srprom/heatmaps.hpp"
#include "srprom/raster.hpp"

namespace srprom::heatmaps {

Heatmap ssim_map(const ImageBuffer& ref, const ImageBuffer& test, const SsimParams& params) {
  if (ref.size() != test.size()) throw ValidationError("ssim_map: image dimensions differ");
  const auto a = raster::to_grayscale(ref);
  const auto b = raster::to_grayscale(test);
  const int w = a.width();
  const int h = a.height();
  const std::size_t n = a.data().size();

  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a.data()[i];
    y[i] = b.data()[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const double s = params.sigma;
  const auto mx = raster::gaussian_blur(x, w, h, s);
  const auto my = raster::gaussian_blur(y, w, h, s);
  const auto exx = raster::gaussian_blur(xx, w, h, s);
  const auto eyy = raster::gaussian_blur(yy, w, h, s);
  const auto exy = raster::gaussian_blur(xy, w, h, s);

  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = exx[i] - mx[i] * mx[i];
    const double vy = eyy[i] - my[i] * my[i];
    const double cov = exy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    out[i] = num / den;
  }
  Heatmap map(w, h, Polarity::SimilarityHigh, std::move(out));
  map.set_provider("ssim");
  return map;
}

}  // namespace srprom::heatmaps
