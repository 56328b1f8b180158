#include <cmath>

#include "srprom/heatmaps.hpp"
#include "srprom/raster.hpp"

namespace srprom::heatmaps {

std::vector<double> rgb_residual(const ImageBuffer& x, const ImageBuffer& ref, double scale) {
  if (x.size() != ref.size()) throw ValidationError("ssm_jup: image dimensions differ");
  if (x.channels() != 3 || ref.channels() != 3) throw ValidationError("ssm_jup: RGB images required");
  const std::size_t n = x.size().area();
  std::vector<double> r(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < 3; ++c) {
      r[p] += std::abs(static_cast<double>(x.data()[3 * p + c]) - static_cast<double>(ref.data()[3 * p + c]));
    }
    r[p] *= scale;
  }
  return r;
}

std::vector<double> scaled_residual_variance(const ImageBuffer& x, const ImageBuffer& ref, const SsmJupParams& p) {
  const auto r = rgb_residual(x, ref, p.residual_scale);
  auto m = raster::local_variance(r, x.width(), x.height(), p.window);
  const double factor = std::pow(raster::global_variance(r), p.exponent);
  for (double& v : m) v *= factor;
  return m;
}

Heatmap ssm_jup(const ImageBuffer& ref, const ImageBuffer& sr, const ImageBuffer& bic, const SsmJupParams& params) {
  if (sr.size() != ref.size() || bic.size() != ref.size()) throw ValidationError("ssm_jup: image dimensions differ");
  const int w = ref.width();
  const int h = ref.height();
  const auto s_sr = raster::gaussian_blur(scaled_residual_variance(sr, ref, params), w, h, params.sigma);
  const auto s_bic = raster::gaussian_blur(scaled_residual_variance(bic, ref, params), w, h, params.sigma);
  std::vector<double> out(s_sr.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s_sr[i] - s_bic[i];
  Heatmap map(w, h, Polarity::DistortionHigh, std::move(out));
  map.set_provider("ssm_jup");
  return map;
}

}  // namespace srprom::heatmaps
