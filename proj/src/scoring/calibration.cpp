#include <algorithm>
#include <cmath>

#include "srprom/scoring.hpp"

namespace srprom::scoring {

CalibrationResult calibrate_threshold(const heatmaps::ProviderSpec& provider, const std::vector<CalibrationImage>& set,
                                      const CalibrationParams& params) {
  if (params.max_grid < 1) throw ValidationError("calibration grid must have at least one point");
  // Work in "above" orientation: a below-comparator provider is negated.
  const double sign = provider.comparator == heatmaps::Comparator::Below ? -1.0 : 1.0;

  std::vector<double> all;       // every pixel value
  std::vector<double> inside;    // pixels inside the union of GT masks
  std::vector<double> critical;  // per GT mask: value that must be exceeded for recall
  for (const auto& img : set) {
    if (!img.heatmap) throw ValidationError("calibration image without heatmap");
    const Heatmap& h = *img.heatmap;
    std::vector<std::uint8_t> in_gt(h.values().size(), 0);
    for (const BinaryMask* m : img.gt_masks) {
      if (!m || m->size() != h.size()) throw ValidationError("calibration GT mask does not match its heatmap");
      std::vector<double> vals;
      for (std::size_t i = 0; i < in_gt.size(); ++i) {
        if (!m->bits()[i]) continue;
        in_gt[i] = 1;
        vals.push_back(sign * h.values()[i]);
      }
      if (vals.empty()) continue;
      // Recalled iff at least ceil(overlap * area) mask pixels exceed t,
      // i.e. t is below the k-th largest value in the mask.
      const auto need = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(params.recall_overlap * static_cast<double>(vals.size()) - 1e-12)));
      std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(need - 1), vals.end(), std::greater<>());
      critical.push_back(vals[need - 1]);
    }
    for (std::size_t i = 0; i < in_gt.size(); ++i) {
      const double v = sign * h.values()[i];
      all.push_back(v);
      if (in_gt[i]) inside.push_back(v);
    }
  }
  if (critical.empty()) throw ValidationError("calibration failure: no non-empty GT masks");

  std::sort(all.begin(), all.end());
  std::sort(inside.begin(), inside.end());
  std::sort(critical.begin(), critical.end());
  std::vector<double> unique = all;
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() < 2) throw ValidationError("calibration failure: heatmap is constant");

  const std::size_t gaps = unique.size() - 1;
  std::vector<std::size_t> grid;
  if (gaps <= params.max_grid) {
    for (std::size_t i = 0; i < gaps; ++i) grid.push_back(i);
  } else {
    for (std::size_t j = 0; j < params.max_grid; ++j) {
      const double pos = params.max_grid == 1 ? 0.0
                                              : static_cast<double>(j) * static_cast<double>(gaps - 1) /
                                                    static_cast<double>(params.max_grid - 1);
      grid.push_back(static_cast<std::size_t>(std::llround(pos)));
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }

  auto count_above = [](const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
  };

  CalibrationResult best;
  bool have = false;
  for (std::size_t gi : grid) {
    const double t = 0.5 * (unique[gi] + unique[gi + 1]);
    const std::size_t predicted = count_above(all, t);
    const std::size_t hits = count_above(inside, t);
    const std::size_t recalled = count_above(critical, t);
    const double precision = predicted ? static_cast<double>(hits) / static_cast<double>(predicted) : 0.0;
    const double recall = static_cast<double>(recalled) / static_cast<double>(critical.size());
    const double product = precision * recall;
    const bool better = !have || product > best.product ||
                        (product == best.product && predicted < best.predicted_pixels);
    if (better) {
      best.threshold = sign * t;
      best.precision = precision;
      best.recall = recall;
      best.product = product;
      best.predicted_pixels = predicted;
      have = true;
    }
  }
  best.base_rate = static_cast<double>(inside.size()) / static_cast<double>(all.size());
  best.candidates = grid.size();
  return best;
}

}  // namespace srprom::scoring
