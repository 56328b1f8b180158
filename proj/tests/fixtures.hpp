#pragma once

// Synthetic data sets shared by the unit tests and the acceptance binary.

#include <random>
#include <string>
#include <vector>

#include "srprom/fusion.hpp"

namespace fixtures {

/// Linearly separable fusion data: in every example the three feature maps
/// are 0.2 + p inside a 14x14 mask and 0 outside (plus N(0, 0.05) noise),
/// where p is the example's prominence drawn uniformly from [0, 1].
inline std::vector<srprom::fusion::TrainingExample> separable_fusion_set(std::uint64_t seed, int count = 16) {
  using namespace srprom;
  std::vector<fusion::TrainingExample> out;
  const int w = 32, h = 32;
  for (int e = 0; e < count; ++e) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(e));
    std::normal_distribution<double> noise(0.0, 0.05);
    const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    fusion::TrainingExample ex;
    ex.mask = BinaryMask(w, h);
    for (int y = 10; y <= 23; ++y)
      for (int x = 8; x <= 21; ++x) ex.mask.set(x, y, true);
    std::vector<Heatmap> maps;
    for (const auto& name : fusion::kFeatureChannels) {
      Heatmap m(w, h, Polarity::DistortionHigh);
      for (std::size_t i = 0; i < m.values().size(); ++i)
        m.values()[i] = (ex.mask.bits()[i] ? 0.2 + p : 0.0) + noise(rng);
      m.set_provider(name);
      maps.push_back(std::move(m));
    }
    ex.features = fusion::stack_features(maps[0], maps[1], maps[2]);
    ex.prominence = p;
    out.push_back(std::move(ex));
  }
  return out;
}

inline double mean_loss(const srprom::fusion::FusionModel& model,
                        const std::vector<srprom::fusion::TrainingExample>& examples) {
  double sum = 0.0;
  for (const auto& ex : examples) sum += *srprom::fusion::loss(model, ex);
  return sum / static_cast<double>(examples.size());
}

}  // namespace fixtures
