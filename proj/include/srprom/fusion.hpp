#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srprom/types.hpp"

namespace srprom::fusion {

inline constexpr int kFeatureCount = 3;
/// Channel order is part of the model contract.
inline const std::array<std::string, kFeatureCount> kFeatureChannels = {"dists", "ssm_jup", "bd_jup"};

struct DenseLayer {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;     // outputs

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Per-channel affine standardization z = (x - mean) / scale.
struct Standardizer {
  std::array<double, kFeatureCount> mean{0.0, 0.0, 0.0};
  std::array<double, kFeatureCount> scale{1.0, 1.0, 1.0};

  std::array<double, kFeatureCount> apply(const double* x) const;
  std::array<double, kFeatureCount> invert(const double* z) const;
  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Three aligned feature heatmaps, interleaved per pixel.
struct FeatureStack {
  int width = 0;
  int height = 0;
  std::array<std::string, kFeatureCount> channels = kFeatureChannels;
  std::vector<double> values;  // width * height * 3

  std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
  const double* pixel(std::size_t i) const { return values.data() + i * kFeatureCount; }
};

/// Stacks (dists, ssm_jup, bd_jup). Heatmaps whose provider tag names a
/// different channel are rejected.
FeatureStack stack_features(const Heatmap& dists, const Heatmap& ssm, const Heatmap& bd);

/// Per-pixel MLP: dense layers with ReLU between them and a linear output.
class FusionModel {
 public:
  FusionModel() = default;
  FusionModel(std::vector<DenseLayer> layers, Standardizer standardizer);

  /// Layer widths, e.g. {3, 128, 128, 1}; weights and biases uniform in
  /// +-1/sqrt(fan_in), rounded to float32.
  static FusionModel initialize(const std::vector<int>& widths, std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(const Standardizer& s) { standardizer_ = s; }
  std::vector<int> widths() const;

  std::uint64_t seed = 0;
  int epochs = 0;

  /// Raw output for an already standardized feature vector.
  double forward_standardized(const double* z) const;
  /// Raw output for a raw feature vector.
  double forward_pixel(const double* x) const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;  // layer order: weights then bias
  void set_parameters(const std::vector<double>& flat);
  void round_to_float();
  bool finite() const;

  friend bool operator==(const FusionModel&, const FusionModel&) = default;

 private:
  std::vector<DenseLayer> layers_;
  Standardizer standardizer_;
};

/// Raw per-pixel outputs.
std::vector<double> forward_raw(const FusionModel& model, const FeatureStack& stack);
/// Outputs clamped to [0,1] as a distortion-high heatmap tagged "baseline".
Heatmap forward(const FusionModel& model, const FeatureStack& stack);

inline constexpr double kDisplayThreshold = 0.3;

struct TrainingExample {
  FeatureStack features;
  BinaryMask mask;
  double prominence = 0.0;
};

/// (mean inside - prominence)^2 + (mean outside)^2 over raw outputs;
/// nullopt when the mask has no inside or no outside pixels.
std::optional<double> loss(const FusionModel& model, const TrainingExample& example);

/// Loss and its gradient with respect to parameters() (analytic backprop).
/// Optional pixel subsets restrict the means to the listed indices.
std::optional<double> loss_and_gradient(const FusionModel& model, const TrainingExample& example,
                                        std::vector<double>& gradient,
                                        const std::vector<std::size_t>* inside_subset = nullptr,
                                        const std::vector<std::size_t>* outside_subset = nullptr);

/// Channel mean/std over all pixels of all examples (std 0 -> 1).
Standardizer fit_standardizer(const std::vector<TrainingExample>& examples);

struct TrainOptions {
  int epochs = 15;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {128, 128};
  /// When > 0, each step estimates the inside/outside means from at most
  /// this many sampled pixels per region.
  std::size_t pixel_sample = 0;
  bool fit_standardization = true;
};

struct TrainingLog {
  std::vector<double> epoch_loss;  // mean loss over the epoch's steps
  std::size_t skipped_examples = 0;
};

struct TrainResult {
  FusionModel model;
  TrainingLog log;
};

/// Adam, one example per step, order reshuffled every epoch from the seed.
/// Throws ValidationError if the loss becomes non-finite.
TrainResult train(const std::vector<TrainingExample>& examples, const TrainOptions& options);

// Model file: "SRPM\n" + one-line JSON header (layer widths, channels,
// standardization, seed, epochs) + little-endian float32 parameters.
std::string encode_model(const FusionModel& model);
FusionModel decode_model(std::string_view bytes);
void write_model(const std::filesystem::path& path, const FusionModel& model);
FusionModel read_model(const std::filesystem::path& path);

}  // namespace srprom::fusion
