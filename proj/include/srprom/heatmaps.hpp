#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srprom/io.hpp"
#include "srprom/types.hpp"

namespace srprom::heatmaps {

enum class Comparator { Above, Below };

std::string to_string(Comparator c);
Comparator comparator_from_string(const std::string& s);

/// How a provider's heatmap is thresholded into a candidate mask.
struct ProviderSpec {
  std::string name;
  Polarity polarity = Polarity::DistortionHigh;
  double threshold = 0.0;
  Comparator comparator = Comparator::Above;
  /// Block layout for providers that deliver block grids (DISTS, LPIPS).
  std::optional<int> block;
  std::optional<int> stride;

  /// Throws ValidationError unless the threshold is finite and the comparator
  /// agrees with the polarity (similarity-high <-> below).
  void validate() const;
};

/// Immutable name -> spec table.
class ProviderRegistry {
 public:
  ProviderRegistry() = default;
  explicit ProviderRegistry(std::vector<ProviderSpec> specs);

  /// Thresholds calibrated for SSIM, DISTS, ssm_jup, bd_jup, LDL and the fusion baseline.
  static ProviderRegistry defaults();
  /// JSON array of {name, polarity, comparator, threshold[, block, stride]}.
  static ProviderRegistry from_json(std::string_view text);
  static ProviderRegistry from_file(const std::filesystem::path& path);

  const ProviderSpec& at(const std::string& name) const;
  bool contains(const std::string& name) const { return specs_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, ProviderSpec> specs_;
};

// --- SSIM -------------------------------------------------------------------

struct SsimParams {
  double sigma = 1.5;  // 11x11 window after truncation at ceil(3 sigma)
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Per-pixel SSIM on luma; similarity-high.
Heatmap ssim_map(const ImageBuffer& ref, const ImageBuffer& test, const SsimParams& params = {});

// --- ssm_jup ----------------------------------------------------------------

struct SsmJupParams {
  int window = 33;
  double sigma = 33.0;
  double exponent = 0.2;
  /// Intensity scale the residuals are measured on (1 for [0,1], 255 for 8-bit units).
  double residual_scale = 1.0;
};

/// Summed absolute RGB residual |I_x - I_ref|.
std::vector<double> rgb_residual(const ImageBuffer& x, const ImageBuffer& ref, double scale = 1.0);

/// Scaled residual-variance map var(R)^exponent * localvar(R, window).
std::vector<double> scaled_residual_variance(const ImageBuffer& x, const ImageBuffer& ref, const SsmJupParams& p);

/// blur(S_sr) - blur(S_bic); distortion-high.
Heatmap ssm_jup(const ImageBuffer& ref, const ImageBuffer& sr, const ImageBuffer& bic, const SsmJupParams& params = {});

// --- Block grids ------------------------------------------------------------

struct BlockGrid {
  int block = 0;
  int stride = 0;
  Size image;  // pixel dimensions the grid was computed on
  int cols = 0;
  int rows = 0;
  std::vector<double> scores;  // row-major rows x cols

  double at(int col, int row) const { return scores[static_cast<std::size_t>(row) * cols + col]; }
  double& at(int col, int row) { return scores[static_cast<std::size_t>(row) * cols + col]; }

  /// floor((dim - block) / stride) + 1 per axis.
  static int grid_extent(int dim, int block, int stride);
  static BlockGrid make(Size image, int block, int stride, double fill = 0.0);

  /// Pixel-resolution field: each pixel averages every block covering it;
  /// uncovered pixels take the nearest block along each axis.
  std::vector<double> expand() const;
  Heatmap to_heatmap(Polarity polarity) const;
  static BlockGrid from_heatmap(const Heatmap& grid_values, const io::GridLayout& layout);
};

// --- ERQA-style edge F1 -----------------------------------------------------

struct ErqaParams {
  int block = 8;
  double relative_threshold = 0.25;
  int tolerance = 1;  // Chebyshev match radius
  double min_gradient = 1e-6;
};

/// Sobel gradient magnitude of the luma plane, reflected borders.
std::vector<double> sobel_magnitude(const ImageBuffer& img);

/// Edge pixels of one block: magnitude >= relative_threshold * block max.
std::vector<std::uint8_t> block_edges(const std::vector<double>& magnitude, int width, int x0, int y0,
                                      const ErqaParams& p);

/// Edge-matching F1 between two edge sets of one block (square side `block`).
double edge_f1(const std::vector<std::uint8_t>& ref_edges, const std::vector<std::uint8_t>& test_edges, int block,
               int tolerance);

/// Non-overlapping block grid of edge F1 scores; similarity-high.
BlockGrid erqa_map(const ImageBuffer& ref, const ImageBuffer& test, const ErqaParams& params = {});

// --- bd_jup -----------------------------------------------------------------

/// 0.6 * LPIPS + 0.4 * (1 - ERQA), evaluated per pixel after grid expansion.
Heatmap bd_jup(const BlockGrid& lpips, const BlockGrid& erqa);

// --- External heatmaps -----------------------------------------------------

/// Brings an SRPH payload to pixel resolution for an image of `image_size`.
/// Pixel-sized payloads pass through; block grids (layout from the file
/// header, else from the spec's block/stride) are expanded. Polarity comes
/// from `spec`.
Heatmap ingest_block_heatmap(const io::SrphContent& content, const ProviderSpec& spec, Size image_size);
Heatmap ingest_block_heatmap(const std::filesystem::path& path, const ProviderSpec& spec, Size image_size);

}  // namespace srprom::heatmaps
