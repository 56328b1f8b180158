#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "srprom/heatmaps.hpp"
#include "srprom/raster.hpp"
#include "srprom/types.hpp"

namespace srprom::masks {

/// Minimum component area kept as a candidate.
inline constexpr std::size_t kMinCandidatePixels = 16;
inline constexpr int kDefaultCandidatesPerMetric = 10;
inline constexpr int kViewOpenSide = 25;
inline constexpr int kViewDilateDiameter = 64;
inline constexpr int kViewCloseSide = 25;
inline constexpr int kDefaultCropPad = 128;

/// Strict comparison against the spec threshold; ties produce no pixels.
BinaryMask threshold_heatmap(const Heatmap& h, const heatmaps::ProviderSpec& spec);
BinaryMask threshold_heatmap(const Heatmap& h, double threshold, heatmaps::Comparator comparator);

struct Candidate {
  BinaryMask mask;
  double score = 0.0;  // mean oriented heatmap value inside
  std::size_t pixels = 0;
  Rect bbox;
};

/// Connected components of `mask` ranked by mean heatmap value (oriented so
/// larger = stronger artifact), components under kMinCandidatePixels dropped,
/// top `k` returned. Equal scores keep row-major first-pixel order.
std::vector<Candidate> extract_candidates(const BinaryMask& mask, const Heatmap& h, int k = kDefaultCandidatesPerMetric,
                                          std::size_t min_pixels = kMinCandidatePixels);

/// Viewer preprocessing: open(square 25), dilate(disk 64), close(square 25).
/// Returns nullopt when nothing survives ("no displayable artifact").
std::optional<BinaryMask> prep_view(const BinaryMask& mask);

/// Reverses the display dilation with an erosion by disk 64. Masks without
/// the display flag are returned unchanged (a warning is logged).
BinaryMask undo_dilation(const BinaryMask& mask);

struct AnnotationPair {
  ImageBuffer original;  // nearest-neighbour upscaled LR
  ImageBuffer upscaled;  // SR output
};

struct RenderStyle {
  double lighten = 0.5;  // v -> (1 - lighten) * v + lighten inside the mask
  int box_width = 3;
};

/// Renders the "Original"/"Upscaled" pair shown to annotators. Red boxes are
/// drawn just outside each component's bounding box.
AnnotationPair render_annotation_pair(const ImageBuffer& lr, const ImageBuffer& sr, const BinaryMask& mask,
                                      const std::optional<Rect>& crop = std::nullopt, const RenderStyle& style = {});

}  // namespace srprom::masks
