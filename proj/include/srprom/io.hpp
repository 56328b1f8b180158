#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srprom/types.hpp"

namespace srprom::io {

// ---------------------------------------------------------------------------
// Manifest: JSON array of artifact records.
//
// Field names: component, source, sr, metric, mask, display_dilated (optional, default false),
// votes_pos, votes_total, prominence. Prominence is recomputed from the votes
// on read and a stored value that disagrees by more than 1e-12 is rejected.
// ---------------------------------------------------------------------------

std::vector<ArtifactRecord> parse_manifest(std::string_view json_text);
std::string format_manifest(const std::vector<ArtifactRecord>& records);

std::vector<ArtifactRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ArtifactRecord>& records);

// ---------------------------------------------------------------------------
// SRPH heatmap container:
//   "SRPH\n" + one-line JSON header + w*h little-endian float32, row-major.
// Header keys: w, h, polarity, and optionally provider, and the block layout
// (block, stride, image_w, image_h) when the payload is a block grid.
// ---------------------------------------------------------------------------

struct GridLayout {
  int block = 0;
  int stride = 0;
  Size image;
  friend bool operator==(const GridLayout&, const GridLayout&) = default;
};

struct SrphContent {
  Heatmap field;
  std::optional<GridLayout> grid;
};

std::string encode_srph(const Heatmap& field, const std::optional<GridLayout>& grid = std::nullopt);
SrphContent decode_srph(std::string_view bytes);

void write_heatmap(const std::filesystem::path& path, const Heatmap& field,
                   const std::optional<GridLayout>& grid = std::nullopt);
SrphContent read_srph(const std::filesystem::path& path);
Heatmap read_heatmap(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PNG masks and images
// ---------------------------------------------------------------------------

/// 8-bit single-channel PNG: 255 for mask pixels on write, nonzero = mask on read.
void write_mask(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask(const std::filesystem::path& path);

/// Checks that a mask belongs to an SR image of the given size.
void check_mask_matches(const BinaryMask& mask, Size sr_size, std::string_view what = "mask");

/// Reads an 8- or 16-bit PNG into [0,1] floats; alpha is dropped, palettes expanded.
ImageBuffer read_image(const std::filesystem::path& path);
/// Writes 8-bit PNG (values rounded to nearest of 255 levels).
void write_image(const std::filesystem::path& path, const ImageBuffer& image);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace srprom::io
