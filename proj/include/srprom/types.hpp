#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace srprom {

/// Input or invariant violation. The CLI maps this to exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or codec failure. The CLI maps this to exit status 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Size {
  int width = 0;
  int height = 0;

  std::size_t area() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const Size&, const Size&) = default;
};

/// Inclusive pixel rectangle.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  bool empty() const { return x1 < x0 || y1 < y0; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Row-major raster of intensities in [0,1], interleaved channels.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, float fill = 0.0f);
  ImageBuffer(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  Size size() const { return {width_, height_}; }

  float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> data_;
};

enum class Polarity { DistortionHigh, SimilarityHigh };

std::string to_string(Polarity p);
Polarity polarity_from_string(const std::string& s);

/// Scalar field over the pixels of an SR image.
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(int width, int height, Polarity polarity, double fill = 0.0);
  Heatmap(int width, int height, Polarity polarity, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }
  Polarity polarity() const { return polarity_; }
  void set_polarity(Polarity p) { polarity_ = p; }

  /// Optional provider tag ("dists", "ssm_jup", ...); empty when unknown.
  const std::string& provider() const { return provider_; }
  void set_provider(std::string name) { provider_ = std::move(name); }

  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Values oriented so that larger always means "more artifact".
  std::vector<double> oriented_values() const;

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  Polarity polarity_ = Polarity::DistortionHigh;
  std::string provider_;
  std::vector<double> values_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }
  Size size() const { return {width_, height_}; }

  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

  /// Out-of-bounds reads are background.
  bool get_or_false(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && at(x, y);
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  bool display_dilated() const { return display_dilated_; }
  void set_display_dilated(bool v) { display_dilated_ = v; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  BinaryMask complement() const;

  /// Pixel-set equality; ignores the display flag.
  bool same_pixels(const BinaryMask& other) const { return width_ == other.width_ && height_ == other.height_ && bits_ == other.bits_; }
  /// True when every pixel of `other` is also set here.
  bool contains(const BinaryMask& other) const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  bool display_dilated_ = false;
  std::vector<std::uint8_t> bits_;
};

struct ArtifactRecord {
  std::string component;
  std::string source;
  std::string sr;
  std::string metric;
  std::string mask;
  bool display_dilated = false;
  int votes_positive = 0;
  int votes_total = 0;
  std::optional<double> prominence;

  /// Recomputes prominence from the vote counts.
  void update_prominence();

  friend bool operator==(const ArtifactRecord&, const ArtifactRecord&) = default;
};

enum class SeShape { Square, Disk };

struct Offset {
  int dy = 0;
  int dx = 0;
  friend auto operator<=>(const Offset&, const Offset&) = default;
};

/// Horizontal run of a structuring element: row dy, columns [dx_lo, dx_hi].
struct SeRun {
  int dy = 0;
  int dx_lo = 0;
  int dx_hi = 0;
};

/// Flat structuring element. Square sides that are even are anchored at
/// (size/2, size/2), so offsets run from -size/2 to size/2 - 1. A disk of
/// diameter d holds every integer offset with dx^2 + dy^2 <= (d/2)^2.
class StructuringElement {
 public:
  static StructuringElement square(int size);
  static StructuringElement disk(int diameter);

  SeShape shape() const { return shape_; }
  int size() const { return size_; }
  const std::vector<Offset>& offsets() const { return offsets_; }
  const std::vector<SeRun>& runs() const { return runs_; }

  /// Point reflection through the origin.
  StructuringElement reflected() const;
  bool is_symmetric() const;

 private:
  StructuringElement(SeShape shape, int size, std::vector<Offset> offsets);

  SeShape shape_ = SeShape::Square;
  int size_ = 0;
  std::vector<Offset> offsets_;
  std::vector<SeRun> runs_;
};

}  // namespace srprom
