#include "srprom/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace srprom {

ImageBuffer::ImageBuffer(int width, int height, int channels, float fill)
    : ImageBuffer(width, height, channels,
                  std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                                         std::max(channels, 0),
                                     fill)) {}

ImageBuffer::ImageBuffer(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 1 || height < 1) throw ValidationError("image dimensions must be positive");
  if (channels != 1 && channels != 3) throw ValidationError("image must have 1 or 3 channels");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels)
    throw ValidationError("image data length does not match width*height*channels");
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("image intensities must lie in [0,1]");
  }
}

std::string to_string(Polarity p) {
  return p == Polarity::DistortionHigh ? "distortion-high" : "similarity-high";
}

Polarity polarity_from_string(const std::string& s) {
  if (s == "distortion-high") return Polarity::DistortionHigh;
  if (s == "similarity-high") return Polarity::SimilarityHigh;
  throw ValidationError("unknown polarity '" + s + "'");
}

Heatmap::Heatmap(int width, int height, Polarity polarity, double fill)
    : Heatmap(width, height, polarity,
              std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill)) {}

Heatmap::Heatmap(int width, int height, Polarity polarity, std::vector<double> values)
    : width_(width), height_(height), polarity_(polarity), values_(std::move(values)) {
  if (width < 1 || height < 1) throw ValidationError("heatmap dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(width) * height)
    throw ValidationError("heatmap value count does not match width*height");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("heatmap values must be finite");
  }
}

std::vector<double> Heatmap::oriented_values() const {
  std::vector<double> out = values_;
  if (polarity_ == Polarity::SimilarityHigh) {
    for (double& v : out) v = -v;
  }
  return out;
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ValidationError("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

BinaryMask BinaryMask::complement() const {
  BinaryMask out = *this;
  for (auto& b : out.bits_) b = b ? 0 : 1;
  return out;
}

bool BinaryMask::contains(const BinaryMask& other) const {
  if (size() != other.size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (other.bits_[i] && !bits_[i]) return false;
  }
  return true;
}

void ArtifactRecord::update_prominence() {
  if (votes_total > 0) {
    prominence = static_cast<double>(votes_positive) / static_cast<double>(votes_total);
  } else {
    prominence.reset();
  }
}

StructuringElement::StructuringElement(SeShape shape, int size, std::vector<Offset> offsets)
    : shape_(shape), size_(size), offsets_(std::move(offsets)) {
  std::sort(offsets_.begin(), offsets_.end());
  // Offsets are sorted by (dy, dx); split each row into contiguous runs.
  for (std::size_t i = 0; i < offsets_.size();) {
    SeRun run{offsets_[i].dy, offsets_[i].dx, offsets_[i].dx};
    std::size_t j = i + 1;
    while (j < offsets_.size() && offsets_[j].dy == run.dy && offsets_[j].dx == run.dx_hi + 1) {
      run.dx_hi = offsets_[j].dx;
      ++j;
    }
    runs_.push_back(run);
    i = j;
  }
}

StructuringElement StructuringElement::square(int size) {
  if (size < 1) throw ValidationError("square structuring element needs size >= 1");
  const int lo = -(size / 2);
  std::vector<Offset> offsets;
  offsets.reserve(static_cast<std::size_t>(size) * size);
  for (int dy = lo; dy < lo + size; ++dy) {
    for (int dx = lo; dx < lo + size; ++dx) offsets.push_back({dy, dx});
  }
  return StructuringElement(SeShape::Square, size, std::move(offsets));
}

StructuringElement StructuringElement::disk(int diameter) {
  if (diameter < 1) throw ValidationError("disk structuring element needs diameter >= 1");
  // dx^2 + dy^2 <= (d/2)^2, evaluated as 4(dx^2 + dy^2) <= d^2 to stay in integers.
  const long long d2 = static_cast<long long>(diameter) * diameter;
  const int r = diameter / 2;
  std::vector<Offset> offsets;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (4LL * (dx * dx + dy * dy) <= d2) offsets.push_back({dy, dx});
    }
  }
  return StructuringElement(SeShape::Disk, diameter, std::move(offsets));
}

StructuringElement StructuringElement::reflected() const {
  std::vector<Offset> offsets;
  offsets.reserve(offsets_.size());
  for (const auto& o : offsets_) offsets.push_back({-o.dy, -o.dx});
  return StructuringElement(shape_, size_, std::move(offsets));
}

bool StructuringElement::is_symmetric() const {
  auto r = reflected();
  return r.offsets_ == offsets_;
}

}  // namespace srprom
