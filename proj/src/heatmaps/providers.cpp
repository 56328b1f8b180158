#include <cmath>

#include "json.hpp"
#include "srprom/heatmaps.hpp"

namespace srprom::heatmaps {

std::string to_string(Comparator c) { return c == Comparator::Above ? "above" : "below"; }

Comparator comparator_from_string(const std::string& s) {
  if (s == "above") return Comparator::Above;
  if (s == "below") return Comparator::Below;
  throw ValidationError("unknown comparator '" + s + "'");
}

void ProviderSpec::validate() const {
  if (name.empty()) throw ValidationError("provider spec needs a name");
  if (!std::isfinite(threshold)) throw ValidationError("provider '" + name + "': threshold must be finite");
  const bool consistent = (polarity == Polarity::SimilarityHigh) == (comparator == Comparator::Below);
  if (!consistent) {
    throw ValidationError("provider '" + name + "': comparator '" + heatmaps::to_string(comparator) +
                          "' is inconsistent with polarity '" + srprom::to_string(polarity) + "'");
  }
  if (block && *block < 1) throw ValidationError("provider '" + name + "': block must be positive");
  if (stride && *stride < 1) throw ValidationError("provider '" + name + "': stride must be positive");
}

ProviderRegistry::ProviderRegistry(std::vector<ProviderSpec> specs) {
  for (auto& s : specs) {
    s.validate();
    const std::string name = s.name;
    if (!specs_.emplace(name, std::move(s)).second) throw ValidationError("duplicate provider '" + name + "'");
  }
}

ProviderRegistry ProviderRegistry::defaults() {
  using P = Polarity;
  using C = Comparator;
  return ProviderRegistry({
      {"ssim", P::SimilarityHigh, 0.55, C::Below, std::nullopt, std::nullopt},
      {"dists", P::DistortionHigh, 0.25, C::Above, 16, 16},
      {"ssm_jup", P::DistortionHigh, 0.15, C::Above, std::nullopt, std::nullopt},
      {"bd_jup", P::DistortionHigh, 0.1, C::Above, std::nullopt, std::nullopt},
      {"ldl", P::DistortionHigh, 0.005, C::Above, std::nullopt, std::nullopt},
      {"baseline", P::DistortionHigh, 0.3, C::Above, std::nullopt, std::nullopt},
  });
}

ProviderRegistry ProviderRegistry::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("malformed provider registry: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("provider registry must be a JSON array");
  std::vector<ProviderSpec> specs;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    try {
      ProviderSpec s;
      s.name = e.at("name").get<std::string>();
      s.polarity = polarity_from_string(e.at("polarity").get<std::string>());
      s.comparator = comparator_from_string(e.at("comparator").get<std::string>());
      s.threshold = e.at("threshold").get<double>();
      if (e.contains("block")) s.block = e.at("block").get<int>();
      if (e.contains("stride")) s.stride = e.at("stride").get<int>();
      specs.push_back(std::move(s));
    } catch (const nlohmann::json::exception& ex) {
      throw ValidationError("provider registry entry " + std::to_string(i) + ": " + ex.what());
    }
  }
  return ProviderRegistry(std::move(specs));
}

ProviderRegistry ProviderRegistry::from_file(const std::filesystem::path& path) {
  return from_json(io::read_file_bytes(path));
}

const ProviderSpec& ProviderRegistry::at(const std::string& name) const {
  auto it = specs_.find(name);
  if (it == specs_.end()) throw ValidationError("unknown provider '" + name + "'");
  return it->second;
}

std::vector<std::string> ProviderRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, spec] : specs_) out.push_back(name);
  return out;
}

Heatmap ingest_block_heatmap(const io::SrphContent& content, const ProviderSpec& spec, Size image_size) {
  const Heatmap& field = content.field;
  if (field.size() == image_size) {
    Heatmap out = field;
    out.set_polarity(spec.polarity);
    if (out.provider().empty()) out.set_provider(spec.name);
    return out;
  }

  std::optional<io::GridLayout> layout = content.grid;
  if (!layout && spec.block) layout = io::GridLayout{*spec.block, spec.stride.value_or(*spec.block), image_size};
  auto shape = [](int w, int h) { return std::to_string(w) + "x" + std::to_string(h); };
  if (!layout) {
    throw ValidationError("heatmap for provider '" + spec.name + "' is " + shape(field.width(), field.height()) +
                          "; expected pixel grid " + shape(image_size.width, image_size.height) +
                          " and no block layout is declared");
  }
  if (layout->image != image_size) {
    throw ValidationError("block grid for provider '" + spec.name + "' was computed on a " +
                          shape(layout->image.width, layout->image.height) + " image, expected " +
                          shape(image_size.width, image_size.height));
  }
  const int cols = BlockGrid::grid_extent(image_size.width, layout->block, layout->stride);
  const int rows = BlockGrid::grid_extent(image_size.height, layout->block, layout->stride);
  if (field.width() != cols || field.height() != rows) {
    throw ValidationError("heatmap for provider '" + spec.name + "' is " + shape(field.width(), field.height()) +
                          "; expected pixel grid " + shape(image_size.width, image_size.height) + " or block grid " +
                          shape(cols, rows) + " (block " + std::to_string(layout->block) + ", stride " +
                          std::to_string(layout->stride) + ")");
  }
  Heatmap out = BlockGrid::from_heatmap(field, *layout).to_heatmap(spec.polarity);
  out.set_provider(field.provider().empty() ? spec.name : field.provider());
  return out;
}

Heatmap ingest_block_heatmap(const std::filesystem::path& path, const ProviderSpec& spec, Size image_size) {
  return ingest_block_heatmap(io::read_srph(path), spec, image_size);
}

}  // namespace srprom::heatmaps
