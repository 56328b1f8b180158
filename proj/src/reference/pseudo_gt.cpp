#include "srprom/reference.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "json.hpp"
#include "srprom/io.hpp"
#include "srprom/raster.hpp"
#include "srprom/scoring.hpp"

namespace srprom::reference {

std::string to_string(ReferenceMode mode) {
  switch (mode) {
    case ReferenceMode::OriginalHr:
      return "original-hr";
    case ReferenceMode::PseudoGtFile:
      return "pseudo-gt-file";
    case ReferenceMode::BicubicFallback:
      return "bicubic-fallback";
  }
  return "original-hr";
}

ReferenceMode reference_mode_from_string(std::string_view s) {
  if (s == "original-hr") return ReferenceMode::OriginalHr;
  if (s == "pseudo-gt-file") return ReferenceMode::PseudoGtFile;
  if (s == "bicubic-fallback") return ReferenceMode::BicubicFallback;
  throw ValidationError("unknown reference mode '" + std::string(s) +
                        "' (expected original-hr, pseudo-gt-file or bicubic-fallback)");
}

bool component_without_hr(std::string_view component) {
  std::string lower(component);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "urban100-hr" || lower == "urban100_hr";
}

void ReferenceConfig::set(const std::string& component, ComponentReference ref) {
  if (component_without_hr(component)) ref.has_hr = false;
  if (ref.mode == ReferenceMode::OriginalHr && !ref.has_hr) {
    throw ValidationError("reference config: component '" + component +
                          "' has no higher-resolution ground truth; use pseudo-gt-file or bicubic-fallback");
  }
  if (ref.path.empty()) throw ValidationError("reference config: component '" + component + "' needs a path");
  entries_[component] = std::move(ref);
}

const ComponentReference& ReferenceConfig::at(const std::string& component) const {
  const auto it = entries_.find(component);
  if (it == entries_.end()) throw ValidationError("reference config: no entry for component '" + component + "'");
  return it->second;
}

std::vector<std::string> ReferenceConfig::components() const {
  std::vector<std::string> out;
  for (const auto& [name, ref] : entries_) out.push_back(name);
  return out;
}

ReferenceConfig ReferenceConfig::from_json(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("reference config: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("reference config must be a JSON object");
  ReferenceConfig cfg;
  for (const auto& [component, entry] : j.items()) {
    if (!entry.is_object()) throw ValidationError("reference config: entry '" + component + "' must be an object");
    ComponentReference ref;
    try {
      ref.mode = reference_mode_from_string(entry.at("mode").get<std::string>());
      ref.path = entry.at("path").get<std::string>();
      ref.has_hr = entry.value("has_hr", true);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("reference config: entry '" + component + "': " + e.what());
    }
    if (!base_dir.empty() && std::filesystem::path(ref.path).is_relative()) ref.path = (base_dir / ref.path).string();
    cfg.set(component, std::move(ref));
  }
  return cfg;
}

ReferenceConfig ReferenceConfig::from_file(const std::filesystem::path& path) {
  return from_json(io::read_file_bytes(path), path.parent_path());
}

std::string expand_path_template(std::string_view templ, const ArtifactRecord& record) {
  std::string out;
  for (std::size_t i = 0; i < templ.size();) {
    if (templ[i] == '{') {
      const auto close = templ.find('}', i);
      if (close == std::string_view::npos) throw ValidationError("path template: unterminated '{'");
      const auto key = templ.substr(i + 1, close - i - 1);
      if (key == "component")
        out += record.component;
      else if (key == "source")
        out += record.source;
      else if (key == "sr")
        out += record.sr;
      else
        throw ValidationError("path template: unknown placeholder '{" + std::string(key) + "}'");
      i = close + 1;
    } else {
      out.push_back(templ[i++]);
    }
  }
  return out;
}

ImageBuffer resolve_reference(const ArtifactRecord& record, const ReferenceConfig& config, Size target,
                              const ImageLoader& loader) {
  const auto& ref = config.at(record.component);
  if (ref.mode == ReferenceMode::OriginalHr && (!ref.has_hr || component_without_hr(record.component))) {
    throw ValidationError("component '" + record.component + "' has no original HR reference");
  }
  const std::filesystem::path path = expand_path_template(ref.path, record);
  if (!loader && !std::filesystem::exists(path)) {
    throw IoError("missing " + to_string(ref.mode) + " reference for " + record.component + "/" + record.source + "/" +
                  record.sr + ": " + path.string());
  }
  ImageBuffer img = loader ? loader(path) : io::read_image(path);
  if (img.width() == target.width && img.height() == target.height) return img;
  return raster::resize(img, target.width, target.height, raster::ResizeMode::Bicubic);
}

ReferenceCache::ReferenceCache(ReferenceConfig config, ImageLoader loader)
    : config_(std::move(config)), loader_(std::move(loader)) {}

const ImageBuffer& ReferenceCache::get(const ArtifactRecord& record, Size target) {
  const auto& ref = config_.at(record.component);
  const std::string key = record.component + '\x1f' + record.source + '\x1f' + record.sr + '\x1f' +
                          to_string(ref.mode) + '\x1f' + std::to_string(target.width) + 'x' +
                          std::to_string(target.height);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(key);
    if (it != entries_.end()) return it->second;
  }
  ImageBuffer img = resolve_reference(record, config_, target, loader_);
  std::lock_guard<std::mutex> lock(mutex_);
  // std::map nodes are stable; a concurrent insert of the same key keeps the first.
  return entries_.emplace(key, std::move(img)).first->second;
}

std::size_t ReferenceCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

namespace {

std::vector<double> descending_ranks(const std::vector<std::optional<double>>& scores) {
  std::vector<double> keys;
  for (const auto& s : scores) keys.push_back(s ? -*s : std::numeric_limits<double>::infinity());
  return scoring::average_ranks(keys);
}

}  // namespace

std::vector<ProviderComparison> compare_reference_runs(const std::map<std::string, std::optional<double>>& scores_hr,
                                                       const std::map<std::string, std::optional<double>>& scores_pseudo) {
  std::vector<std::string> names;
  for (const auto& [name, s] : scores_hr) {
    if (!scores_pseudo.count(name)) throw ValidationError("provider '" + name + "' missing from the pseudo-GT run");
    names.push_back(name);
  }
  for (const auto& [name, s] : scores_pseudo) {
    if (!scores_hr.count(name)) throw ValidationError("provider '" + name + "' missing from the original-HR run");
  }
  std::vector<std::optional<double>> hr;
  std::vector<std::optional<double>> ps;
  for (const auto& n : names) {
    hr.push_back(scores_hr.at(n));
    ps.push_back(scores_pseudo.at(n));
  }
  const auto rank_hr = descending_ranks(hr);
  const auto rank_ps = descending_ranks(ps);
  std::vector<ProviderComparison> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ProviderComparison c;
    c.provider = names[i];
    c.srcc_hr = hr[i];
    c.srcc_pseudo = ps[i];
    if (hr[i] && ps[i]) c.delta = *ps[i] - *hr[i];
    c.rank_hr = rank_hr[i];
    c.rank_pseudo = rank_ps[i];
    c.rank_change = c.rank_pseudo - c.rank_hr;
    out.push_back(c);
  }
  return out;
}

}  // namespace srprom::reference
