#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srprom/types.hpp"

namespace srprom::reference {

enum class ReferenceMode { OriginalHr, PseudoGtFile, BicubicFallback };

std::string to_string(ReferenceMode mode);
ReferenceMode reference_mode_from_string(std::string_view s);

/// How one dataset component obtains its reference image.
/// `path` is a template; {component}, {source} and {sr} are substituted.
/// For bicubic-fallback the path names the low-resolution input.
struct ComponentReference {
  ReferenceMode mode = ReferenceMode::OriginalHr;
  std::string path;
  bool has_hr = true;
};

/// Components with no higher-resolution ground truth (compared case-insensitively).
bool component_without_hr(std::string_view component);

class ReferenceConfig {
 public:
  ReferenceConfig() = default;

  /// {"<component>": {"mode": "...", "path": "...", "has_hr": bool}, ...}
  /// Relative paths are resolved against `base_dir`.
  static ReferenceConfig from_json(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static ReferenceConfig from_file(const std::filesystem::path& path);

  /// Throws ValidationError for original-hr on a component without HR.
  void set(const std::string& component, ComponentReference ref);
  const ComponentReference& at(const std::string& component) const;
  bool contains(const std::string& component) const { return entries_.count(component) != 0; }
  std::vector<std::string> components() const;

 private:
  std::map<std::string, ComponentReference> entries_;
};

std::string expand_path_template(std::string_view templ, const ArtifactRecord& record);

using ImageLoader = std::function<ImageBuffer(const std::filesystem::path&)>;

/// Loads the reference for `record` and bicubic-resizes it to `target` when
/// the sizes differ. Missing files raise IoError; configuration problems
/// raise ValidationError. The default loader reads PNG files.
ImageBuffer resolve_reference(const ArtifactRecord& record, const ReferenceConfig& config, Size target,
                              const ImageLoader& loader = {});

/// Memoizes resolve_reference per (component, source, sr, mode, target).
class ReferenceCache {
 public:
  explicit ReferenceCache(ReferenceConfig config, ImageLoader loader = {});
  const ImageBuffer& get(const ArtifactRecord& record, Size target);
  std::size_t size() const;

 private:
  ReferenceConfig config_;
  ImageLoader loader_;
  mutable std::mutex mutex_;
  std::map<std::string, ImageBuffer> entries_;
};

struct ProviderComparison {
  std::string provider;
  std::optional<double> srcc_hr;
  std::optional<double> srcc_pseudo;
  std::optional<double> delta;  // pseudo - hr
  double rank_hr = 0.0;         // 1 = best, ties averaged, undefined scores rank last
  double rank_pseudo = 0.0;
  double rank_change = 0.0;     // rank_pseudo - rank_hr
};

/// Pairs per-provider scores from the two reference runs.
/// Throws ValidationError when the provider sets differ.
std::vector<ProviderComparison> compare_reference_runs(const std::map<std::string, std::optional<double>>& scores_hr,
                                                       const std::map<std::string, std::optional<double>>& scores_pseudo);

}  // namespace srprom::reference
