#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "srprom/heatmaps.hpp"
#include "srprom/types.hpp"

namespace srprom::scoring {

// --- Threshold-free prominence score -----------------------------------------

struct ContrastResult {
  std::optional<double> value;
  std::string skip_reason;  // set when value is empty
};

/// Median of the oriented heatmap inside the mask minus the median outside.
/// Display-dilated masks are eroded back first. Whole-image and empty masks
/// are skipped with a reason.
ContrastResult mask_contrast(const Heatmap& h, const BinaryMask& mask);

/// Median of unsorted data (mean of the two middle values for even counts).
double median(std::vector<double> values);

/// Average ranks (1-based), ties receive the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

/// Pearson correlation of average ranks. nullopt when fewer than two
/// samples or either rank vector has zero variance.
std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// One annotated mask paired with the provider heatmap of its SR image.
struct ScoredMask {
  const ArtifactRecord* record = nullptr;
  const Heatmap* heatmap = nullptr;
  const BinaryMask* mask = nullptr;
};

struct SkippedRecord {
  std::size_t index = 0;  // position in the input list
  std::string reason;
};

struct ComponentScore {
  std::string component;
  std::optional<double> srcc;
  std::size_t used = 0;
  std::vector<SkippedRecord> skipped;
  bool warning = false;  // more than 10% of records skipped
};

inline constexpr double kSkipWarningFraction = 0.10;

/// SRCC(contrast, prominence) per dataset component, sorted by component name.
std::vector<ComponentScore> prominence_score(const std::vector<ScoredMask>& items);

// --- Uncurated benchmark tables ---------------------------------------------

struct TableRow {
  std::string key;  // metric id or SR id
  std::size_t masks = 0;
  std::optional<double> mean_prominence;
  std::size_t confident = 0;
  double prom_x_conf = 0.0;  // mean_prominence * confident
};

TableRow summarize(const std::string& key, const std::vector<double>& prominences);

/// One row per metric_id over records with a prominence value.
std::vector<TableRow> detector_table(const std::vector<ArtifactRecord>& records);

/// Keeps the highest-prominence record per (sr, source); ties go to the
/// lexicographically smallest metric id.
std::vector<ArtifactRecord> deduplicate_per_sr_image(const std::vector<ArtifactRecord>& records);

/// One row per sr id after deduplication.
std::vector<TableRow> sr_table(const std::vector<ArtifactRecord>& records);

/// Spearman agreement between two per-provider score maps over their shared keys.
std::optional<double> rank_agreement(const std::map<std::string, double>& a, const std::map<std::string, double>& b);

// --- Threshold calibration ---------------------------------------------------

struct CalibrationImage {
  const Heatmap* heatmap = nullptr;
  std::vector<const BinaryMask*> gt_masks;  // prominent GT masks on this image
};

struct CalibrationParams {
  std::size_t max_grid = 512;
  double recall_overlap = 0.3;
};

struct CalibrationResult {
  double threshold = 0.0;  // in the provider's native units and comparator
  double precision = 0.0;
  double recall = 0.0;
  double product = 0.0;
  std::size_t predicted_pixels = 0;
  double base_rate = 0.0;  // fraction of pixels inside GT masks
  std::size_t candidates = 0;
};

/// Sweeps thresholds at midpoints between consecutive distinct heatmap
/// values and returns the Precision x Recall maximizer. Precision is the
/// fraction of predicted pixels inside GT masks; recall is the fraction of
/// GT masks whose predicted overlap reaches `recall_overlap` of their area.
/// Ties prefer the threshold that predicts fewer pixels.
CalibrationResult calibrate_threshold(const heatmaps::ProviderSpec& provider, const std::vector<CalibrationImage>& set,
                                      const CalibrationParams& params = {});

}  // namespace srprom::scoring
