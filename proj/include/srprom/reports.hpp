#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "srprom/prominence.hpp"
#include "srprom/scoring.hpp"

namespace srprom::reports {

using Json = nlohmann::ordered_json;

/// Dataset-overview row: sources, SR variants, masks, workers, mean prominence, prominent masks.
struct DatasetRow {
  std::string component;
  std::size_t source_images = 0;
  std::size_t sr_variants = 0;
  stats::ComponentSummary summary;
  std::optional<stats::WorkerCounts> workers;
};

DatasetRow dataset_row(const std::string& component, const std::vector<ArtifactRecord>& records,
                       const std::optional<stats::WorkerCounts>& workers = std::nullopt);

Json to_json(const DatasetRow& row);
Json to_json(const scoring::TableRow& row);
Json to_json(const scoring::ComponentScore& score);
Json to_json(const scoring::CalibrationResult& result);

std::string dataset_markdown(const std::vector<DatasetRow>& rows);
std::string detector_markdown(const std::vector<scoring::TableRow>& rows);
std::string sr_markdown(const std::vector<scoring::TableRow>& rows);
std::string srcc_markdown(const std::string& provider, const std::vector<scoring::ComponentScore>& scores);

/// "43.07%" style percentage with two decimals.
std::string percent(double fraction);
std::string fixed(double value, int decimals);

}  // namespace srprom::reports
