#include "srprom/reports.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace srprom::reports {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string percent(double fraction) { return fixed(100.0 * fraction, 2) + "%"; }

DatasetRow dataset_row(const std::string& component, const std::vector<ArtifactRecord>& records,
                       const std::optional<stats::WorkerCounts>& workers) {
  std::set<std::string> sources;
  std::set<std::string> srs;
  for (const auto& r : records) {
    sources.insert(r.source);
    srs.insert(r.sr);
  }
  return {component, sources.size(), srs.size(), stats::component_summary(records), workers};
}

Json to_json(const DatasetRow& row) {
  Json j;
  j["component"] = row.component;
  j["source_images"] = row.source_images;
  j["sr_variants"] = row.sr_variants;
  j["masks"] = row.summary.masks;
  if (row.workers) {
    j["total_workers"] = row.workers->total;
    j["valid_workers"] = row.workers->valid;
  }
  j["mean_prominence"] = row.summary.mean_prominence ? Json(*row.summary.mean_prominence) : Json(nullptr);
  j["prominent_masks"] = row.summary.prominent;
  j["prominent_fraction"] = row.summary.prominent_fraction;
  return j;
}

Json to_json(const scoring::TableRow& row) {
  Json j;
  j["key"] = row.key;
  j["masks"] = row.masks;
  j["mean_prominence"] = row.mean_prominence ? Json(*row.mean_prominence) : Json(nullptr);
  j["confident"] = row.confident;
  j["prom_x_conf"] = row.prom_x_conf;
  return j;
}

Json to_json(const scoring::ComponentScore& score) {
  Json j;
  j["component"] = score.component;
  j["srcc"] = score.srcc ? Json(*score.srcc) : Json(nullptr);
  if (!score.srcc) j["srcc_status"] = "undefined";
  j["used"] = score.used;
  j["skipped"] = Json::array();
  for (const auto& s : score.skipped) j["skipped"].push_back({{"index", s.index}, {"reason", s.reason}});
  j["warning"] = score.warning;
  return j;
}

Json to_json(const scoring::CalibrationResult& r) {
  Json j;
  j["threshold"] = r.threshold;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["precision_x_recall"] = r.product;
  j["predicted_pixels"] = r.predicted_pixels;
  j["base_rate"] = r.base_rate;
  j["grid_points"] = r.candidates;
  j["protocol"] = "pixel precision, mask recall at 0.3 overlap (reconstructed)";
  return j;
}

std::string dataset_markdown(const std::vector<DatasetRow>& rows) {
  std::ostringstream out;
  out << "| Dataset | Source images | SR variants | Artifact masks | Total workers | Valid workers | Mean prominence "
         "| Prominent masks |\n";
  out << "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.component << " | " << r.source_images << " | " << r.sr_variants << " | " << r.summary.masks
        << " | " << (r.workers ? std::to_string(r.workers->total) : "-") << " | "
        << (r.workers ? std::to_string(r.workers->valid) : "-") << " | "
        << (r.summary.mean_prominence ? percent(*r.summary.mean_prominence) : "-") << " | " << r.summary.prominent
        << " (" << fixed(100.0 * r.summary.prominent_fraction, 1) << "%) |\n";
  }
  return out.str();
}

std::string detector_markdown(const std::vector<scoring::TableRow>& rows) {
  std::ostringstream out;
  out << "| Method | Masks Found | Mean Prominence | Conf. Masks Found | Prom. x Conf. |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.key << " | " << r.masks << " | " << (r.mean_prominence ? percent(*r.mean_prominence) : "-")
        << " | " << r.confident << " | " << fixed(r.prom_x_conf, 2) << " |\n";
  }
  return out.str();
}

std::string sr_markdown(const std::vector<scoring::TableRow>& rows) {
  std::ostringstream out;
  out << "| SR | Masks | Mean Prominence (lower is better) | Conf. Masks (lower is better) |\n";
  out << "|---|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.key << " | " << r.masks << " | " << (r.mean_prominence ? percent(*r.mean_prominence) : "-")
        << " | " << r.confident << " |\n";
  }
  return out.str();
}

std::string srcc_markdown(const std::string& provider, const std::vector<scoring::ComponentScore>& scores) {
  std::ostringstream out;
  out << "| Provider | Component | SRCC | Used | Skipped |\n";
  out << "|---|---|---:|---:|---:|\n";
  for (const auto& s : scores) {
    out << "| " << provider << " | " << s.component << " | " << (s.srcc ? fixed(*s.srcc, 3) : "undefined") << " | "
        << s.used << " | " << s.skipped.size() << (s.warning ? " (warning)" : "") << " |\n";
  }
  return out.str();
}

}  // namespace srprom::reports
