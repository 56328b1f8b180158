#include "srprom/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "srprom/masks.hpp"
#include "srprom/prominence.hpp"

namespace srprom::scoring {

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of empty data");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

ContrastResult mask_contrast(const Heatmap& h, const BinaryMask& mask) {
  if (mask.size() != h.size()) throw ValidationError("mask_contrast: mask and heatmap sizes differ");
  const BinaryMask m = mask.display_dilated() ? masks::undo_dilation(mask) : mask;
  const auto oriented = h.oriented_values();
  std::vector<double> inside;
  std::vector<double> outside;
  for (std::size_t i = 0; i < oriented.size(); ++i) (m.bits()[i] ? inside : outside).push_back(oriented[i]);
  if (inside.empty()) return {std::nullopt, mask.display_dilated() ? "mask empty after erosion" : "mask empty"};
  if (outside.empty()) return {std::nullopt, "mask covers the whole image"};
  return {median(std::move(inside)) - median(std::move(outside)), {}};
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("spearman: inputs differ in length");
  if (xs.size() < 2) return std::nullopt;
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = 0.5 * static_cast<double>(xs.size() + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<ComponentScore> prominence_score(const std::vector<ScoredMask>& items) {
  struct Acc {
    std::vector<double> contrasts;
    std::vector<double> prominences;
    std::vector<SkippedRecord> skipped;
    std::size_t total = 0;
  };
  std::map<std::string, Acc> groups;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    if (!it.record) throw ValidationError("prominence_score: item " + std::to_string(i) + " has no record");
    auto& g = groups[it.record->component];
    ++g.total;
    if (!it.heatmap || !it.mask) {
      g.skipped.push_back({i, "no heatmap or mask resolved"});
      continue;
    }
    if (!it.record->prominence) {
      g.skipped.push_back({i, "record has no prominence"});
      continue;
    }
    const auto c = mask_contrast(*it.heatmap, *it.mask);
    if (!c.value) {
      g.skipped.push_back({i, c.skip_reason});
      continue;
    }
    g.contrasts.push_back(*c.value);
    g.prominences.push_back(*it.record->prominence);
  }
  std::vector<ComponentScore> out;
  for (auto& [name, g] : groups) {
    ComponentScore s;
    s.component = name;
    s.srcc = spearman(g.contrasts, g.prominences);
    s.used = g.contrasts.size();
    s.skipped = std::move(g.skipped);
    s.warning = static_cast<double>(s.skipped.size()) > kSkipWarningFraction * static_cast<double>(g.total);
    out.push_back(std::move(s));
  }
  return out;
}

TableRow summarize(const std::string& key, const std::vector<double>& prominences) {
  TableRow row;
  row.key = key;
  row.masks = prominences.size();
  if (prominences.empty()) return row;
  double sum = 0.0;
  for (double p : prominences) {
    sum += p;
    if (p >= stats::kProminentCutoff) ++row.confident;
  }
  row.mean_prominence = sum / static_cast<double>(prominences.size());
  row.prom_x_conf = *row.mean_prominence * static_cast<double>(row.confident);
  return row;
}

namespace {

template <typename KeyFn>
std::vector<TableRow> group_rows(const std::vector<ArtifactRecord>& records, KeyFn key) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.prominence) groups[key(r)].push_back(*r.prominence);
  }
  std::vector<TableRow> rows;
  for (const auto& [k, v] : groups) rows.push_back(summarize(k, v));
  return rows;
}

}  // namespace

std::vector<TableRow> detector_table(const std::vector<ArtifactRecord>& records) {
  return group_rows(records, [](const ArtifactRecord& r) { return r.metric; });
}

std::vector<ArtifactRecord> deduplicate_per_sr_image(const std::vector<ArtifactRecord>& records) {
  std::map<std::pair<std::string, std::string>, const ArtifactRecord*> best;
  for (const auto& r : records) {
    if (!r.prominence) continue;
    auto& slot = best[{r.sr, r.source}];
    if (!slot || *r.prominence > *slot->prominence ||
        (*r.prominence == *slot->prominence && r.metric < slot->metric)) {
      slot = &r;
    }
  }
  std::vector<ArtifactRecord> out;
  out.reserve(best.size());
  for (const auto& [key, r] : best) out.push_back(*r);
  return out;
}

std::vector<TableRow> sr_table(const std::vector<ArtifactRecord>& records) {
  return group_rows(deduplicate_per_sr_image(records), [](const ArtifactRecord& r) { return r.sr; });
}

std::optional<double> rank_agreement(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end()) continue;
    xs.push_back(v);
    ys.push_back(it->second);
  }
  return spearman(xs, ys);
}

}  // namespace srprom::scoring
