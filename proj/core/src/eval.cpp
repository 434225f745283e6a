#include "spml/eval.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "spml/errors.hpp"

namespace spml {

std::vector<std::size_t> EvalReport::excluded_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < per_class_ap.size(); ++i) {
    if (!per_class_ap[i]) out.push_back(i);
  }
  return out;
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DataError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw DataError("average_precision: no positive labels");
  return sum / static_cast<double>(hits);
}

EvalReport mean_average_precision(const PredictionMatrix& predictions, const FullLabels& labels) {
  if (!predictions.same_shape(labels)) {
    throw DataError("mean_average_precision: predictions and labels differ in shape");
  }
  const std::size_t n = predictions.rows();
  const std::size_t n_classes = predictions.cols();
  EvalReport report;
  report.n_examples = n;
  report.per_class_ap.resize(n_classes);
  std::vector<double> scores(n);
  std::vector<std::uint8_t> column(n);
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < n_classes; ++i) {
    bool any = false;
    for (std::size_t r = 0; r < n; ++r) {
      scores[r] = predictions(r, i);
      column[r] = labels(r, i);
      any |= column[r] != 0;
    }
    if (!any) continue;
    const double ap = average_precision(scores, column);
    report.per_class_ap[i] = ap;
    total += ap;
    ++counted;
  }
  if (counted == 0) throw DataError("mean_average_precision: no class has a positive");
  report.map = total / static_cast<double>(counted);
  return report;
}

EvalReport label_recovery_map(const PredictionMatrix& predictions,
                              const std::optional<FullLabels>& full_labels) {
  if (!full_labels) throw DataError("label_recovery_map: full training labels are unavailable");
  return mean_average_precision(predictions, *full_labels);
}

std::vector<HistogramBin> unobserved_positive_histogram(const PredictionMatrix& predictions,
                                                        const FullLabels& full,
                                                        const ObservedLabels& observed,
                                                        std::size_t n_bins) {
  if (n_bins < 2) throw ConfigError("unobserved_positive_histogram: need at least 2 bins");
  if (!predictions.same_shape(full) || !predictions.same_shape(observed)) {
    throw DataError("unobserved_positive_histogram: shape mismatch");
  }
  std::vector<HistogramBin> bins(n_bins);
  const double width = 1.0 / static_cast<double>(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = static_cast<double>(b) * width;
    bins[b].hi = b + 1 == n_bins ? 1.0 : static_cast<double>(b + 1) * width;
  }
  std::size_t count = 0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    if (!full.values()[j] || observed.values()[j] != Obs::Unobserved) continue;
    const double p = std::clamp(predictions.values()[j], 0.0, 1.0);
    auto b = static_cast<std::size_t>(p * static_cast<double>(n_bins));
    bins[std::min(b, n_bins - 1)].mass += 1.0;
    ++count;
  }
  if (count == 0) throw DataError("unobserved_positive_histogram: no unobserved positives");
  for (auto& bin : bins) bin.mass /= static_cast<double>(count);
  return bins;
}

}  // namespace spml
