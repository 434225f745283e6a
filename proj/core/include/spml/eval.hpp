#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spml/dataset.hpp"
#include "spml/losses.hpp"

namespace spml {

struct EvalReport {
  // nullopt for classes without positives; those are left out of `map`.
  std::vector<std::optional<double>> per_class_ap;
  double map = 0.0;
  std::size_t n_examples = 0;

  std::vector<std::size_t> excluded_classes() const;
};

// Non-interpolated AP: rank by descending score (ties: lower index first) and
// average precision@rank over the ranks of the positives.
// Throws DataError when `labels` has no positive.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Macro average of per-class AP over classes that have at least one positive.
EvalReport mean_average_precision(const PredictionMatrix& predictions, const FullLabels& labels);

// MAP of training-set predictions (classifier outputs or label estimates)
// against the uncorrupted labels.
EvalReport label_recovery_map(const PredictionMatrix& predictions,
                              const std::optional<FullLabels>& full_labels);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
};

// Normalized histogram over [0, 1] of predictions at entries with y = 1 and
// z = Unobserved. A value of exactly 1 falls into the last bin.
std::vector<HistogramBin> unobserved_positive_histogram(const PredictionMatrix& predictions,
                                                        const FullLabels& full,
                                                        const ObservedLabels& observed,
                                                        std::size_t n_bins);

}  // namespace spml
