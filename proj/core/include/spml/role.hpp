#pragma once

#include <cstddef>
#include <span>

#include "spml/dataset.hpp"
#include "spml/losses.hpp"
#include "spml/matrix.hpp"
#include "spml/rng.hpp"

namespace spml {

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

// Per-example label estimates stored as logits; the estimate is sigmoid(phi).
struct LabelEstimatorState {
  MatrixD phi;

  std::size_t n_examples() const noexcept { return phi.rows(); }
  std::size_t n_classes() const noexcept { return phi.cols(); }
  MatrixD readout() const;
};

// Observed positives start at logit(0.995); unobserved entries are drawn
// uniformly from [logit(0.4), logit(0.6)].
LabelEstimatorState init_phi(const ObservedLabels& observed, Seed seed);

// sigmoid(phi) for the requested rows, unclamped.
MatrixD phi_rows_for_batch(const LabelEstimatorState& state, std::span<const std::size_t> indices);

// Mean BCE of predictions against fixed soft targets plus the EPR loss on the
// predictions. Targets receive no gradient.
LossResult loss_prime(const PredictionMatrix& predictions, const PredictionMatrix& targets,
                      const ObservedLabels& observed, double k, double lambda);

struct RoleLossResult {
  double value = 0.0;
  MatrixD grad_predictions;
  MatrixD grad_estimates;
};

// [L'(F | Y~) + L'(Y~ | F)] / 2. Each half only differentiates its first argument.
RoleLossResult loss_role(const PredictionMatrix& predictions, const PredictionMatrix& estimates,
                         const ObservedLabels& observed, double k, double lambda);

}  // namespace spml
