#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>

#include "spml/dataset.hpp"
#include "spml/matrix.hpp"
#include "spml/rng.hpp"

namespace spml {

// Probabilities are kept inside [kProbClamp, 1 - kProbClamp] so every log
// term and its derivative stays finite.
inline constexpr double kProbClamp = 1e-7;

inline double clamp_probability(double p) noexcept {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

// Predictions (or label estimates) for a batch: rows are examples, columns classes.
using PredictionMatrix = MatrixD;

// Variants of binary cross-entropy expressed as per-entry weights on
// log(f) and log(1 - f).
enum class BceMode {
  BCE,           // full labels
  BCE_LS,        // full labels, symmetric label smoothing
  IU,            // ignore unobserved
  IUN,           // ignore unobserved negatives (uses true negatives)
  AN,            // assume negative
  WAN,           // assume negative with weight gamma on the negatives
  AN_LS,         // assume negative, symmetric label smoothing
  AN_LS_ASYM,    // assume negative, separate smoothing for positives and negatives
  BCE_POS_ONLY,  // observed positives only, unnormalized
};

struct LossParams {
  // Negative weight for WAN; unset means 1 / (L - 1).
  std::optional<double> gamma;
  double eps = 0.1;
  double eps_p = 0.0;
  double eps_n = 0.1;
};

struct BceCoefficients {
  MatrixD pos_weights;  // coefficient of log f
  MatrixD neg_weights;  // coefficient of log(1 - f)
  double normalizer = 1.0;
};

struct LossResult {
  double value = 0.0;
  MatrixD grad;  // d value / d predictions
};

BceCoefficients build_coefficients(BceMode mode, const ObservedLabels& observed,
                                   const FullLabels* full, const LossParams& params = {});

// value = -(normalizer / |B|) * sum_ni [A log f + B log(1 - f)]
LossResult weighted_bce(const PredictionMatrix& predictions, const BceCoefficients& coeffs);

// Hinge loss over (observed positive, assumed negative) pairs, summed per row
// and averaged over the batch. Everything that is not Pos counts as negative.
LossResult loss_pairwise_ranking(const PredictionMatrix& predictions,
                                 const ObservedLabels& observed);

// Mean predicted positives per row.
double expected_count(const PredictionMatrix& predictions);

struct RegularizerValue {
  double value;
  double derivative;  // d value / d k_hat
};

RegularizerValue epr_regularizer(double k_hat, double k, std::size_t n_classes);

// Positive-only BCE averaged over the batch plus lambda * R_k(F_B).
LossResult loss_epr(const PredictionMatrix& predictions, const ObservedLabels& observed, double k,
                    double lambda);

// Flips one uniformly chosen unobserved entry per row to Neg.
ObservedLabels pseudo_negative_draw(const ObservedLabels& observed, Seed seed);

}  // namespace spml
