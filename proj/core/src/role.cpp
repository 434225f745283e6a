#include "spml/role.hpp"

#include <cmath>

#include "spml/errors.hpp"

namespace spml {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

MatrixD LabelEstimatorState::readout() const {
  MatrixD out(phi.rows(), phi.cols());
  for (std::size_t i = 0; i < phi.size(); ++i) out.values()[i] = sigmoid(phi.values()[i]);
  return out;
}

LabelEstimatorState init_phi(const ObservedLabels& observed, Seed seed) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unobserved_init(logit(0.4), logit(0.6));
  const double positive_init = logit(0.995);
  LabelEstimatorState state{MatrixD(observed.rows(), observed.cols())};
  for (std::size_t i = 0; i < observed.size(); ++i) {
    switch (observed.values()[i]) {
      case Obs::Pos:
        state.phi.values()[i] = positive_init;
        break;
      case Obs::Unobserved:
        state.phi.values()[i] = unobserved_init(rng);
        break;
      case Obs::Neg:
        throw DataError("init_phi: label estimation expects positive-only observations");
    }
  }
  return state;
}

MatrixD phi_rows_for_batch(const LabelEstimatorState& state,
                           std::span<const std::size_t> indices) {
  MatrixD out(indices.size(), state.n_classes());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= state.n_examples()) {
      throw DataError("phi_rows_for_batch: index " + std::to_string(indices[r]) +
                      " out of range");
    }
    auto src = state.phi.row(indices[r]);
    auto dst = out.row(r);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = sigmoid(src[i]);
  }
  return out;
}

LossResult loss_prime(const PredictionMatrix& predictions, const PredictionMatrix& targets,
                      const ObservedLabels& observed, double k, double lambda) {
  if (!predictions.same_shape(targets) || !predictions.same_shape(observed)) {
    throw DataError("loss_prime: shape mismatch");
  }
  for (double t : targets.values()) {
    if (!(t >= 0.0 && t <= 1.0)) throw DataError("loss_prime: target outside [0, 1]");
  }
  BceCoefficients soft{targets, MatrixD(targets.rows(), targets.cols()),
                       1.0 / static_cast<double>(targets.cols())};
  for (std::size_t i = 0; i < targets.size(); ++i) {
    soft.neg_weights.values()[i] = 1.0 - targets.values()[i];
  }
  LossResult out = weighted_bce(predictions, soft);
  const LossResult epr = loss_epr(predictions, observed, k, lambda);
  out.value += epr.value;
  for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad.values()[i] += epr.grad.values()[i];
  return out;
}

RoleLossResult loss_role(const PredictionMatrix& predictions, const PredictionMatrix& estimates,
                         const ObservedLabels& observed, double k, double lambda) {
  LossResult forward = loss_prime(predictions, estimates, observed, k, lambda);
  LossResult swapped = loss_prime(estimates, predictions, observed, k, lambda);
  for (auto& g : forward.grad.values()) g *= 0.5;
  for (auto& g : swapped.grad.values()) g *= 0.5;
  return {0.5 * (forward.value + swapped.value), std::move(forward.grad),
          std::move(swapped.grad)};
}

}  // namespace spml
