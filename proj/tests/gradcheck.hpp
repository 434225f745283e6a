#pragma once

#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "spml/losses.hpp"
#include "spml/model.hpp"
#include "spml/role.hpp"
#include "spml/trainer.hpp"
#include "test_util.hpp"

namespace gradcheck {

using namespace spml;

inline std::optional<BceMode> bce_mode(LossMode m) {
  switch (m) {
    case LossMode::BCE: return BceMode::BCE;
    case LossMode::BCE_LS: return BceMode::BCE_LS;
    case LossMode::IU: return BceMode::IU;
    case LossMode::IUN: return BceMode::IUN;
    case LossMode::AN: return BceMode::AN;
    case LossMode::WAN: return BceMode::WAN;
    case LossMode::AN_LS: return BceMode::AN_LS;
    case LossMode::AN_LS_ASYM: return BceMode::AN_LS_ASYM;
    default: return std::nullopt;
  }
}

inline LossParams params() {
  LossParams p;
  p.eps = 0.1;
  p.eps_p = 0.05;
  p.eps_n = 0.2;
  return p;
}

inline std::vector<double> numeric(const MatrixD& at, const std::function<double(const MatrixD&)>& fn) {
  return oracle::numeric_gradient(
      [&](const std::vector<double>& x) { return fn(oracle::reshape(x, at.rows(), at.cols())); },
      oracle::flat(at));
}

// Value whose derivative in the predictions the library reports for `mode`.
// For ROLE this is the prediction block, (1/2) L'(F | Y~) with Y~ frozen.
inline double prediction_objective(LossMode mode, const MatrixD& f, const testutil::Instance& inst,
                                   const MatrixD& est, double k, double lambda) {
  if (auto b = bce_mode(mode)) return weighted_bce(f, build_coefficients(*b, inst.z, &inst.y, params())).value;
  if (mode == LossMode::PR) return loss_pairwise_ranking(f, inst.z).value;
  if (mode == LossMode::EPR) return loss_epr(f, inst.z, k, lambda).value;
  return 0.5 * loss_prime(f, est, inst.z, k, lambda).value;
}

inline MatrixD prediction_gradient(LossMode mode, const testutil::Instance& inst, const MatrixD& est,
                                   double k, double lambda) {
  if (auto b = bce_mode(mode)) return weighted_bce(inst.f, build_coefficients(*b, inst.z, &inst.y, params())).grad;
  if (mode == LossMode::PR) return loss_pairwise_ranking(inst.f, inst.z).grad;
  if (mode == LossMode::EPR) return loss_epr(inst.f, inst.z, k, lambda).grad;
  return loss_role(inst.f, est, inst.z, k, lambda).grad_predictions;
}

inline MatrixD random_probs(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> u(0.02, 0.98);
  MatrixD m(rows, cols);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

// Loss-level check: analytic d/dF against central differences.
inline double loss_level_error(LossMode mode, std::mt19937_64& rng) {
  auto inst = testutil::random_instance(rng);
  const auto est = random_probs(rng, inst.f.rows(), inst.f.cols());
  const double k = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
  const double lambda = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
  const auto g = prediction_gradient(mode, inst, est, k, lambda);
  const auto num = numeric(inst.f, [&](const MatrixD& f) {
    return prediction_objective(mode, f, inst, est, k, lambda);
  });
  return oracle::relative_error(oracle::flat(g), num);
}

// ROLE estimate block: analytic d/dY~ against (1/2) L'(Y~ | F) with F frozen.
inline double role_estimate_error(std::mt19937_64& rng) {
  auto inst = testutil::random_instance(rng);
  const auto est = random_probs(rng, inst.f.rows(), inst.f.cols());
  const double k = 1.5, lambda = 1.0;
  const auto g = loss_role(inst.f, est, inst.z, k, lambda).grad_estimates;
  const auto num = numeric(est, [&](const MatrixD& e) { return 0.5 * loss_prime(e, inst.f, inst.z, k, lambda).value; });
  return oracle::relative_error(oracle::flat(g), num);
}

struct Problem {
  DatasetBundle data;
  TrainState state;
  TrainConfig config;
  std::vector<std::size_t> batch;
};

inline Problem random_problem(LossMode mode, std::mt19937_64& rng, std::size_t max_classes = 10) {
  auto inst = testutil::random_instance(rng, max_classes);
  const std::size_t n = inst.z.rows();
  const std::size_t d = std::uniform_int_distribution<std::size_t>(1, 7)(rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Problem p;
  p.data.features = FeatureMatrix(n, d);
  for (auto& v : p.data.features.values()) v = static_cast<float>(normal(rng));
  p.data.full_labels = inst.y;
  p.data.observed_labels = inst.z;
  p.config.loss_mode = mode;
  p.config.loss_params = params();
  p.config.lambda = 0.8;
  p.config.k = 1.7;
  p.config.seed = rng();
  p.state = make_train_state(p.data, p.config);
  for (auto& w : p.state.model.weights.values()) w = 0.6 * normal(rng);
  for (auto& b : p.state.model.bias) b = 0.3 * normal(rng);
  if (p.state.estimator) {
    for (auto& v : p.state.estimator->phi.values()) v = 1.5 * normal(rng);
  }
  p.batch.resize(n);
  std::iota(p.batch.begin(), p.batch.end(), 0);
  return p;
}

// Objective the trainer differentiates with respect to theta, evaluated at `model`.
inline double theta_objective(const Problem& p, const LinearModel& model) {
  const auto f = forward(model, p.data.features, p.batch);
  testutil::Instance inst{f, *p.data.full_labels, p.data.observed_labels};
  MatrixD est;
  if (p.state.estimator) {
    est = phi_rows_for_batch(*p.state.estimator, p.batch);
    for (auto& v : est.values()) v = clamp_probability(v);
  }
  return prediction_objective(p.config.loss_mode, f, inst, est, *p.config.k, p.config.lambda);
}

// End-to-end check of weights and bias through the linear model.
inline double end_to_end_error(LossMode mode, std::mt19937_64& rng, std::size_t max_classes = 10) {
  const auto p = random_problem(mode, rng, max_classes);
  const auto g = compute_batch_gradients(p.state, p.data, p.config, p.batch);
  std::vector<double> analytic = oracle::flat(g.model.weights);
  analytic.insert(analytic.end(), g.model.bias.begin(), g.model.bias.end());
  std::vector<double> x = oracle::flat(p.state.model.weights);
  x.insert(x.end(), p.state.model.bias.begin(), p.state.model.bias.end());
  const std::size_t nw = p.state.model.weights.size();
  const auto num = oracle::numeric_gradient(
      [&](const std::vector<double>& v) {
        LinearModel m = p.state.model;
        std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(nw), m.weights.values().begin());
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(nw), v.end(), m.bias.begin());
        return theta_objective(p, m);
      },
      x);
  return oracle::relative_error(analytic, num);
}

// ROLE phi block through the sigmoid: (1/2) L'(sigmoid(phi) | F) with theta frozen.
inline double phi_block_error(std::mt19937_64& rng) {
  const auto p = random_problem(LossMode::ROLE, rng);
  const auto g = compute_batch_gradients(p.state, p.data, p.config, p.batch);
  const auto f = forward(p.state.model, p.data.features, p.batch);
  const auto num = numeric(p.state.estimator->phi, [&](const MatrixD& phi) {
    MatrixD est(phi.rows(), phi.cols());
    for (std::size_t i = 0; i < phi.size(); ++i) est.values()[i] = clamp_probability(sigmoid(phi.values()[i]));
    return 0.5 * loss_prime(est, f, p.data.observed_labels, *p.config.k, p.config.lambda).value;
  });
  return oracle::relative_error(oracle::flat(g.phi), num);
}

}  // namespace gradcheck
