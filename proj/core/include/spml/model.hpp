#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spml/dataset.hpp"
#include "spml/losses.hpp"
#include "spml/matrix.hpp"
#include "spml/rng.hpp"

namespace spml {

// f(x) = sigmoid(W x + b), one independent logistic output per class.
struct LinearModel {
  MatrixD weights;           // L x d
  std::vector<double> bias;  // L

  std::size_t n_classes() const noexcept { return weights.rows(); }
  std::size_t n_features() const noexcept { return weights.cols(); }
};

struct LinearModelGrad {
  MatrixD weights;
  std::vector<double> bias;
};

// Weights ~ Uniform[-1/sqrt(d), 1/sqrt(d)], bias 0.
LinearModel init_linear_model(std::size_t n_features, std::size_t n_classes, Seed seed);

// Clamped probabilities for the listed rows of `features`.
PredictionMatrix forward(const LinearModel& model, const FeatureMatrix& features,
                         std::span<const std::size_t> indices);
PredictionMatrix forward(const LinearModel& model, const FeatureMatrix& features);

// Backpropagates d loss / d f through the sigmoid. Entries whose probability
// was clamped get zero gradient.
LinearModelGrad backward(const LinearModel& model, const FeatureMatrix& features,
                         std::span<const std::size_t> indices, const MatrixD& grad_f);

// Checkpoints use the binary matrix format: `<path>.weights` and `<path>.bias`,
// each with a JSON sidecar carrying `metadata_json` members.
void save_model(const std::filesystem::path& path, const LinearModel& model,
                const std::string& metadata_json = "{}");
LinearModel load_model(const std::filesystem::path& path);

}  // namespace spml
