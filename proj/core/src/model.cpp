#include "spml/model.hpp"

#include <cmath>
#include <numeric>

#include "spml/errors.hpp"
#include "spml/io.hpp"
#include "spml/role.hpp"

namespace spml {
namespace {

void check_shapes(const LinearModel& model, const FeatureMatrix& features,
                  std::span<const std::size_t> indices) {
  if (model.bias.size() != model.n_classes()) throw DataError("model: bias length mismatch");
  if (features.cols() != model.n_features()) {
    throw DataError("model: feature dimension " + std::to_string(features.cols()) +
                    " does not match model dimension " + std::to_string(model.n_features()));
  }
  for (auto idx : indices) {
    if (idx >= features.rows()) throw DataError("model: batch index out of range");
  }
}

double logit_at(const LinearModel& model, std::span<const float> x, std::size_t cls) {
  auto w = model.weights.row(cls);
  double s = model.bias[cls];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * static_cast<double>(x[j]);
  return s;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const char* suffix) {
  auto out = p;
  out += suffix;
  return out;
}

}  // namespace

LinearModel init_linear_model(std::size_t n_features, std::size_t n_classes, Seed seed) {
  if (n_features == 0 || n_classes == 0) throw ConfigError("init_linear_model: empty shape");
  Rng rng = make_rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(n_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  LinearModel model{MatrixD(n_classes, n_features), std::vector<double>(n_classes, 0.0)};
  for (auto& w : model.weights.values()) w = dist(rng);
  return model;
}

PredictionMatrix forward(const LinearModel& model, const FeatureMatrix& features,
                         std::span<const std::size_t> indices) {
  check_shapes(model, features, indices);
  PredictionMatrix out(indices.size(), model.n_classes());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto x = features.row(indices[r]);
    for (std::size_t i = 0; i < model.n_classes(); ++i) {
      const double s = logit_at(model, x, i);
      if (!std::isfinite(s)) throw NumericalError("forward: non-finite logit");
      out(r, i) = clamp_probability(sigmoid(s));
    }
  }
  return out;
}

PredictionMatrix forward(const LinearModel& model, const FeatureMatrix& features) {
  const auto idx = all_rows(features.rows());
  return forward(model, features, idx);
}

LinearModelGrad backward(const LinearModel& model, const FeatureMatrix& features,
                         std::span<const std::size_t> indices, const MatrixD& grad_f) {
  check_shapes(model, features, indices);
  if (grad_f.rows() != indices.size() || grad_f.cols() != model.n_classes()) {
    throw DataError("backward: gradient shape does not match batch");
  }
  LinearModelGrad g{MatrixD(model.n_classes(), model.n_features()),
                    std::vector<double>(model.n_classes(), 0.0)};
  for (std::size_t r = 0; r < indices.size(); ++r) {
    auto x = features.row(indices[r]);
    for (std::size_t i = 0; i < model.n_classes(); ++i) {
      const double gf = grad_f(r, i);
      if (gf == 0.0) continue;
      const double p = sigmoid(logit_at(model, x, i));
      if (p < kProbClamp || p > 1.0 - kProbClamp) continue;
      const double dz = gf * p * (1.0 - p);
      g.bias[i] += dz;
      auto gw = g.weights.row(i);
      for (std::size_t j = 0; j < x.size(); ++j) gw[j] += dz * static_cast<double>(x[j]);
    }
  }
  return g;
}

void save_model(const std::filesystem::path& path, const LinearModel& model,
                const std::string& metadata_json) {
  io::write_binary_matrix(with_suffix(path, ".weights"), model.weights, metadata_json);
  io::write_binary_matrix(with_suffix(path, ".bias"), MatrixD(1, model.bias.size(), model.bias),
                          metadata_json);
}

LinearModel load_model(const std::filesystem::path& path) {
  LinearModel model;
  model.weights = io::read_binary_matrix_f64(with_suffix(path, ".weights"));
  const auto bias = io::read_binary_matrix_f64(with_suffix(path, ".bias"));
  if (bias.rows() != 1 || bias.cols() != model.weights.rows()) {
    throw DataError("load_model: bias shape does not match weights");
  }
  model.bias.assign(bias.values().begin(), bias.values().end());
  return model;
}

}  // namespace spml
