#include "spml/losses.hpp"

#include <cmath>
#include <string>

#include "spml/errors.hpp"

namespace spml {
namespace {

void require_in_unit_interval(const PredictionMatrix& f) {
  for (double v : f.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("loss: prediction outside [0, 1]: " + std::to_string(v));
    }
  }
}

void require_batch(const PredictionMatrix& f, const ObservedLabels& z) {
  if (!f.same_shape(z)) throw DataError("loss: predictions and labels differ in shape");
  if (f.rows() == 0) throw DataError("loss: empty batch");
}

// Generalized indicator 1[Q]^{alpha,beta} = (1 - alpha) 1[Q] + beta 1[not Q].
double smoothed(bool q, double alpha, double beta) { return q ? 1.0 - alpha : beta; }

}  // namespace

BceCoefficients build_coefficients(BceMode mode, const ObservedLabels& observed,
                                   const FullLabels* full, const LossParams& params) {
  const std::size_t n = observed.rows();
  const std::size_t n_classes = observed.cols();
  if (n_classes == 0) throw DataError("build_coefficients: no classes");

  const bool needs_full = mode == BceMode::BCE || mode == BceMode::BCE_LS || mode == BceMode::IUN;
  if (needs_full) {
    if (!full) throw ConfigError("build_coefficients: this loss needs full labels");
    if (!full->same_shape(observed)) throw DataError("build_coefficients: label shape mismatch");
  }
  auto check_eps = [](double e, const char* name) {
    if (!(e >= 0.0 && e < 1.0)) {
      throw ConfigError(std::string("build_coefficients: ") + name + " must lie in [0, 1)");
    }
  };
  double gamma = 1.0;
  if (mode == BceMode::WAN) {
    if (params.gamma) {
      gamma = *params.gamma;
    } else {
      if (n_classes < 2) throw ConfigError("build_coefficients: default WAN gamma needs L >= 2");
      gamma = 1.0 / static_cast<double>(n_classes - 1);
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw ConfigError("build_coefficients: gamma must lie in (0, 1]");
    }
  }
  if (mode == BceMode::BCE_LS || mode == BceMode::AN_LS) check_eps(params.eps, "eps");
  if (mode == BceMode::AN_LS_ASYM) {
    check_eps(params.eps_p, "eps_p");
    check_eps(params.eps_n, "eps_n");
  }

  BceCoefficients c{MatrixD(n, n_classes), MatrixD(n, n_classes),
                    mode == BceMode::BCE_POS_ONLY ? 1.0 : 1.0 / static_cast<double>(n_classes)};
  const double half_eps = 0.5 * params.eps;
  const double half_p = 0.5 * params.eps_p;
  const double half_n = 0.5 * params.eps_n;

  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < n_classes; ++i) {
      const Obs z = observed(r, i);
      const bool pos = z == Obs::Pos;
      double a = 0.0, b = 0.0;
      switch (mode) {
        case BceMode::BCE: {
          const bool y = (*full)(r, i) != 0;
          a = y;
          b = !y;
          break;
        }
        case BceMode::BCE_LS: {
          const bool y = (*full)(r, i) != 0;
          a = smoothed(y, half_eps, half_eps);
          b = smoothed(!y, half_eps, half_eps);
          break;
        }
        case BceMode::IU:
          a = pos;
          b = z == Obs::Neg;
          break;
        case BceMode::IUN:
          a = pos;
          b = (*full)(r, i) == 0;
          break;
        case BceMode::AN:
          a = pos;
          b = !pos;
          break;
        case BceMode::WAN:
          a = pos;
          b = pos ? 0.0 : gamma;
          break;
        case BceMode::AN_LS:
          a = smoothed(pos, half_eps, half_eps);
          b = smoothed(!pos, half_eps, half_eps);
          break;
        case BceMode::AN_LS_ASYM:
          a = smoothed(pos, half_p, half_n);
          b = smoothed(!pos, half_n, half_p);
          break;
        case BceMode::BCE_POS_ONLY:
          a = pos;
          break;
      }
      c.pos_weights(r, i) = a;
      c.neg_weights(r, i) = b;
    }
  }
  return c;
}

LossResult weighted_bce(const PredictionMatrix& predictions, const BceCoefficients& coeffs) {
  if (!predictions.same_shape(coeffs.pos_weights) || !predictions.same_shape(coeffs.neg_weights)) {
    throw DataError("weighted_bce: coefficient shape mismatch");
  }
  if (predictions.rows() == 0) throw DataError("weighted_bce: empty batch");
  require_in_unit_interval(predictions);

  const double scale = coeffs.normalizer / static_cast<double>(predictions.rows());
  LossResult out{0.0, MatrixD(predictions.rows(), predictions.cols())};
  double total = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const double f = predictions.values()[j];
    const double a = coeffs.pos_weights.values()[j];
    const double b = coeffs.neg_weights.values()[j];
    double term = 0.0, grad = 0.0;
    if (a != 0.0) {
      term += a * std::log(f);
      grad += a / f;
    }
    if (b != 0.0) {
      term += b * std::log1p(-f);
      grad -= b / (1.0 - f);
    }
    total += term;
    out.grad.values()[j] = -scale * grad;
  }
  out.value = -scale * total;
  return out;
}

LossResult loss_pairwise_ranking(const PredictionMatrix& predictions,
                                 const ObservedLabels& observed) {
  require_batch(predictions, observed);
  require_in_unit_interval(predictions);
  const std::size_t n = predictions.rows();
  const double scale = 1.0 / static_cast<double>(n);
  LossResult out{0.0, MatrixD(n, predictions.cols())};
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    auto f = predictions.row(r);
    auto z = observed.row(r);
    auto g = out.grad.row(r);
    bool any_pos = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (z[i] != Obs::Pos) continue;
      any_pos = true;
      for (std::size_t j = 0; j < f.size(); ++j) {
        if (z[j] == Obs::Pos) continue;
        const double margin = 1.0 - f[i] + f[j];
        if (margin > 0.0) {
          total += margin;
          g[i] -= scale;
          g[j] += scale;
        }
      }
    }
    if (!any_pos) {
      throw DataError("loss_pairwise_ranking: row " + std::to_string(r) + " has no positive");
    }
  }
  out.value = scale * total;
  return out;
}

double expected_count(const PredictionMatrix& predictions) {
  if (predictions.rows() == 0) throw DataError("expected_count: empty batch");
  double sum = 0.0;
  for (double v : predictions.values()) sum += v;
  return sum / static_cast<double>(predictions.rows());
}

RegularizerValue epr_regularizer(double k_hat, double k, std::size_t n_classes) {
  if (n_classes == 0) throw ConfigError("epr_regularizer: L must be at least 1");
  const double l = static_cast<double>(n_classes);
  const double dev = (k_hat - k) / l;
  return {dev * dev, 2.0 * (k_hat - k) / (l * l)};
}

LossResult loss_epr(const PredictionMatrix& predictions, const ObservedLabels& observed, double k,
                    double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("loss_epr: lambda must be non-negative");
  require_batch(predictions, observed);
  LossResult out = weighted_bce(predictions,
                                build_coefficients(BceMode::BCE_POS_ONLY, observed, nullptr));
  const auto reg = epr_regularizer(expected_count(predictions), k, predictions.cols());
  out.value += lambda * reg.value;
  // d k_hat / d f_ni = 1 / |B| for every entry.
  const double g = lambda * reg.derivative / static_cast<double>(predictions.rows());
  for (auto& v : out.grad.values()) v += g;
  return out;
}

ObservedLabels pseudo_negative_draw(const ObservedLabels& observed, Seed seed) {
  Rng rng = make_rng(seed);
  ObservedLabels out = observed;
  std::vector<std::size_t> candidates;
  for (std::size_t r = 0; r < observed.rows(); ++r) {
    candidates.clear();
    for (std::size_t i = 0; i < observed.cols(); ++i) {
      if (observed(r, i) == Obs::Unobserved) candidates.push_back(i);
    }
    if (candidates.empty()) {
      throw DataError("pseudo_negative_draw: row " + std::to_string(r) +
                      " has no unobserved entry");
    }
    const auto pick =
        std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng);
    out(r, candidates[pick]) = Obs::Neg;
  }
  return out;
}

}  // namespace spml
