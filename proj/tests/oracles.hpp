#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's loss or metric code paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

#include "spml/dataset.hpp"
#include "spml/matrix.hpp"

namespace oracle {

using spml::MatrixD;
using spml::Obs;

inline double row_mean(const std::vector<double>& per_row) {
  return std::accumulate(per_row.begin(), per_row.end(), 0.0) / static_cast<double>(per_row.size());
}

// Per-row equation evaluators, averaged over rows.
inline double bce_full(const MatrixD& f, const spml::FullLabels& y) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      s += y(n, i) == 1 ? std::log(f(n, i)) : std::log(1.0 - f(n, i));
    }
    rows.push_back(-s / static_cast<double>(f.cols()));
  }
  return row_mean(rows);
}

inline double soft_bce(const MatrixD& f, const MatrixD& t) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      s += t(n, i) * std::log(f(n, i)) + (1.0 - t(n, i)) * std::log(1.0 - f(n, i));
    }
    rows.push_back(-s / static_cast<double>(f.cols()));
  }
  return row_mean(rows);
}

// Generalized indicator with separate on/off values.
inline double ind(bool q, double alpha, double beta) { return (1.0 - alpha) * q + beta * !q; }

inline double an_family(const MatrixD& f, const spml::ObservedLabels& z, double pos_alpha,
                        double pos_beta, double neg_alpha, double neg_beta, double neg_weight) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      const bool pos = z(n, i) == Obs::Pos;
      s += ind(pos, pos_alpha, pos_beta) * std::log(f(n, i)) +
           neg_weight * ind(!pos, neg_alpha, neg_beta) * std::log(1.0 - f(n, i));
    }
    rows.push_back(-s / static_cast<double>(f.cols()));
  }
  return row_mean(rows);
}

inline double an(const MatrixD& f, const spml::ObservedLabels& z) {
  return an_family(f, z, 0, 0, 0, 0, 1.0);
}
inline double wan(const MatrixD& f, const spml::ObservedLabels& z, double gamma) {
  return an_family(f, z, 0, 0, 0, 0, gamma);
}
inline double an_ls(const MatrixD& f, const spml::ObservedLabels& z, double eps) {
  return an_family(f, z, eps / 2, eps / 2, eps / 2, eps / 2, 1.0);
}
inline double an_ls_asym(const MatrixD& f, const spml::ObservedLabels& z, double ep, double en) {
  return an_family(f, z, ep / 2, en / 2, en / 2, ep / 2, 1.0);
}
inline double bce_ls(const MatrixD& f, const spml::FullLabels& y, double eps) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      const bool pos = y(n, i) == 1;
      s += ind(pos, eps / 2, eps / 2) * std::log(f(n, i)) +
           ind(!pos, eps / 2, eps / 2) * std::log(1.0 - f(n, i));
    }
    rows.push_back(-s / static_cast<double>(f.cols()));
  }
  return row_mean(rows);
}

inline double iu(const MatrixD& f, const spml::ObservedLabels& z) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      if (z(n, i) == Obs::Pos) s += std::log(f(n, i));
      if (z(n, i) == Obs::Neg) s += std::log(1.0 - f(n, i));
    }
    rows.push_back(-s / static_cast<double>(f.cols()));
  }
  return row_mean(rows);
}

inline double iun(const MatrixD& f, const spml::ObservedLabels& z, const spml::FullLabels& y) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      if (z(n, i) == Obs::Pos) s += std::log(f(n, i));
      if (y(n, i) == 0) s += std::log(1.0 - f(n, i));
    }
    rows.push_back(-s / static_cast<double>(f.cols()));
  }
  return row_mean(rows);
}

inline double pr(const MatrixD& f, const spml::ObservedLabels& z) {
  std::vector<double> rows;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      for (std::size_t j = 0; j < f.cols(); ++j) {
        if (z(n, i) == Obs::Pos && z(n, j) != Obs::Pos) {
          s += std::max(0.0, 1.0 - f(n, i) + f(n, j));
        }
      }
    }
    rows.push_back(s);
  }
  return row_mean(rows);
}

inline double epr(const MatrixD& f, const spml::ObservedLabels& z, double k, double lambda) {
  std::vector<double> rows;
  double total = 0.0;
  for (std::size_t n = 0; n < f.rows(); ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.cols(); ++i) {
      if (z(n, i) == Obs::Pos) s -= std::log(f(n, i));
      total += f(n, i);
    }
    rows.push_back(s);
  }
  const double k_hat = total / static_cast<double>(f.rows());
  const double dev = (k_hat - k) / static_cast<double>(f.cols());
  return row_mean(rows) + lambda * dev * dev;
}

inline double loss_prime(const MatrixD& f, const MatrixD& t, const spml::ObservedLabels& z,
                         double k, double lambda) {
  return soft_bce(f, t) + epr(f, z, k, lambda);
}

inline double role(const MatrixD& f, const MatrixD& t, const spml::ObservedLabels& z, double k,
                   double lambda) {
  return 0.5 * (loss_prime(f, t, z, k, lambda) + loss_prime(t, f, z, k, lambda));
}

// Central finite-difference gradient of `fn` with respect to every entry of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                            std::vector<double> x, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = fn(x);
    x[i] = keep - h;
    const double down = fn(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||); zero when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline MatrixD reshape(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MatrixD(rows, cols, v);
}

inline std::vector<double> flat(const MatrixD& m) {
  return std::vector<double>(m.values().begin(), m.values().end());
}

// O(n^2) AP: rank of item i counts items scored higher, or tied with a lower index.
inline double brute_force_ap(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  const std::size_t n = s.size();
  auto rank = [&](std::size_t i) {
    std::size_t r = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (s[j] > s[i] || (s[j] == s[i] && j < i)) ++r;
    }
    return r;
  };
  double sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!y[i]) continue;
    ++positives;
    const std::size_t ri = rank(i);
    std::size_t hits = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (y[j] && rank(j) <= ri) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(ri);
  }
  return sum / static_cast<double>(positives);
}

// Exact distribution of the subset mean over all C(N, M) subsets.
inline std::map<double, double> subset_mean_distribution(const std::vector<double>& counts,
                                                         std::size_t m) {
  std::map<double, double> mass;
  const std::size_t n = counts.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(m), true);
  std::size_t total = 0;
  std::vector<bool> perm = pick;
  std::sort(perm.begin(), perm.end());
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (perm[i]) s += counts[i];
    }
    mass[s / static_cast<double>(m)] += 1.0;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (auto& [v, w] : mass) w /= static_cast<double>(total);
  return mass;
}

// Smallest value whose CDF reaches q.
inline double distribution_quantile(const std::map<double, double>& mass, double q) {
  double cdf = 0.0;
  for (const auto& [v, w] : mass) {
    cdf += w;
    if (cdf >= q - 1e-12) return v;
  }
  return mass.rbegin()->first;
}

}  // namespace oracle
