#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace tmvi {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// softplus(x) = log(1 + e^x), stable for large |x|.
inline double softplus(double x) {
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

// Inverse of softplus; y must be positive.
inline double inv_softplus(double y) {
  if (y <= 0.0) {
    throw std::domain_error("inv_softplus: argument must be positive");
  }
  if (y > 30.0) {
    return y;  // e^y - 1 == e^y to double precision
  }
  return std::log(std::expm1(y));
}

// log of the derivative of the sigmoid, log(s(x)*(1-s(x))), without underflow.
inline double log_sigmoid_deriv(double x) {
  return -x - 2.0 * softplus(-x);
}

inline double norm_logpdf(double x) { return -0.5 * x * x - 0.5 * kLogTwoPi; }

inline double norm_pdf(double x) { return std::exp(norm_logpdf(x)); }

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

inline double pow_int(double x, int n) { return std::pow(x, double(n)); }

// Row C(m, 0..m) of Pascal's triangle. Exact 64-bit integers up to m = 25,
// log-gamma beyond that (C(26,13)*26 is the last product that fits comfortably
// below 2^53 with the multiplicative recurrence).
inline std::vector<double> binomial_row(int m) {
  if (m < 0) {
    throw std::invalid_argument("binomial_row: negative degree");
  }
  std::vector<double> row(static_cast<std::size_t>(m) + 1);
  if (m <= 25) {
    std::uint64_t c = 1;
    for (int i = 0; i <= m; ++i) {
      row[static_cast<std::size_t>(i)] = static_cast<double>(c);
      if (i < m) {
        c = c * static_cast<std::uint64_t>(m - i) / static_cast<std::uint64_t>(i + 1);
      }
    }
  } else {
    const double lg_m1 = std::lgamma(double(m) + 1.0);
    for (int i = 0; i <= m; ++i) {
      row[static_cast<std::size_t>(i)] =
          std::exp(lg_m1 - std::lgamma(double(i) + 1.0) - std::lgamma(double(m - i) + 1.0));
    }
    row[0] = 1.0;
    row[static_cast<std::size_t>(m)] = 1.0;
  }
  return row;
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Trapezoid rule over uniformly spaced samples.
inline double trapezoid(std::span<const double> y, double dx) {
  if (y.size() < 2) {
    return 0.0;
  }
  double acc = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    acc += y[i];
  }
  return acc * dx;
}

// Linear-interpolation empirical quantile (the usual "type 7" rule) on a
// sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) {
    throw std::invalid_argument("quantile_sorted: empty sample");
  }
  if (p <= 0.0) {
    return sorted.front();
  }
  if (p >= 1.0) {
    return sorted.back();
  }
  const double pos = p * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const double frac = pos - double(lo);
  if (lo + 1 >= sorted.size()) {
    return sorted.back();
  }
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) {
    acc += x;
  }
  return xs.empty() ? 0.0 : acc / double(xs.size());
}

inline double stddev_of(std::span<const double> xs) {
  if (xs.size() < 2) {
    return 0.0;
  }
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) {
    acc += (x - m) * (x - m);
  }
  return std::sqrt(acc / double(xs.size() - 1));
}

}  // namespace tmvi
