#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tmvi/autodiff.hpp"
#include "tmvi/math_util.hpp"
#include "tmvi/rng.hpp"

namespace tmvi {

// Make the std elementary functions visible next to the ad:: overloads so the
// templated flow code works for both double and ad::Var scalars.
using std::exp;
using std::log;
using std::tanh;

// The sigmoid feeding the Bernstein polynomial is clamped to keep Beta basis
// terms and log-Jacobians finite far out in the base-distribution tails.
inline constexpr double kSigmoidClampEps = 1e-7;

// Shape of one transformation flow h = f3 . f2 . sigmoid . f1 applied to a
// standard-normal base draw. f2 is a monotone Bernstein polynomial of the
// given degree; squash_output appends a final sigmoid so the image is a
// subset of (0, 1).
struct FlowConfig {
  int degree = 10;
  bool squash_output = false;
  double init_low = -3.0;
  double init_high = 3.0;

  void validate() const {
    if (degree < 1) {
      throw std::invalid_argument("FlowConfig: degree must be >= 1");
    }
    if (!(init_low < init_high)) {
      throw std::invalid_argument("FlowConfig: init_low must be below init_high");
    }
  }
};

// The M+5 unrestricted variational parameters of one flow:
// (a', b, theta'_0..theta'_M, alpha', beta).
struct UnconstrainedFlowParams {
  double a_raw = 0.0;
  double b = 0.0;
  std::vector<double> theta_raw;
  double alpha_raw = 0.0;
  double beta = 0.0;

  std::size_t size() const { return theta_raw.size() + 4; }

  std::vector<double> pack() const {
    std::vector<double> out;
    out.reserve(size());
    out.push_back(a_raw);
    out.push_back(b);
    out.insert(out.end(), theta_raw.begin(), theta_raw.end());
    out.push_back(alpha_raw);
    out.push_back(beta);
    return out;
  }

  static UnconstrainedFlowParams unpack(std::span<const double> x, int degree) {
    if (x.size() != static_cast<std::size_t>(degree) + 5) {
      throw std::invalid_argument("UnconstrainedFlowParams: packed length mismatch");
    }
    UnconstrainedFlowParams p;
    p.a_raw = x[0];
    p.b = x[1];
    p.theta_raw.assign(x.begin() + 2, x.begin() + 2 + degree + 1);
    p.alpha_raw = x[x.size() - 2];
    p.beta = x[x.size() - 1];
    return p;
  }
};

// Constrained form: positive slopes a, alpha and strictly increasing theta.
template <class S>
struct ConstrainedFlowParamsT {
  S a{};
  S b{};
  std::vector<S> theta;
  S alpha{};
  S beta{};
};
using ConstrainedFlowParams = ConstrainedFlowParamsT<double>;

// T base draws pushed through one flow, with the log-density of each draw.
struct FlowSampleBatch {
  std::vector<double> z;
  std::vector<double> w;
  std::vector<double> log_q;
};

// Plain Bernstein form: sum_i binom[i] * z^i * (1-z)^(m-i) * coeffs[i].
// Expanding the Beta densities cancels the 1/(M+1) weight, and evaluating the
// monomials directly makes the endpoints exact (0^0 = 1, no log-gamma).
template <class S, class C>
S bernstein_sum(std::span<const double> binom, std::span<const C> coeffs, const S& zp) {
  const int m = static_cast<int>(coeffs.size()) - 1;
  const S one_minus = 1.0 - zp;
  S acc = pow_int(one_minus, m) * coeffs[0];
  for (int i = 1; i <= m; ++i) {
    acc = acc + binom[static_cast<std::size_t>(i)] * pow_int(zp, i) *
                    pow_int(one_minus, m - i) * coeffs[static_cast<std::size_t>(i)];
  }
  return acc;
}

// Applies softplus to the slope parameters and accumulates theta increments.
// Layout of `raw` matches UnconstrainedFlowParams::pack.
template <class S>
ConstrainedFlowParamsT<S> constrain_packed(std::span<const S> raw, int degree) {
  ConstrainedFlowParamsT<S> out;
  out.a = softplus(raw[0]);
  out.b = raw[1];
  out.theta.reserve(static_cast<std::size_t>(degree) + 1);
  out.theta.push_back(raw[2]);
  for (int i = 1; i <= degree; ++i) {
    out.theta.push_back(out.theta.back() + softplus(raw[2 + static_cast<std::size_t>(i)]));
  }
  out.alpha = softplus(raw[raw.size() - 2]);
  out.beta = raw[raw.size() - 1];
  return out;
}

ConstrainedFlowParams constrain(const UnconstrainedFlowParams& raw);

// Initial parameters whose constrained theta spans exactly
// [cfg.init_low, cfg.init_high] with equal increments, for any degree, and
// whose affine stages start as the identity (a = alpha = 1, b = beta = 0).
UnconstrainedFlowParams init_params(const FlowConfig& cfg);

double bernstein_eval(std::span<const double> theta, double zp);

// Caches everything that depends only on the parameters (constrained values,
// binomial rows, derivative coefficients, logs of the slopes) so per-draw
// evaluation touches only the z-dependent part of the chain.
template <class S>
class FlowEvaluator {
 public:
  FlowEvaluator(const FlowConfig& cfg, ConstrainedFlowParamsT<S> params)
      : cfg_(cfg),
        p_(std::move(params)),
        binom_(binomial_row(cfg.degree)),
        binom_deriv_(binomial_row(cfg.degree - 1)) {
    cfg_.validate();
    log_a_ = log(p_.a);
    log_alpha_ = log(p_.alpha);
    // Derivative of the degree-M Bernstein polynomial, written in the
    // degree-(M-1) basis with coefficients M * (theta_{i+1} - theta_i).
    deriv_coeffs_.reserve(static_cast<std::size_t>(cfg_.degree));
    for (int i = 0; i < cfg_.degree; ++i) {
      deriv_coeffs_.push_back(double(cfg_.degree) *
                              (p_.theta[static_cast<std::size_t>(i) + 1] -
                               p_.theta[static_cast<std::size_t>(i)]));
    }
  }

  const ConstrainedFlowParamsT<S>& params() const { return p_; }
  const FlowConfig& config() const { return cfg_; }

  S forward(double z) const {
    S y = p_.a * z + p_.b;
    S zp = clamp(sigmoid(y), kSigmoidClampEps, 1.0 - kSigmoidClampEps);
    S w = p_.alpha * bernstein_sum(std::span<const double>(binom_),
                                   std::span<const S>(p_.theta), zp) +
          p_.beta;
    if (cfg_.squash_output) {
      w = sigmoid(w);
    }
    return w;
  }

  // w = h(z) together with log |dh/dz|, sharing the inner sigmoid.
  std::pair<S, S> forward_and_log_det(double z) const {
    S y = p_.a * z + p_.b;
    S zp = clamp(sigmoid(y), kSigmoidClampEps, 1.0 - kSigmoidClampEps);
    S f2 = bernstein_sum(std::span<const double>(binom_), std::span<const S>(p_.theta), zp);
    S w = p_.alpha * f2 + p_.beta;
    S log_det = log_a_ + log_sigmoid_deriv(y) +
                log(bernstein_sum(std::span<const double>(binom_deriv_),
                                  std::span<const S>(deriv_coeffs_), zp)) +
                log_alpha_;
    if (cfg_.squash_output) {
      log_det = log_det + log_sigmoid_deriv(w);
      w = sigmoid(w);
    }
    return {w, log_det};
  }

  // (w, log q(w)) via the change of variables against the standard normal base.
  std::pair<S, S> sample_density(double z) const {
    auto [w, log_det] = forward_and_log_det(z);
    return {w, tmvi::norm_logpdf(z) - log_det};
  }

 private:
  FlowConfig cfg_;
  ConstrainedFlowParamsT<S> p_;
  std::vector<double> binom_;
  std::vector<double> binom_deriv_;
  std::vector<S> deriv_coeffs_;
  S log_a_{};
  S log_alpha_{};
};

double forward(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double z);
double log_det_jacobian(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double z);

struct DensityPoint {
  double w = 0.0;
  double log_q = 0.0;
};
DensityPoint density(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double z);

// (lower, upper) bounds of the open image interval of the flow.
std::pair<double, double> image_bounds(const ConstrainedFlowParams& lam, const FlowConfig& cfg);

class OutOfImageError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Numerical inverse of `forward` by bisection on [-40, 40] with Newton
// refinement; diagnostics only, never on the training path.
double invert(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double w);

FlowSampleBatch sample_batch(const ConstrainedFlowParams& lam, const FlowConfig& cfg,
                             int count, Rng& rng);

}  // namespace tmvi
