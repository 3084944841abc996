#include "tmvi/flow.hpp"

#include <cmath>
#include <limits>

namespace tmvi {

ConstrainedFlowParams constrain(const UnconstrainedFlowParams& raw) {
  if (raw.theta_raw.empty()) {
    throw std::invalid_argument("constrain: theta_raw must not be empty");
  }
  const auto packed = raw.pack();
  return constrain_packed<double>(packed, static_cast<int>(raw.theta_raw.size()) - 1);
}

UnconstrainedFlowParams init_params(const FlowConfig& cfg) {
  cfg.validate();
  const double increment = (cfg.init_high - cfg.init_low) / double(cfg.degree);
  if (!(increment > 0.0)) {
    throw std::invalid_argument("init_params: init range must have positive width");
  }
  UnconstrainedFlowParams p;
  p.a_raw = inv_softplus(1.0);
  p.b = 0.0;
  p.theta_raw.assign(static_cast<std::size_t>(cfg.degree) + 1, inv_softplus(increment));
  p.theta_raw[0] = cfg.init_low;
  p.alpha_raw = inv_softplus(1.0);
  p.beta = 0.0;
  return p;
}

double bernstein_eval(std::span<const double> theta, double zp) {
  if (theta.size() < 2) {
    throw std::invalid_argument("bernstein_eval: need at least two coefficients");
  }
  if (!(zp >= 0.0 && zp <= 1.0)) {
    throw std::domain_error("bernstein_eval: argument outside [0, 1]");
  }
  const auto binom = binomial_row(static_cast<int>(theta.size()) - 1);
  return bernstein_sum<double, double>(binom, theta, zp);
}

double forward(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double z) {
  return FlowEvaluator<double>(cfg, lam).forward(z);
}

double log_det_jacobian(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double z) {
  return FlowEvaluator<double>(cfg, lam).forward_and_log_det(z).second;
}

DensityPoint density(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double z) {
  const auto [w, log_q] = FlowEvaluator<double>(cfg, lam).sample_density(z);
  return DensityPoint{w, log_q};
}

std::pair<double, double> image_bounds(const ConstrainedFlowParams& lam, const FlowConfig& cfg) {
  double lo = lam.alpha * lam.theta.front() + lam.beta;
  double hi = lam.alpha * lam.theta.back() + lam.beta;
  if (cfg.squash_output) {
    lo = sigmoid(lo);
    hi = sigmoid(hi);
  }
  return {lo, hi};
}

double invert(const ConstrainedFlowParams& lam, const FlowConfig& cfg, double w) {
  const auto [lo, hi] = image_bounds(lam, cfg);
  if (!(w > lo && w < hi)) {
    throw OutOfImageError("invert: value outside the flow image");
  }
  const FlowEvaluator<double> eval(cfg, lam);

  double z_lo = -40.0;
  double z_hi = 40.0;
  auto residual = [&](double z) { return eval.forward(z) - w; };

  // Bracketing bisection; forward is monotone non-decreasing on the whole
  // line (strictly increasing wherever the clamp is inactive).
  for (int iter = 0; iter < 64; ++iter) {
    const double mid = 0.5 * (z_lo + z_hi);
    if (residual(mid) < 0.0) {
      z_lo = mid;
    } else {
      z_hi = mid;
    }
  }
  double z = 0.5 * (z_lo + z_hi);

  // Newton polish, falling back to the bracket midpoint when a step escapes.
  for (int iter = 0; iter < 12; ++iter) {
    const double r = residual(z);
    if (std::fabs(r) < 1e-12) {
      break;
    }
    const double deriv = std::exp(eval.forward_and_log_det(z).second);
    double next = z - r / deriv;
    if (!(next > z_lo && next < z_hi) || !std::isfinite(next)) {
      next = 0.5 * (z_lo + z_hi);
    }
    if (residual(next) < 0.0) {
      z_lo = next;
    } else {
      z_hi = next;
    }
    z = next;
  }
  return z;
}

FlowSampleBatch sample_batch(const ConstrainedFlowParams& lam, const FlowConfig& cfg,
                             int count, Rng& rng) {
  if (count < 1) {
    throw std::invalid_argument("sample_batch: count must be >= 1");
  }
  const FlowEvaluator<double> eval(cfg, lam);
  FlowSampleBatch batch;
  batch.z.reserve(static_cast<std::size_t>(count));
  batch.w.reserve(static_cast<std::size_t>(count));
  batch.log_q.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    const double z = rng.normal();
    const auto [w, log_q] = eval.sample_density(z);
    batch.z.push_back(z);
    batch.w.push_back(w);
    batch.log_q.push_back(log_q);
  }
  return batch;
}

}  // namespace tmvi
