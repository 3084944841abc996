#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmvi/flow.hpp"
#include "tmvi/math_util.hpp"
#include "tmvi/rng.hpp"

namespace tmvi {

// Observations for one experiment. `inputs` stays empty for unconditional
// models (Bernoulli, Cauchy).
struct Dataset {
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t n() const { return targets.size(); }

  void validate() const {
    if (!inputs.empty() && inputs.size() != targets.size()) {
      throw std::invalid_argument("Dataset: inputs/targets length mismatch");
    }
  }
};

struct BernoulliModel {
  double prior_alpha = 1.1;
  double prior_beta = 1.1;

  void validate() const {
    if (!(prior_alpha > 0.0 && prior_beta > 0.0)) {
      throw std::invalid_argument("BernoulliModel: prior parameters must be positive");
    }
  }
};

// y ~ Cauchy(xi, gamma) with fixed scale; the location xi is the inferred
// parameter, with a normal prior.
struct CauchyLocationModel {
  double gamma = 0.5;
  double prior_mean = 0.0;
  double prior_sd = 10.0;

  void validate() const {
    if (!(gamma > 0.0)) {
      throw std::invalid_argument("CauchyLocationModel: gamma must be positive");
    }
    if (!(prior_sd > 0.0)) {
      throw std::invalid_argument("CauchyLocationModel: prior_sd must be positive");
    }
  }
};

enum class Activation { kTanh };

// Fully connected regression net y ~ N(mu(x), noise_sd) with tanh hidden
// layers and a linear output. Weights are packed layer by layer, kernel
// entries row-major (output-neuron major), biases after each kernel.
struct MLPRegressionModel {
  std::vector<int> layer_sizes;
  Activation activation = Activation::kTanh;
  double noise_sd = 0.1;
  double prior_sd_per_weight = 1.0;

  std::size_t weight_count() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
      total += static_cast<std::size_t>(layer_sizes[l] + 1) *
               static_cast<std::size_t>(layer_sizes[l + 1]);
    }
    return total;
  }

  void validate() const {
    if (layer_sizes.size() < 2) {
      throw std::invalid_argument("MLPRegressionModel: need at least input and output layers");
    }
    if (layer_sizes.front() != 1 || layer_sizes.back() != 1) {
      throw std::invalid_argument("MLPRegressionModel: first and last layer size must be 1");
    }
    for (int s : layer_sizes) {
      if (s < 1) {
        throw std::invalid_argument("MLPRegressionModel: layer sizes must be positive");
      }
    }
    if (!(noise_sd > 0.0) || !(prior_sd_per_weight > 0.0)) {
      throw std::invalid_argument("MLPRegressionModel: scales must be positive");
    }
  }
};

// Gaussian variational factor: w = mean + softplus(sd_raw) * z.
struct GaussianVariational {
  double mean_raw = 0.0;
  double sd_raw = 0.5413248546129181;  // softplus^-1(1)

  double mean() const { return mean_raw; }
  double sd() const { return softplus(sd_raw); }
};

// ---- log-likelihoods and priors ------------------------------------------
// Templated on the scalar so the same expressions run under the tape.

template <class S>
S bernoulli_log_lik(const S& pi, const Dataset& data) {
  const double v = ad::scalar_value(pi);
  if (!(v > 0.0 && v < 1.0)) {
    throw std::domain_error("bernoulli_log_lik: pi outside (0, 1)");
  }
  double ones = 0.0;
  for (double y : data.targets) {
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("bernoulli_log_lik: targets must be 0 or 1");
    }
    ones += y;
  }
  const double zeros = double(data.n()) - ones;
  return ones * log(pi) + zeros * log(1.0 - pi);
}

template <class S>
S beta_log_prior(const S& pi, double alpha, double beta) {
  const double v = ad::scalar_value(pi);
  if (!(v > 0.0 && v < 1.0)) {
    throw std::domain_error("beta_log_prior: pi outside (0, 1)");
  }
  if (!(alpha > 0.0 && beta > 0.0)) {
    throw std::invalid_argument("beta_log_prior: shape parameters must be positive");
  }
  return (alpha - 1.0) * log(pi) + (beta - 1.0) * log(1.0 - pi) - log_beta(alpha, beta);
}

template <class S>
S cauchy_log_lik(const S& xi, const CauchyLocationModel& model, const Dataset& data) {
  model.validate();
  if (data.n() == 0) {
    throw std::invalid_argument("cauchy_log_lik: empty dataset");
  }
  const double log_scale = std::log(model.gamma) - std::log(std::numbers::pi);
  const double gamma_sq = model.gamma * model.gamma;
  auto term = [&](double y) {
    const S r = y - xi;
    return log(gamma_sq + r * r);
  };
  S acc = term(data.targets[0]);
  for (std::size_t i = 1; i < data.n(); ++i) {
    acc = acc + term(data.targets[i]);
  }
  return double(data.n()) * log_scale - acc;
}

template <class S>
S mlp_forward(std::span<const S> weights, const MLPRegressionModel& model, double x) {
  if (weights.size() != model.weight_count()) {
    throw std::invalid_argument("mlp_forward: weight vector length mismatch");
  }
  std::vector<S> current;
  current.reserve(8);
  std::size_t off = 0;
  // Input layer has width 1; seed the activations with x itself via the
  // first affine map below.
  std::vector<S> next;
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    const int fan_in = model.layer_sizes[l];
    const int fan_out = model.layer_sizes[l + 1];
    const bool hidden = l + 2 < model.layer_sizes.size();
    next.clear();
    next.reserve(static_cast<std::size_t>(fan_out));
    const std::size_t kernel = off;
    const std::size_t bias = off + static_cast<std::size_t>(fan_in) *
                                       static_cast<std::size_t>(fan_out);
    for (int j = 0; j < fan_out; ++j) {
      S acc = weights[bias + static_cast<std::size_t>(j)];
      for (int k = 0; k < fan_in; ++k) {
        const S& wjk = weights[kernel + static_cast<std::size_t>(j * fan_in + k)];
        if (l == 0) {
          acc = acc + wjk * x;
        } else {
          acc = acc + wjk * current[static_cast<std::size_t>(k)];
        }
      }
      next.push_back(hidden ? tanh(acc) : acc);
    }
    current = next;
    off = bias + static_cast<std::size_t>(fan_out);
  }
  return current[0];
}

template <class S>
S gaussian_log_lik(std::span<const S> weights, const MLPRegressionModel& model,
                   const Dataset& data) {
  data.validate();
  if (data.inputs.size() != data.targets.size() || data.n() == 0) {
    throw std::invalid_argument("gaussian_log_lik: conditional model needs paired inputs");
  }
  const double var = model.noise_sd * model.noise_sd;
  const double log_norm = -0.5 * (kLogTwoPi + 2.0 * std::log(model.noise_sd));
  auto term = [&](std::size_t i) {
    const S mu = mlp_forward(weights, model, data.inputs[i]);
    const S r = data.targets[i] - mu;
    return r * r * (0.5 / var);
  };
  S acc = term(0);
  for (std::size_t i = 1; i < data.n(); ++i) {
    acc = acc + term(i);
  }
  return double(data.n()) * log_norm - acc;
}

// Independent N(0, sd) prior on a single weight.
template <class S>
S normal_log_prior_one(const S& w, double sd) {
  if (!(sd > 0.0)) {
    throw std::invalid_argument("normal_log_prior_one: sd must be positive");
  }
  const double inv_var = 1.0 / (sd * sd);
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * inv_var * w * w;
}

double normal_log_prior(std::span<const double> w, double sd);

// Draws from a Gaussian variational factor in the same batch format the
// flows produce, so it plugs into the identical ELBO machinery.
FlowSampleBatch gaussian_vi_sample_and_logq(const GaussianVariational& params, int count,
                                            Rng& rng);

}  // namespace tmvi
