#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tmvi/autodiff.hpp"
#include "tmvi/flow.hpp"
#include "tmvi/models.hpp"
#include "tmvi/rng.hpp"

namespace tmvi {

enum class Family { kTmFlow, kGaussian };

// One mean-field factor q_i(w_i): either a transformation flow or a plain
// Gaussian (the comparison baseline). Only the fields of the active family
// are meaningful.
struct PosteriorEntry {
  Family family = Family::kTmFlow;
  FlowConfig flow_config;
  UnconstrainedFlowParams flow;
  GaussianVariational gaussian;

  std::size_t param_count() const {
    return family == Family::kTmFlow ? flow.size() : 2;
  }
};

// Product q(w) = prod_i q_i(w_i). The packed vector concatenates every
// entry's unconstrained parameters in order; training updates the packed
// form and writes it back through unpack.
struct MeanFieldPosterior {
  std::vector<PosteriorEntry> entries;

  std::size_t dim() const { return entries.size(); }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (const auto& e : entries) {
      total += e.param_count();
    }
    return total;
  }

  std::vector<double> pack() const;
  void unpack(std::span<const double> x);

  static MeanFieldPosterior tm_flow(std::size_t dim, const FlowConfig& cfg);
  static MeanFieldPosterior gaussian(std::size_t dim, double mean, double sd);
};

struct TrainConfig {
  int steps = 3000;
  int samples_per_step = 50;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (steps < 1) {
      throw std::invalid_argument("TrainConfig: steps must be >= 1");
    }
    if (samples_per_step < 1) {
      throw std::invalid_argument("TrainConfig: samples_per_step must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
      throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
      throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) {
      throw std::invalid_argument("TrainConfig: adam_eps must be positive");
    }
  }
};

// Per-step Monte Carlo estimates recorded during training. elbo = ell - kl
// holds exactly at every step because both terms use the same draws.
struct ElboTrace {
  std::vector<int> step;
  std::vector<double> elbo;
  std::vector<double> ell;
  std::vector<double> kl;

  // Mean of the last `window` ELBO estimates (all of them if fewer).
  double smoothed_final(std::size_t window) const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam descent step on `grad` in place.
void adam_update(AdamState& state, std::span<double> params, std::span<const double> grad,
                 const TrainConfig& cfg);

// samples * dim standard-normal base draws, sample-major: the block
// [t * dim, (t + 1) * dim) belongs to Monte Carlo sample t.
std::vector<double> draw_base_samples(Rng& rng, int samples, std::size_t dim);

struct ElboEstimate {
  double elbo = 0.0;
  double ell = 0.0;
  double kl = 0.0;
  std::vector<double> grad;
};

namespace detail {

inline int batch_length(std::span<const FlowSampleBatch> batches) {
  if (batches.empty()) {
    throw std::invalid_argument("need at least one sample batch");
  }
  const std::size_t t = batches.front().w.size();
  for (const auto& b : batches) {
    if (b.w.size() != t || b.log_q.size() != t || b.z.size() != t || t == 0) {
      throw std::invalid_argument("sample batches must share a positive length");
    }
  }
  return static_cast<int>(t);
}

}  // namespace detail

// (1/T) sum_t log_lik(w_t) over joint draws assembled from one batch per
// parameter; log_lik already sums over the dataset.
template <class LogLikFn>
double expected_log_lik(std::span<const FlowSampleBatch> batches, LogLikFn&& log_lik) {
  const int t_count = detail::batch_length(batches);
  std::vector<double> w(batches.size());
  double acc = 0.0;
  for (int t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < batches.size(); ++i) {
      w[i] = batches[i].w[static_cast<std::size_t>(t)];
    }
    acc += log_lik(std::span<const double>(w));
  }
  return acc / double(t_count);
}

// (1/T) sum_t [ sum_i log q_i(w_ti) - log_prior(w_t) ], over the same joint
// draws as expected_log_lik. May be negative for finite T.
template <class LogPriorFn>
double kl_sample_estimate(std::span<const FlowSampleBatch> batches, LogPriorFn&& log_prior) {
  const int t_count = detail::batch_length(batches);
  std::vector<double> w(batches.size());
  double acc = 0.0;
  for (int t = 0; t < t_count; ++t) {
    double log_q = 0.0;
    for (std::size_t i = 0; i < batches.size(); ++i) {
      w[i] = batches[i].w[static_cast<std::size_t>(t)];
      log_q += batches[i].log_q[static_cast<std::size_t>(t)];
    }
    acc += log_q - log_prior(std::span<const double>(w));
  }
  return acc / double(t_count);
}

// Gaussian counterpart of FlowEvaluator: w = mean + softplus(sd_raw) * z.
template <class S>
struct GaussianEvaluator {
  S mean;
  S sd;
  S log_sd;

  GaussianEvaluator(S mean_raw, S sd_raw)
      : mean(mean_raw), sd(softplus(sd_raw)), log_sd(log(sd)) {}

  std::pair<S, S> sample_density(double z) const {
    S w = mean + sd * z;
    return {w, tmvi::norm_logpdf(z) - log_sd};
  }
};

namespace detail {

template <class S>
using EntryEvaluator = std::variant<FlowEvaluator<S>, GaussianEvaluator<S>>;

// Builds one evaluator per entry from the packed parameter scalars.
template <class S>
std::vector<EntryEvaluator<S>> build_evaluators(const MeanFieldPosterior& post,
                                                std::span<const S> packed) {
  std::vector<EntryEvaluator<S>> evals;
  evals.reserve(post.entries.size());
  std::size_t off = 0;
  for (const auto& entry : post.entries) {
    const std::size_t n = entry.param_count();
    const auto slice = packed.subspan(off, n);
    if (entry.family == Family::kTmFlow) {
      evals.emplace_back(std::in_place_type<FlowEvaluator<S>>, entry.flow_config,
                         constrain_packed<S>(slice, entry.flow_config.degree));
    } else {
      evals.emplace_back(std::in_place_type<GaussianEvaluator<S>>, slice[0], slice[1]);
    }
    off += n;
  }
  return evals;
}

}  // namespace detail

// One Monte Carlo ELBO evaluation with pathwise gradients. The target
// supplies log_lik and log_prior over the full latent vector, templated on
// the scalar so the same expressions record onto the tape.
//
// elbo = (1/T) sum_t [ log_lik(w_t) ] - (1/T) sum_t [ sum_i log q_i(w_ti) - log_prior(w_t) ]
template <class Target>
ElboEstimate elbo_step(ad::Tape& tape, const MeanFieldPosterior& post,
                       std::span<const double> packed, const Target& target,
                       std::span<const double> base_z, int samples) {
  const std::size_t dim = post.dim();
  if (dim == 0) {
    throw std::invalid_argument("elbo_step: posterior has no entries");
  }
  if (packed.size() != post.param_count()) {
    throw std::invalid_argument("elbo_step: packed length mismatch");
  }
  if (base_z.size() != static_cast<std::size_t>(samples) * dim) {
    throw std::invalid_argument("elbo_step: base sample count mismatch");
  }

  tape.clear();
  std::vector<ad::Var> vars;
  vars.reserve(packed.size());
  for (double v : packed) {
    vars.push_back(tape.input(v));
  }
  const auto evals = detail::build_evaluators<ad::Var>(post, std::span<const ad::Var>(vars));

  ad::Var ell_sum = tape.constant(0.0);
  ad::Var kl_sum = tape.constant(0.0);
  std::vector<ad::Var> w_t(dim);
  for (int t = 0; t < samples; ++t) {
    ad::Var log_q_t = tape.constant(0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      const double z = base_z[static_cast<std::size_t>(t) * dim + i];
      try {
        auto [w, log_q] = std::visit(
            [&](const auto& ev) { return ev.sample_density(z); }, evals[i]);
        w_t[i] = w;
        log_q_t = log_q_t + log_q;
      } catch (const ad::NonFiniteError& e) {
        throw ad::NonFiniteError(std::string(e.what()) + " (parameter " + std::to_string(i) +
                                     ", sample " + std::to_string(t) + ")",
                                 e.primitive());
      }
    }
    const std::span<const ad::Var> w_span(w_t);
    ell_sum = ell_sum + target.log_lik(w_span);
    kl_sum = kl_sum + (log_q_t - target.log_prior(w_span));
  }

  const double inv_t = 1.0 / double(samples);
  const ad::Var elbo = (ell_sum - kl_sum) * inv_t;
  ElboEstimate est;
  est.ell = ell_sum.val * inv_t;
  est.kl = kl_sum.val * inv_t;
  // Recorded so that elbo == ell - kl holds exactly, not just to rounding.
  est.elbo = est.ell - est.kl;
  est.grad = tape.gradient(elbo, vars);
  for (double g : est.grad) {
    if (!std::isfinite(g)) {
      throw ad::NonFiniteError("gradient");
    }
  }
  return est;
}

// Stochastic-gradient ascent on the ELBO with Adam. Updates `post` in place
// and returns the per-step trace. Fully deterministic for a fixed seed.
template <class Target>
ElboTrace train(MeanFieldPosterior& post, const Target& target, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<double> packed = post.pack();
  AdamState adam(packed.size());
  std::vector<double> descent(packed.size());
  Rng rng(cfg.seed);
  ad::Tape tape;
  ElboTrace trace;
  trace.step.reserve(static_cast<std::size_t>(cfg.steps));
  trace.elbo.reserve(static_cast<std::size_t>(cfg.steps));
  trace.ell.reserve(static_cast<std::size_t>(cfg.steps));
  trace.kl.reserve(static_cast<std::size_t>(cfg.steps));

  for (int s = 0; s < cfg.steps; ++s) {
    const auto base = draw_base_samples(rng, cfg.samples_per_step, post.dim());
    const ElboEstimate est =
        elbo_step(tape, post, packed, target, base, cfg.samples_per_step);
    for (std::size_t i = 0; i < packed.size(); ++i) {
      descent[i] = -est.grad[i];
    }
    adam_update(adam, packed, descent, cfg);
    trace.step.push_back(s);
    trace.elbo.push_back(est.elbo);
    trace.ell.push_back(est.ell);
    trace.kl.push_back(est.kl);
  }
  post.unpack(packed);
  return trace;
}

// Pointwise posterior predictive for the regression net. Each grid point
// uses its own substream, so values do not move when the grid changes.
// Draws are y = mu(x; w) + noise_sd * eps with w sampled from the posterior.
struct PredictiveSummary {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> q05;
  std::vector<double> q25;
  std::vector<double> q75;
  std::vector<double> q95;
};

PredictiveSummary posterior_predictive(const MeanFieldPosterior& post,
                                       const MLPRegressionModel& model,
                                       std::span<const double> xs, int draws,
                                       std::uint64_t seed);

}  // namespace tmvi
