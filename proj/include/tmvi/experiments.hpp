#pragma once

#include <string>
#include <vector>

#include "tmvi/io.hpp"
#include "tmvi/models.hpp"
#include "tmvi/oracles.hpp"
#include "tmvi/vi.hpp"

namespace tmvi {

// Bernoulli draws outside (0, 1) (possible for the Gaussian family, and for
// squashed flows saturating at the clamp) are pulled back inside before the
// likelihood and prior, keeping the objective finite everywhere.
inline constexpr double kPiClampEps = 1e-7;

// Clamping alone would leave the target flat outside the unit interval and
// an unconstrained family could then grow its entropy without bound, so the
// prior falls off quadratically in the clamped distance. Zero on (0, 1):
// squashed flows never feel it.
inline constexpr double kPiBarrier = 10000.0;

// All fixed constants of the three experiments, mirrored by the checked-in
// defaults file so every choice is visible and versioned.
struct ExperimentConstants {
  std::vector<double> bernoulli_targets;
  double bernoulli_prior_alpha = 1.1;
  double bernoulli_prior_beta = 1.1;
  double bernoulli_grid_lo = 1e-4;
  double bernoulli_grid_hi = 1.0 - 1e-4;
  std::size_t bernoulli_grid_points = 4001;

  double cauchy_gamma = 0.5;
  double cauchy_prior_mean = 0.0;
  double cauchy_prior_sd = 10.0;
  std::vector<double> cauchy_targets;
  double cauchy_grid_lo = -8.0;
  double cauchy_grid_hi = 8.0;
  std::size_t cauchy_grid_points = 4001;

  double nn_noise_sd = 0.1;
  double nn_prior_sd = 1.0;
  std::vector<double> nn_inputs;
  std::vector<double> nn_targets;
  double nn_predictive_lo = -3.0;
  double nn_predictive_hi = 3.0;
  std::size_t nn_predictive_points = 201;
  int nn_predictive_draws = 2000;

  static ExperimentConstants builtin();
  static ExperimentConstants from_kv(const KvPairs& kv);
  KvPairs to_kv() const;
  void validate() const;
};

// ---- ELBO targets ---------------------------------------------------------
// log_lik and log_prior are templated on the scalar so the identical
// expressions run both as plain doubles and on the gradient tape.

struct BernoulliTarget {
  BernoulliModel model;
  Dataset data;

  template <class S>
  S log_lik(std::span<const S> w) const {
    const S pi = clamp(w[0], kPiClampEps, 1.0 - kPiClampEps);
    return bernoulli_log_lik(pi, data);
  }

  template <class S>
  S log_prior(std::span<const S> w) const {
    const S pi = clamp(w[0], kPiClampEps, 1.0 - kPiClampEps);
    const S excess = w[0] - pi;
    return beta_log_prior(pi, model.prior_alpha, model.prior_beta) -
           kPiBarrier * excess * excess;
  }
};

struct CauchyTarget {
  CauchyLocationModel model;
  Dataset data;

  template <class S>
  S log_lik(std::span<const S> w) const {
    return cauchy_log_lik(w[0], model, data);
  }

  template <class S>
  S log_prior(std::span<const S> w) const {
    return normal_log_prior_one(w[0] - model.prior_mean, model.prior_sd);
  }
};

struct NnTarget {
  MLPRegressionModel model;
  Dataset data;

  template <class S>
  S log_lik(std::span<const S> w) const {
    return gaussian_log_lik(w, model, data);
  }

  template <class S>
  S log_prior(std::span<const S> w) const {
    S acc = normal_log_prior_one(w[0], model.prior_sd_per_weight);
    for (std::size_t i = 1; i < w.size(); ++i) {
      acc = acc + normal_log_prior_one(w[i], model.prior_sd_per_weight);
    }
    return acc;
  }
};

MLPRegressionModel make_mlp_model(const std::string& arch, const ExperimentConstants& c);

// ---- artifact emission ----------------------------------------------------

void write_density_csv(const std::string& path, const DensityGrid& g);
void write_trace_csv(const std::string& path, const ElboTrace& trace);
void write_predictive_csv(const std::string& path, const PredictiveSummary& p);
void write_points_csv(const std::string& path, const Dataset& data);

// Every run writes its artifacts under out_dir plus a key-value record
// ("record.txt") holding the full config, seed, summary statistics, final
// variational parameters, and per-artifact checksums. Records reference
// artifacts by file name only, so two runs with identical options are
// byte-identical even in different directories.
struct RunRecord {
  KvPairs fields;
  std::vector<std::string> artifact_paths;
};

RunRecord run_bernoulli(int degree, Family family, const TrainConfig& train,
                        const ExperimentConstants& constants, const std::string& out_dir);

// Trains both families and the MCMC reference on the shared grid.
RunRecord run_cauchy(int degree, const TrainConfig& train,
                     const ExperimentConstants& constants, const std::string& out_dir);

RunRecord run_nn(const std::string& arch, Family family, int degree, const TrainConfig& train,
                 const ExperimentConstants& constants, const std::string& out_dir);

// Full command-line surface; returns the process exit code (0 success,
// 2 invalid usage, 1 numeric or I/O failure).
int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace tmvi
