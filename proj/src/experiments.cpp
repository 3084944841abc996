#include "tmvi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace tmvi {

ExperimentConstants ExperimentConstants::builtin() {
  ExperimentConstants c;
  c.bernoulli_targets = {1.0, 1.0};
  // Six draws from the equal mixture 0.5 Cauchy(-2.5, 0.5) + 0.5 Cauchy(2.5, 0.5),
  // committed as literals so the bimodal posterior is reproducible byte for byte.
  c.cauchy_targets = {2.760067616732266,   -2.5555852874162697, -2.4283749136392099,
                      2.4112315037097996,  2.2809926956338105,  -2.4924813720391334};
  // 16 noisy sinus points, 8 per cluster on [-2, -0.5] and [0.5, 2]:
  // y = sin(2x) + N(0, 0.1^2), committed as literals.
  c.nn_inputs = {-2.0,
                 -1.7857142857142858,
                 -1.5714285714285714,
                 -1.3571428571428572,
                 -1.1428571428571428,
                 -0.9285714285714286,
                 -0.71428571428571419,
                 -0.5,
                 0.5,
                 0.7142857142857143,
                 0.9285714285714286,
                 1.1428571428571428,
                 1.3571428571428572,
                 1.5714285714285714,
                 1.7857142857142858,
                 2.0};
  c.nn_targets = {0.82810547869668627,
                  0.39320729187495201,
                  0.16232012034440224,
                  -0.54442915616252796,
                  -0.56904062746727879,
                  -0.89215668974120699,
                  -0.94076147946963573,
                  -0.87684035742325972,
                  0.80846172737944511,
                  0.82843581803164557,
                  0.89769942364653488,
                  0.71261954700849961,
                  0.36558312989602704,
                  0.12549818499467302,
                  -0.43689799889513115,
                  -0.69964197767692804};
  return c;
}

void ExperimentConstants::validate() const {
  if (bernoulli_targets.empty()) {
    throw std::invalid_argument("constants: bernoulli targets empty");
  }
  for (double y : bernoulli_targets) {
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("constants: bernoulli targets must be 0 or 1");
    }
  }
  if (!(bernoulli_prior_alpha > 0.0 && bernoulli_prior_beta > 0.0)) {
    throw std::invalid_argument("constants: bernoulli prior must be positive");
  }
  if (!(bernoulli_grid_lo > 0.0 && bernoulli_grid_hi < 1.0 &&
        bernoulli_grid_lo < bernoulli_grid_hi)) {
    throw std::invalid_argument("constants: bernoulli grid must lie inside (0, 1)");
  }
  if (!(cauchy_gamma > 0.0) || !(cauchy_prior_sd > 0.0)) {
    throw std::invalid_argument("constants: cauchy scales must be positive");
  }
  if (cauchy_targets.size() != 6) {
    throw std::invalid_argument("constants: expected six cauchy observations");
  }
  if (!(cauchy_grid_lo < cauchy_grid_hi)) {
    throw std::invalid_argument("constants: cauchy grid malformed");
  }
  if (!(nn_noise_sd > 0.0) || !(nn_prior_sd > 0.0)) {
    throw std::invalid_argument("constants: nn scales must be positive");
  }
  if (nn_inputs.size() != nn_targets.size() || nn_inputs.empty()) {
    throw std::invalid_argument("constants: nn inputs/targets must pair up");
  }
  if (!(nn_predictive_lo < nn_predictive_hi)) {
    throw std::invalid_argument("constants: nn predictive range malformed");
  }
  if (bernoulli_grid_points < 2 || cauchy_grid_points < 2 || nn_predictive_points < 2) {
    throw std::invalid_argument("constants: grids need at least two points");
  }
  if (nn_predictive_draws < 2) {
    throw std::invalid_argument("constants: nn predictive draws must be >= 2");
  }
}

namespace {

std::string join_doubles(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    out += format_double(xs[i]);
  }
  return out;
}

std::size_t kv_count(const KvPairs& kv, const std::string& key) {
  const double v = kv_double(kv, key);
  if (!(v >= 2.0) || v != std::floor(v) || v > 1e7) {
    throw std::invalid_argument("config key '" + key + "' must be an integer >= 2");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

KvPairs ExperimentConstants::to_kv() const {
  KvPairs kv;
  kv.emplace_back("bernoulli.targets", join_doubles(bernoulli_targets));
  kv.emplace_back("bernoulli.prior_alpha", format_double(bernoulli_prior_alpha));
  kv.emplace_back("bernoulli.prior_beta", format_double(bernoulli_prior_beta));
  kv.emplace_back("bernoulli.grid_lo", format_double(bernoulli_grid_lo));
  kv.emplace_back("bernoulli.grid_hi", format_double(bernoulli_grid_hi));
  kv.emplace_back("bernoulli.grid_points", std::to_string(bernoulli_grid_points));
  kv.emplace_back("cauchy.gamma", format_double(cauchy_gamma));
  kv.emplace_back("cauchy.prior_mean", format_double(cauchy_prior_mean));
  kv.emplace_back("cauchy.prior_sd", format_double(cauchy_prior_sd));
  kv.emplace_back("cauchy.targets", join_doubles(cauchy_targets));
  kv.emplace_back("cauchy.grid_lo", format_double(cauchy_grid_lo));
  kv.emplace_back("cauchy.grid_hi", format_double(cauchy_grid_hi));
  kv.emplace_back("cauchy.grid_points", std::to_string(cauchy_grid_points));
  kv.emplace_back("nn.noise_sd", format_double(nn_noise_sd));
  kv.emplace_back("nn.prior_sd", format_double(nn_prior_sd));
  kv.emplace_back("nn.inputs", join_doubles(nn_inputs));
  kv.emplace_back("nn.targets", join_doubles(nn_targets));
  kv.emplace_back("nn.predictive_lo", format_double(nn_predictive_lo));
  kv.emplace_back("nn.predictive_hi", format_double(nn_predictive_hi));
  kv.emplace_back("nn.predictive_points", std::to_string(nn_predictive_points));
  kv.emplace_back("nn.predictive_draws", std::to_string(nn_predictive_draws));
  return kv;
}

ExperimentConstants ExperimentConstants::from_kv(const KvPairs& kv) {
  ExperimentConstants c;
  c.bernoulli_targets = kv_double_list(kv, "bernoulli.targets");
  c.bernoulli_prior_alpha = kv_double(kv, "bernoulli.prior_alpha");
  c.bernoulli_prior_beta = kv_double(kv, "bernoulli.prior_beta");
  c.bernoulli_grid_lo = kv_double(kv, "bernoulli.grid_lo");
  c.bernoulli_grid_hi = kv_double(kv, "bernoulli.grid_hi");
  c.bernoulli_grid_points = kv_count(kv, "bernoulli.grid_points");
  c.cauchy_gamma = kv_double(kv, "cauchy.gamma");
  c.cauchy_prior_mean = kv_double(kv, "cauchy.prior_mean");
  c.cauchy_prior_sd = kv_double(kv, "cauchy.prior_sd");
  c.cauchy_targets = kv_double_list(kv, "cauchy.targets");
  c.cauchy_grid_lo = kv_double(kv, "cauchy.grid_lo");
  c.cauchy_grid_hi = kv_double(kv, "cauchy.grid_hi");
  c.cauchy_grid_points = kv_count(kv, "cauchy.grid_points");
  c.nn_noise_sd = kv_double(kv, "nn.noise_sd");
  c.nn_prior_sd = kv_double(kv, "nn.prior_sd");
  c.nn_inputs = kv_double_list(kv, "nn.inputs");
  c.nn_targets = kv_double_list(kv, "nn.targets");
  c.nn_predictive_lo = kv_double(kv, "nn.predictive_lo");
  c.nn_predictive_hi = kv_double(kv, "nn.predictive_hi");
  c.nn_predictive_points = kv_count(kv, "nn.predictive_points");
  c.nn_predictive_draws = static_cast<int>(kv_count(kv, "nn.predictive_draws"));
  c.validate();
  return c;
}

MLPRegressionModel make_mlp_model(const std::string& arch, const ExperimentConstants& c) {
  MLPRegressionModel model;
  if (arch == "small") {
    model.layer_sizes = {1, 3, 1};
  } else if (arch == "large") {
    model.layer_sizes = {1, 10, 10, 1};
  } else {
    throw std::invalid_argument("arch must be 'small' or 'large'");
  }
  model.activation = Activation::kTanh;
  model.noise_sd = c.nn_noise_sd;
  model.prior_sd_per_weight = c.nn_prior_sd;
  model.validate();
  return model;
}

// ---- artifact emission ----------------------------------------------------

void write_density_csv(const std::string& path, const DensityGrid& g) {
  g.validate();
  std::string out = "grid,density\n";
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    out += format_double_csv(g.grid[i]);
    out += ',';
    out += format_double_csv(g.density[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_trace_csv(const std::string& path, const ElboTrace& trace) {
  std::string out = "step,elbo,ell,kl\n";
  for (std::size_t i = 0; i < trace.step.size(); ++i) {
    out += std::to_string(trace.step[i]);
    out += ',';
    out += format_double_csv(trace.elbo[i]);
    out += ',';
    out += format_double_csv(trace.ell[i]);
    out += ',';
    out += format_double_csv(trace.kl[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_predictive_csv(const std::string& path, const PredictiveSummary& p) {
  std::string out = "x,mean,q05,q25,q75,q95\n";
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    out += format_double_csv(p.x[i]);
    out += ',';
    out += format_double_csv(p.mean[i]);
    out += ',';
    out += format_double_csv(p.q05[i]);
    out += ',';
    out += format_double_csv(p.q25[i]);
    out += ',';
    out += format_double_csv(p.q75[i]);
    out += ',';
    out += format_double_csv(p.q95[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

void write_points_csv(const std::string& path, const Dataset& data) {
  data.validate();
  std::string out = "x,y\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    out += format_double_csv(data.inputs[i]);
    out += ',';
    out += format_double_csv(data.targets[i]);
    out += '\n';
  }
  write_text_file(path, out);
}

namespace {

constexpr std::uint64_t kMcmcStream = 101;
constexpr std::uint64_t kPredictiveStream = 201;
constexpr std::uint64_t kRmseStream = 202;

const char* family_name(Family family) {
  return family == Family::kTmFlow ? "tm" : "gaussian";
}

void add_header(KvPairs& kv, const char* experiment, const TrainConfig& cfg) {
  kv.emplace_back("record_format", "1");
  kv.emplace_back("tool", "tmvi 0.1.0");
  kv.emplace_back("experiment", experiment);
  kv.emplace_back("seed", std::to_string(cfg.seed));
  kv.emplace_back("steps", std::to_string(cfg.steps));
  kv.emplace_back("samples_per_step", std::to_string(cfg.samples_per_step));
  kv.emplace_back("learning_rate", format_double(cfg.learning_rate));
  kv.emplace_back("adam_beta1", format_double(cfg.adam_beta1));
  kv.emplace_back("adam_beta2", format_double(cfg.adam_beta2));
  kv.emplace_back("adam_eps", format_double(cfg.adam_eps));
}

void add_constants(KvPairs& kv, const ExperimentConstants& c) {
  for (auto& [key, value] : c.to_kv()) {
    kv.emplace_back("constants." + key, value);
  }
}

// Writes record.txt last so it can carry every artifact's checksum; paths in
// the record are file names only, keeping records byte-identical across
// output directories.
RunRecord finish_record(KvPairs fields, const std::string& out_dir,
                        const std::vector<std::string>& artifact_names) {
  RunRecord rec;
  for (std::size_t i = 0; i < artifact_names.size(); ++i) {
    const std::string full = (fs::path(out_dir) / artifact_names[i]).string();
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(file_checksum(full)));
    const std::string prefix = "artifact." + std::to_string(i);
    fields.emplace_back(prefix + ".file", artifact_names[i]);
    fields.emplace_back(prefix + ".fnv1a64", hex);
    rec.artifact_paths.push_back(full);
  }
  const std::string record_path = (fs::path(out_dir) / "record.txt").string();
  write_text_file(record_path, serialize_kv(fields));
  rec.fields = std::move(fields);
  rec.artifact_paths.push_back(record_path);
  return rec;
}

DensityGrid posterior_density_1d(const MeanFieldPosterior& post,
                                 std::span<const double> grid) {
  const PosteriorEntry& e = post.entries.at(0);
  if (e.family == Family::kTmFlow) {
    return flow_density_grid(constrain(e.flow), e.flow_config, grid);
  }
  return gaussian_density_grid(e.gaussian.mean(), e.gaussian.sd(), grid);
}

}  // namespace

RunRecord run_bernoulli(int degree, Family family, const TrainConfig& train_cfg,
                        const ExperimentConstants& constants, const std::string& out_dir) {
  constants.validate();
  train_cfg.validate();
  fs::create_directories(out_dir);

  Dataset data;
  data.targets = constants.bernoulli_targets;
  const BernoulliModel model{constants.bernoulli_prior_alpha, constants.bernoulli_prior_beta};
  model.validate();
  const BernoulliTarget target{model, data};

  // The flow output is squashed so its image lies inside (0, 1); the
  // Gaussian baseline starts centred in the unit interval.
  FlowConfig fcfg;
  fcfg.degree = degree;
  fcfg.squash_output = true;
  MeanFieldPosterior post = (family == Family::kTmFlow)
                                ? MeanFieldPosterior::tm_flow(1, fcfg)
                                : MeanFieldPosterior::gaussian(1, 0.5, 0.25);
  const ElboTrace trace = train(post, target, train_cfg);

  const auto grid = make_linspace(constants.bernoulli_grid_lo, constants.bernoulli_grid_hi,
                                  constants.bernoulli_grid_points);
  const DensityGrid q = posterior_density_1d(post, grid);
  const auto [post_alpha, post_beta] =
      conjugate_beta_posterior(model.prior_alpha, model.prior_beta, data);
  const DensityGrid oracle = beta_density_grid(post_alpha, post_beta, grid);
  const double kl = quadrature_kl(q, oracle);
  const double tail_mass = 1.0 - trapezoid(q.density, q.spacing());

  const std::string density_name = std::string("density_") + family_name(family) + ".csv";
  write_density_csv((fs::path(out_dir) / density_name).string(), q);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), trace);

  KvPairs kv;
  add_header(kv, "bernoulli", train_cfg);
  kv.emplace_back("family", family_name(family));
  kv.emplace_back("degree", std::to_string(degree));
  add_constants(kv, constants);
  kv.emplace_back("posterior_alpha", format_double(post_alpha));
  kv.emplace_back("posterior_beta", format_double(post_beta));
  kv.emplace_back("final_elbo", format_double(trace.smoothed_final(100)));
  kv.emplace_back("final_elbo_last", format_double(trace.elbo.back()));
  kv.emplace_back("kl_to_oracle", format_double(kl));
  kv.emplace_back("tail_mass", format_double(tail_mass));
  kv.emplace_back("final_params", join_doubles(post.pack()));
  return finish_record(std::move(kv), out_dir, {density_name, "trace.csv"});
}

RunRecord run_cauchy(int degree, const TrainConfig& train_cfg,
                     const ExperimentConstants& constants, const std::string& out_dir) {
  constants.validate();
  train_cfg.validate();
  fs::create_directories(out_dir);

  Dataset data;
  data.targets = constants.cauchy_targets;
  CauchyLocationModel model;
  model.gamma = constants.cauchy_gamma;
  model.prior_mean = constants.cauchy_prior_mean;
  model.prior_sd = constants.cauchy_prior_sd;
  model.validate();
  const CauchyTarget target{model, data};

  // MCMC reference on its own derived stream.
  MetropolisConfig mcfg;
  mcfg.seed = Rng::derive_seed(train_cfg.seed, kMcmcStream);
  const auto log_post = [&](double xi) {
    const std::span<const double> w(&xi, 1);
    return target.log_lik(w) + target.log_prior(w);
  };
  const McmcChain chain = metropolis(log_post, mcfg);

  const auto grid =
      make_linspace(constants.cauchy_grid_lo, constants.cauchy_grid_hi, constants.cauchy_grid_points);
  const DensityGrid mcmc_density = histogram_density(chain.samples, grid);

  FlowConfig fcfg;
  fcfg.degree = degree;
  MeanFieldPosterior tm_post = MeanFieldPosterior::tm_flow(1, fcfg);
  const ElboTrace tm_trace = train(tm_post, target, train_cfg);
  const DensityGrid tm_density = posterior_density_1d(tm_post, grid);

  MeanFieldPosterior gauss_post = MeanFieldPosterior::gaussian(1, 0.0, 1.0);
  const ElboTrace gauss_trace = train(gauss_post, target, train_cfg);
  const DensityGrid gauss_density = posterior_density_1d(gauss_post, grid);

  const double prominence = 0.1;
  const auto tm_modes = count_modes(tm_density, prominence);
  const auto gauss_modes = count_modes(gauss_density, prominence);
  const double tv_tm = total_variation(tm_density, mcmc_density);
  const double tv_gauss = total_variation(gauss_density, mcmc_density);

  write_density_csv((fs::path(out_dir) / "density_tm.csv").string(), tm_density);
  write_density_csv((fs::path(out_dir) / "density_gaussian.csv").string(), gauss_density);
  write_density_csv((fs::path(out_dir) / "density_mcmc.csv").string(), mcmc_density);
  write_trace_csv((fs::path(out_dir) / "trace_tm.csv").string(), tm_trace);
  write_trace_csv((fs::path(out_dir) / "trace_gaussian.csv").string(), gauss_trace);

  KvPairs kv;
  add_header(kv, "cauchy", train_cfg);
  kv.emplace_back("degree", std::to_string(degree));
  add_constants(kv, constants);
  kv.emplace_back("mcmc.steps", std::to_string(mcfg.steps));
  kv.emplace_back("mcmc.burn_in", std::to_string(mcfg.burn_in));
  kv.emplace_back("mcmc.thin", std::to_string(mcfg.thin));
  kv.emplace_back("mcmc.proposal_sd", format_double(mcfg.proposal_sd));
  kv.emplace_back("mcmc.acceptance_rate", format_double(chain.acceptance_rate));
  kv.emplace_back("mcmc.kept_samples", std::to_string(chain.samples.size()));
  kv.emplace_back("mode_prominence", format_double(prominence));
  kv.emplace_back("tm.final_elbo", format_double(tm_trace.smoothed_final(100)));
  kv.emplace_back("tm.mode_count", std::to_string(tm_modes.size()));
  kv.emplace_back("tm.modes", join_doubles(tm_modes));
  kv.emplace_back("tm.tv_to_mcmc", format_double(tv_tm));
  kv.emplace_back("tm.tail_mass", format_double(1.0 - trapezoid(tm_density.density,
                                                                tm_density.spacing())));
  kv.emplace_back("tm.final_params", join_doubles(tm_post.pack()));
  kv.emplace_back("gaussian.final_elbo", format_double(gauss_trace.smoothed_final(100)));
  kv.emplace_back("gaussian.mode_count", std::to_string(gauss_modes.size()));
  kv.emplace_back("gaussian.modes", join_doubles(gauss_modes));
  kv.emplace_back("gaussian.tv_to_mcmc", format_double(tv_gauss));
  kv.emplace_back("gaussian.final_params", join_doubles(gauss_post.pack()));
  return finish_record(std::move(kv), out_dir,
                       {"density_tm.csv", "density_gaussian.csv", "density_mcmc.csv",
                        "trace_tm.csv", "trace_gaussian.csv"});
}

RunRecord run_nn(const std::string& arch, Family family, int degree,
                 const TrainConfig& train_cfg, const ExperimentConstants& constants,
                 const std::string& out_dir) {
  constants.validate();
  train_cfg.validate();
  fs::create_directories(out_dir);

  const MLPRegressionModel model = make_mlp_model(arch, constants);
  Dataset data;
  data.inputs = constants.nn_inputs;
  data.targets = constants.nn_targets;
  data.validate();
  const NnTarget target{model, data};

  FlowConfig fcfg;
  fcfg.degree = degree;
  const std::size_t dim = model.weight_count();
  MeanFieldPosterior post = (family == Family::kTmFlow)
                                ? MeanFieldPosterior::tm_flow(dim, fcfg)
                                : MeanFieldPosterior::gaussian(dim, 0.0, 1.0);
  const ElboTrace trace = train(post, target, train_cfg);

  const auto xs = make_linspace(constants.nn_predictive_lo, constants.nn_predictive_hi,
                                constants.nn_predictive_points);
  const PredictiveSummary pred =
      posterior_predictive(post, model, xs, constants.nn_predictive_draws,
                           Rng::derive_seed(train_cfg.seed, kPredictiveStream));
  const PredictiveSummary at_train =
      posterior_predictive(post, model, data.inputs, constants.nn_predictive_draws,
                           Rng::derive_seed(train_cfg.seed, kRmseStream));
  double sq = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double r = at_train.mean[i] - data.targets[i];
    sq += r * r;
  }
  const double rmse_train = std::sqrt(sq / double(data.n()));

  // Band width between the clusters, reported for inspection only.
  std::size_t mid = 0;
  for (std::size_t i = 1; i < pred.x.size(); ++i) {
    if (std::fabs(pred.x[i]) < std::fabs(pred.x[mid])) {
      mid = i;
    }
  }
  const double band_width_mid = pred.q95[mid] - pred.q05[mid];

  write_predictive_csv((fs::path(out_dir) / "predictive.csv").string(), pred);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), trace);
  write_points_csv((fs::path(out_dir) / "train_points.csv").string(), data);

  KvPairs kv;
  add_header(kv, "nn", train_cfg);
  kv.emplace_back("family", family_name(family));
  kv.emplace_back("arch", arch);
  kv.emplace_back("degree", std::to_string(degree));
  add_constants(kv, constants);
  kv.emplace_back("weight_count", std::to_string(dim));
  kv.emplace_back("final_elbo", format_double(trace.smoothed_final(100)));
  kv.emplace_back("final_elbo_last", format_double(trace.elbo.back()));
  kv.emplace_back("rmse_train", format_double(rmse_train));
  kv.emplace_back("band_width_mid", format_double(band_width_mid));
  kv.emplace_back("final_params", join_doubles(post.pack()));
  return finish_record(std::move(kv), out_dir,
                       {"predictive.csv", "trace.csv", "train_points.csv"});
}

int parse_and_dispatch(int argc, const char* const* argv) {
  CLI::App app{"tmvi: variational inference with Bernstein-polynomial transformation flows"};
  std::string experiment;
  std::string family = "tm";
  std::string arch = "small";
  std::string out_dir;
  std::string config_path;
  int degree = 10;
  int samples = 50;
  int steps = 0;
  double lr = 0.01;
  std::uint64_t seed = 1;

  app.add_option("--experiment", experiment, "experiment to run")
      ->required()
      ->check(CLI::IsMember({"bernoulli", "cauchy", "nn"}));
  app.add_option("--family", family, "variational family (ignored by cauchy, which runs both)")
      ->check(CLI::IsMember({"tm", "gaussian"}));
  app.add_option("--degree", degree, "Bernstein polynomial degree M")
      ->check(CLI::Range(1, 200));
  app.add_option("--samples", samples, "Monte Carlo samples per step")
      ->check(CLI::Range(1, 1000000));
  auto* steps_opt = app.add_option("--steps", steps, "optimization steps (default 3000, nn 10000)")
                        ->check(CLI::Range(1, 10000000));
  app.add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "run seed");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (env TMVI_OUT, then 'out')");
  app.add_option("--arch", arch, "nn architecture")->check(CLI::IsMember({"small", "large"}));
  app.add_option("--config", config_path, "experiment-constants file overriding the defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (out_opt->count() == 0) {
    const char* env = std::getenv("TMVI_OUT");
    out_dir = (env != nullptr && env[0] != '\0') ? env : "out";
  }

  try {
    ExperimentConstants constants;
    if (config_path.empty()) {
      constants = ExperimentConstants::builtin();
    } else {
      std::string text;
      try {
        text = read_text_file(config_path);
      } catch (const std::runtime_error& e) {
        throw std::invalid_argument(e.what());
      }
      constants = ExperimentConstants::from_kv(parse_kv(text));
    }

    TrainConfig train_cfg;
    train_cfg.steps = steps_opt->count() > 0 ? steps : (experiment == "nn" ? 10000 : 3000);
    train_cfg.samples_per_step = samples;
    train_cfg.learning_rate = lr;
    train_cfg.seed = seed;

    const Family fam = (family == "tm") ? Family::kTmFlow : Family::kGaussian;
    RunRecord rec;
    if (experiment == "bernoulli") {
      rec = run_bernoulli(degree, fam, train_cfg, constants, out_dir);
    } else if (experiment == "cauchy") {
      rec = run_cauchy(degree, train_cfg, constants, out_dir);
    } else {
      rec = run_nn(arch, fam, degree, train_cfg, constants, out_dir);
    }
    std::cout << "wrote " << rec.artifact_paths.size() << " files to " << out_dir << "\n";
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tmvi
