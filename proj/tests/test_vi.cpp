#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <span>
#include <vector>

#include "tmvi/models.hpp"
#include "tmvi/oracles.hpp"
#include "tmvi/rng.hpp"
#include "tmvi/vi.hpp"

using namespace tmvi;

namespace {

// Conjugate toy: y_j ~ N(w, 1) with w ~ N(0, 1), so the posterior is
// N(sum(y)/(n+1), 1/(n+1)) in closed form.
struct NormalToy {
  std::vector<double> ys;

  template <class S>
  S log_lik(std::span<const S> w) const {
    S acc = -0.5 * kLogTwoPi - 0.5 * (ys[0] - w[0]) * (ys[0] - w[0]);
    for (std::size_t j = 1; j < ys.size(); ++j) {
      acc = acc + (-0.5 * kLogTwoPi - 0.5 * (ys[j] - w[0]) * (ys[j] - w[0]));
    }
    return acc;
  }

  template <class S>
  S log_prior(std::span<const S> w) const {
    return -0.5 * kLogTwoPi - 0.5 * w[0] * w[0];
  }
};

struct BernoulliToy {
  Dataset data;
  double alpha = 1.1;
  double beta = 1.1;

  template <class S>
  S log_lik(std::span<const S> w) const {
    return bernoulli_log_lik(w[0], data);
  }

  template <class S>
  S log_prior(std::span<const S> w) const {
    return beta_log_prior(w[0], alpha, beta);
  }
};

FlowSampleBatch flow_batch(const ConstrainedFlowParams& lam, const FlowConfig& cfg,
                           int count, std::uint64_t seed) {
  Rng rng(seed);
  return sample_batch(lam, cfg, count, rng);
}

}  // namespace

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  TrainConfig bad = cfg;
  bad.steps = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.samples_per_step = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.adam_beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.adam_eps = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("adam_update leaves parameters alone on a zero gradient") {
  TrainConfig cfg;
  AdamState state(2);
  std::vector<double> params{1.5, -0.25};
  const std::vector<double> grad{0.0, 0.0};
  adam_update(state, params, grad, cfg);
  CHECK(params[0] == 1.5);
  CHECK(params[1] == -0.25);
  CHECK(state.t == 1);
}

TEST_CASE("adam_update first step moves by almost exactly the learning rate") {
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState state(1);
  std::vector<double> params{2.0};
  const std::vector<double> grad{3.0};
  adam_update(state, params, grad, cfg);
  // Bias correction makes m_hat = g and v_hat = g^2 at t = 1, so the step is
  // lr * g / (|g| + eps).
  const double want = 2.0 - 0.1 * 3.0 / (3.0 + cfg.adam_eps);
  CHECK(params[0] == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("adam_update tracks an independent reimplementation on a bowl") {
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  AdamState state(1);
  std::vector<double> x{10.0};
  double y = 10.0;
  double m = 0.0;
  double v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    const double gx = 2.0 * (x[0] - 3.0);
    const std::vector<double> grad{gx};
    adam_update(state, x, grad, cfg);
    const double gy = 2.0 * (y - 3.0);
    m = 0.9 * m + 0.1 * gy;
    v = 0.999 * v + 0.001 * gy * gy;
    const double m_hat = m / (1.0 - std::pow(0.9, t));
    const double v_hat = v / (1.0 - std::pow(0.999, t));
    y -= 0.05 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(std::fabs(x[0] - y) < 1e-10);
  }
  CHECK(std::fabs(x[0] - 3.0) < std::fabs(10.0 - 3.0));
}

TEST_CASE("adam_update rejects mismatched sizes") {
  TrainConfig cfg;
  AdamState state(2);
  std::vector<double> params{0.0, 0.0};
  const std::vector<double> grad{1.0};
  CHECK_THROWS_AS(adam_update(state, params, grad, cfg), std::invalid_argument);
}

TEST_CASE("draw_base_samples is sample-major and stream-faithful") {
  Rng rng(5);
  const auto z = draw_base_samples(rng, 3, 2);
  REQUIRE(z.size() == 6);
  Rng ref(5);
  for (double v : z) {
    CHECK(v == ref.normal());
  }
  Rng bad(1);
  CHECK_THROWS_AS((void)draw_base_samples(bad, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS((void)draw_base_samples(bad, 3, 0), std::invalid_argument);
}

TEST_CASE("MeanFieldPosterior factories and packing round-trip") {
  FlowConfig cfg;
  cfg.degree = 4;
  auto tm = MeanFieldPosterior::tm_flow(3, cfg);
  CHECK(tm.dim() == 3);
  CHECK(tm.param_count() == 3 * (4 + 5));
  const auto packed = tm.pack();
  REQUIRE(packed.size() == tm.param_count());
  auto copy = tm;
  std::vector<double> shifted = packed;
  for (double& p : shifted) {
    p += 0.125;
  }
  copy.unpack(shifted);
  const auto repacked = copy.pack();
  for (std::size_t i = 0; i < shifted.size(); ++i) {
    CHECK(repacked[i] == shifted[i]);
  }
  std::vector<double> wrong(packed.size() - 1, 0.0);
  CHECK_THROWS_AS(copy.unpack(wrong), std::invalid_argument);
  CHECK_THROWS_AS((void)MeanFieldPosterior::tm_flow(0, cfg), std::invalid_argument);

  auto gauss = MeanFieldPosterior::gaussian(2, 0.5, 0.25);
  CHECK(gauss.param_count() == 4);
  CHECK(gauss.entries[0].gaussian.mean() == 0.5);
  CHECK(gauss.entries[0].gaussian.sd() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS((void)MeanFieldPosterior::gaussian(2, 0.0, -1.0), std::invalid_argument);
}

TEST_CASE("expected_log_lik averages the joint draws") {
  FlowSampleBatch b;
  b.z = {0.0, 0.0, 0.0};
  b.w = {1.0, 2.0, 4.0};
  b.log_q = {0.0, 0.0, 0.0};
  const std::vector<FlowSampleBatch> batches{b};
  const double got = expected_log_lik(
      batches, [](std::span<const double> w) { return 3.0 * w[0]; });
  CHECK(got == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("kl_sample_estimate combines log q and log prior additively") {
  FlowSampleBatch b1;
  b1.z = {0.0, 0.0};
  b1.w = {1.0, 3.0};
  b1.log_q = {-1.0, -2.0};
  FlowSampleBatch b2;
  b2.z = {0.0, 0.0};
  b2.w = {2.0, 5.0};
  b2.log_q = {-0.5, -0.25};
  const std::vector<FlowSampleBatch> batches{b1, b2};
  // Per draw: (log q1 + log q2) - prior, prior = w1 + w2 here.
  const double want = 0.5 * ((-1.5 - 3.0) + (-2.25 - 8.0));
  const double got = kl_sample_estimate(
      batches, [](std::span<const double> w) { return w[0] + w[1]; });
  CHECK(got == doctest::Approx(want).epsilon(1e-14));
  FlowSampleBatch shorter = b2;
  shorter.w.pop_back();
  shorter.z.pop_back();
  shorter.log_q.pop_back();
  const std::vector<FlowSampleBatch> bad{b1, shorter};
  CHECK_THROWS_AS(
      (void)kl_sample_estimate(bad, [](std::span<const double>) { return 0.0; }),
      std::invalid_argument);
}

TEST_CASE("kl_sample_estimate vanishes when q equals the prior") {
  GaussianVariational params;  // N(0, 1)
  Rng rng(61);
  const std::vector<FlowSampleBatch> batches{
      gaussian_vi_sample_and_logq(params, 10000, rng)};
  const double est = kl_sample_estimate(batches, [](std::span<const double> w) {
    return norm_logpdf(w[0]);
  });
  CHECK(std::fabs(est) < 0.05);
}

TEST_CASE("kl_sample_estimate agrees with quadrature against a beta prior") {
  FlowConfig cfg;
  cfg.degree = 5;
  cfg.squash_output = true;
  const auto lam = constrain(init_params(cfg));
  const std::vector<FlowSampleBatch> batches{flow_batch(lam, cfg, 10000, 67)};
  const double mc = kl_sample_estimate(batches, [](std::span<const double> w) {
    return beta_log_prior(w[0], 1.1, 1.1);
  });
  const auto grid = make_linspace(1e-4, 1.0 - 1e-4, 4001);
  const double quad = quadrature_kl(flow_density_grid(lam, cfg, grid),
                                    beta_density_grid(1.1, 1.1, grid));
  CHECK(std::fabs(mc - quad) < 0.02);
}

TEST_CASE("expected_log_lik agrees with quadrature for the bernoulli target") {
  FlowConfig cfg;
  cfg.degree = 5;
  cfg.squash_output = true;
  const auto lam = constrain(init_params(cfg));
  Dataset data;
  data.targets = {1.0, 1.0};
  const std::vector<FlowSampleBatch> batches{flow_batch(lam, cfg, 20000, 71)};
  const double mc = expected_log_lik(batches, [&](std::span<const double> w) {
    return bernoulli_log_lik(w[0], data);
  });
  const auto grid = make_linspace(1e-4, 1.0 - 1e-4, 4001);
  const auto q = flow_density_grid(lam, cfg, grid);
  std::vector<double> integrand(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    integrand[i] = q.density[i] * bernoulli_log_lik(grid[i], data);
  }
  const double quad = trapezoid(integrand, q.spacing());
  CHECK(std::fabs(mc - quad) < 0.01);
}

TEST_CASE("elbo_step keeps elbo = ell - kl as an identity") {
  FlowConfig cfg;
  cfg.degree = 3;
  auto post = MeanFieldPosterior::tm_flow(1, cfg);
  const auto packed = post.pack();
  NormalToy target;
  target.ys = {0.8, 1.2};
  Rng rng(73);
  const auto base = draw_base_samples(rng, 10, 1);
  ad::Tape tape;
  const auto est = elbo_step(tape, post, packed, target, base, 10);
  CHECK(est.elbo == est.ell - est.kl);
  REQUIRE(est.grad.size() == packed.size());
  for (double g : est.grad) {
    CHECK(std::isfinite(g));
  }
}

TEST_CASE("elbo_step is bitwise deterministic") {
  FlowConfig cfg;
  cfg.degree = 4;
  cfg.squash_output = true;
  auto post = MeanFieldPosterior::tm_flow(1, cfg);
  const auto packed = post.pack();
  BernoulliToy target;
  target.data.targets = {1.0, 1.0};
  Rng rng(79);
  const auto base = draw_base_samples(rng, 20, 1);
  ad::Tape tape;
  const auto e1 = elbo_step(tape, post, packed, target, base, 20);
  const auto e2 = elbo_step(tape, post, packed, target, base, 20);
  CHECK(e1.elbo == e2.elbo);
  CHECK(e1.ell == e2.ell);
  CHECK(e1.kl == e2.kl);
  for (std::size_t i = 0; i < e1.grad.size(); ++i) {
    CHECK(e1.grad[i] == e2.grad[i]);
  }
}

TEST_CASE("elbo_step validates its shapes") {
  FlowConfig cfg;
  cfg.degree = 3;
  auto post = MeanFieldPosterior::tm_flow(1, cfg);
  const auto packed = post.pack();
  NormalToy target;
  target.ys = {1.0};
  Rng rng(83);
  const auto base = draw_base_samples(rng, 4, 1);
  ad::Tape tape;
  MeanFieldPosterior empty;
  CHECK_THROWS_AS((void)elbo_step(tape, empty, packed, target, base, 4),
                  std::invalid_argument);
  const std::vector<double> short_packed(packed.size() - 1, 0.0);
  CHECK_THROWS_AS((void)elbo_step(tape, post, short_packed, target, base, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)elbo_step(tape, post, packed, target, base, 5),
                  std::invalid_argument);
}

TEST_CASE("elbo_step gradients match central differences") {
  FlowConfig cfg;
  cfg.degree = 3;
  cfg.squash_output = true;
  auto post = MeanFieldPosterior::tm_flow(1, cfg);
  std::vector<double> packed = post.pack();
  Rng jitter(87);
  for (double& p : packed) {
    p += 0.3 * jitter.normal();
  }
  BernoulliToy target;
  target.data.targets = {1.0, 0.0, 1.0};
  Rng rng(89);
  const auto base = draw_base_samples(rng, 5, 1);
  ad::Tape tape;
  const auto est = elbo_step(tape, post, packed, target, base, 5);
  const double h = 1e-5;
  for (std::size_t i = 0; i < packed.size(); ++i) {
    auto shifted = packed;
    shifted[i] = packed[i] + h;
    const double up = elbo_step(tape, post, shifted, target, base, 5).elbo;
    shifted[i] = packed[i] - h;
    const double dn = elbo_step(tape, post, shifted, target, base, 5).elbo;
    const double fd = (up - dn) / (2.0 * h);
    CHECK(std::fabs(est.grad[i] - fd) / std::fmax(1.0, std::fabs(est.grad[i])) < 1e-4);
  }
}

TEST_CASE("train recovers the conjugate-normal posterior with a gaussian factor") {
  NormalToy target;
  target.ys = {0.8, 1.2, 0.4, 1.6};
  const double true_mean = 4.0 / 5.0;
  const double true_sd = 1.0 / std::sqrt(5.0);
  auto post = MeanFieldPosterior::gaussian(1, 0.0, 1.0);
  TrainConfig cfg;
  const auto trace = train(post, target, cfg);
  REQUIRE(trace.elbo.size() == std::size_t(cfg.steps));
  const double got_mean = post.entries[0].gaussian.mean();
  const double got_sd = post.entries[0].gaussian.sd();
  CHECK(std::fabs(got_mean - true_mean) / true_mean < 0.05);
  CHECK(std::fabs(got_sd - true_sd) / true_sd < 0.05);
}

TEST_CASE("train improves the elbo and stays internally consistent") {
  BernoulliToy target;
  target.data.targets = {1.0, 1.0};
  FlowConfig fcfg;
  fcfg.degree = 10;
  fcfg.squash_output = true;
  auto post = MeanFieldPosterior::tm_flow(1, fcfg);
  TrainConfig cfg;
  cfg.steps = 600;
  cfg.samples_per_step = 25;
  const auto trace = train(post, target, cfg);
  REQUIRE(trace.step.size() == 600);
  for (std::size_t s = 0; s < trace.step.size(); ++s) {
    CHECK(trace.elbo[s] == trace.ell[s] - trace.kl[s]);
  }
  double head = 0.0;
  double tail = 0.0;
  for (std::size_t s = 0; s < 100; ++s) {
    head += trace.elbo[s];
    tail += trace.elbo[trace.elbo.size() - 1 - s];
  }
  CHECK(tail / 100.0 > head / 100.0);
}

TEST_CASE("train is deterministic for a fixed seed") {
  NormalToy target;
  target.ys = {0.5, -0.5, 1.0};
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.samples_per_step = 10;
  auto p1 = MeanFieldPosterior::gaussian(1, 0.2, 0.8);
  auto p2 = MeanFieldPosterior::gaussian(1, 0.2, 0.8);
  const auto t1 = train(p1, target, cfg);
  const auto t2 = train(p2, target, cfg);
  for (std::size_t s = 0; s < t1.elbo.size(); ++s) {
    CHECK(t1.elbo[s] == t2.elbo[s]);
  }
  const auto x1 = p1.pack();
  const auto x2 = p2.pack();
  for (std::size_t i = 0; i < x1.size(); ++i) {
    CHECK(x1[i] == x2[i]);
  }
  TrainConfig bad = cfg;
  bad.steps = 0;
  CHECK_THROWS_AS((void)train(p1, target, bad), std::invalid_argument);
}

TEST_CASE("smoothed_final windows behave at the edges") {
  ElboTrace trace;
  trace.elbo = {1.0, 2.0, 3.0, 4.0};
  CHECK(trace.smoothed_final(2) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(trace.smoothed_final(0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(trace.smoothed_final(99) == doctest::Approx(2.5).epsilon(1e-15));
  ElboTrace empty;
  CHECK_THROWS_AS((void)empty.smoothed_final(10), std::logic_error);
}

TEST_CASE("posterior_predictive collapses to the noise law for a point posterior") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 1};
  model.noise_sd = 0.1;
  auto post = MeanFieldPosterior::gaussian(model.weight_count(), 0.3, 1e-9);
  const std::vector<double> xs{-1.0, 0.0, 2.0};
  const auto summary = posterior_predictive(post, model, xs, 4000, 11);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double mu = 0.3 * xs[j] + 0.3;
    CHECK(std::fabs(summary.mean[j] - mu) < 4.0 * 0.1 / std::sqrt(4000.0) + 1e-6);
    const double band = summary.q95[j] - summary.q05[j];
    // 90% central interval of N(mu, 0.1) is 2 * 1.645 * 0.1 wide.
    CHECK(std::fabs(band - 0.329) < 0.03);
  }
}

TEST_CASE("posterior_predictive quantiles are monotone and grid-stable") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 3, 1};
  auto post = MeanFieldPosterior::gaussian(model.weight_count(), 0.0, 1.0);
  const std::vector<double> xs{-2.0, -1.0, 0.0, 1.0, 2.0};
  const auto s = posterior_predictive(post, model, xs, 500, 13);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    CHECK(s.q05[j] <= s.q25[j]);
    CHECK(s.q25[j] <= s.q75[j]);
    CHECK(s.q75[j] <= s.q95[j]);
    CHECK(s.q05[j] <= s.mean[j]);
    CHECK(s.mean[j] <= s.q95[j]);
  }
  // Appending grid points must not disturb earlier columns: each point draws
  // from its own substream.
  const std::vector<double> longer{-2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
  const auto s2 = posterior_predictive(post, model, longer, 500, 13);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    CHECK(s.mean[j] == s2.mean[j]);
    CHECK(s.q05[j] == s2.q05[j]);
    CHECK(s.q95[j] == s2.q95[j]);
  }
}

TEST_CASE("posterior_predictive validates shapes and draw counts") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 3, 1};
  auto post = MeanFieldPosterior::gaussian(3, 0.0, 1.0);
  const std::vector<double> xs{0.0};
  CHECK_THROWS_AS((void)posterior_predictive(post, model, xs, 100, 1),
                  std::invalid_argument);
  auto ok = MeanFieldPosterior::gaussian(model.weight_count(), 0.0, 1.0);
  CHECK_THROWS_AS((void)posterior_predictive(ok, model, xs, 1, 1),
                  std::invalid_argument);
}
