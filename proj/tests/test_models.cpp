#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "tmvi/models.hpp"
#include "tmvi/rng.hpp"

using namespace tmvi;

TEST_CASE("bernoulli_log_lik counts successes and failures") {
  Dataset d;
  d.targets = {1.0, 0.0, 1.0};
  CHECK(bernoulli_log_lik(0.5, d) ==
        doctest::Approx(3.0 * std::log(0.5)).epsilon(1e-14));
  Dataset one;
  one.targets = {1.0};
  CHECK(bernoulli_log_lik(0.25, one) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-14));
  Dataset zeros;
  zeros.targets = {0.0, 0.0};
  CHECK(bernoulli_log_lik(0.25, zeros) ==
        doctest::Approx(2.0 * std::log(0.75)).epsilon(1e-14));
}

TEST_CASE("bernoulli_log_lik rejects invalid rates and targets") {
  Dataset d;
  d.targets = {1.0};
  CHECK_THROWS_AS((void)bernoulli_log_lik(0.0, d), std::domain_error);
  CHECK_THROWS_AS((void)bernoulli_log_lik(1.0, d), std::domain_error);
  CHECK_THROWS_AS((void)bernoulli_log_lik(1.3, d), std::domain_error);
  Dataset bad;
  bad.targets = {1.0, 2.0};
  CHECK_THROWS_AS((void)bernoulli_log_lik(0.5, bad), std::invalid_argument);
}

TEST_CASE("beta_log_prior matches the closed form") {
  // Beta(1, 1) is uniform, so the log-density is zero everywhere.
  CHECK(beta_log_prior(0.3, 1.0, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(beta_log_prior(0.9, 1.0, 1.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  const double want = 0.2 * std::log(0.5) -
                      (2.0 * std::lgamma(1.1) - std::lgamma(2.2));
  CHECK(beta_log_prior(0.5, 1.1, 1.1) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("beta_log_prior integrates to one") {
  const int n = 2001;
  const double lo = 1e-6;
  const double hi = 1.0 - 1e-6;
  double acc = 0.0;
  double prev = std::exp(beta_log_prior(lo, 1.1, 1.1));
  for (int i = 1; i < n; ++i) {
    const double x = lo + (hi - lo) * double(i) / double(n - 1);
    const double cur = std::exp(beta_log_prior(x, 1.1, 1.1));
    acc += 0.5 * (prev + cur);
    prev = cur;
  }
  acc *= (hi - lo) / double(n - 1);
  CHECK(std::fabs(acc - 1.0) < 1e-3);
}

TEST_CASE("beta_log_prior validates its arguments") {
  CHECK_THROWS_AS((void)beta_log_prior(-0.1, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS((void)beta_log_prior(0.5, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)beta_log_prior(0.5, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("cauchy_log_lik at the observation reduces to the mode height") {
  CauchyLocationModel model;
  model.gamma = 1.0;
  Dataset d;
  d.targets = {0.7};
  CHECK(cauchy_log_lik(0.7, model, d) ==
        doctest::Approx(-std::log(std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("cauchy_log_lik is translation invariant") {
  CauchyLocationModel model;
  Dataset d;
  d.targets = {2.7, -2.5, 0.3, 1.1};
  Dataset shifted;
  const double c = 17.25;
  for (double y : d.targets) {
    shifted.targets.push_back(y + c);
  }
  for (double xi : {-1.0, 0.4, 3.0}) {
    CHECK(std::fabs(cauchy_log_lik(xi, model, d) -
                    cauchy_log_lik(xi + c, model, shifted)) < 1e-12);
  }
}

TEST_CASE("clustered observations produce a bimodal likelihood surface") {
  CauchyLocationModel model;
  Dataset d;
  d.targets = {2.76, -2.56, -2.43, 2.41, 2.28, -2.49};
  const int n = 1601;
  std::vector<double> ll(n);
  for (int i = 0; i < n; ++i) {
    const double xi = -8.0 + 16.0 * double(i) / double(n - 1);
    ll[size_t(i)] = cauchy_log_lik(xi, model, d);
  }
  std::vector<double> maxima;
  for (int i = 1; i + 1 < n; ++i) {
    if (ll[size_t(i)] > ll[size_t(i - 1)] && ll[size_t(i)] > ll[size_t(i + 1)]) {
      maxima.push_back(-8.0 + 16.0 * double(i) / double(n - 1));
    }
  }
  REQUIRE(maxima.size() == 2);
  CHECK(std::fabs(maxima[0] + 2.5) < 0.5);
  CHECK(std::fabs(maxima[1] - 2.5) < 0.5);
}

TEST_CASE("cauchy_log_lik validates model and data") {
  CauchyLocationModel bad;
  bad.gamma = 0.0;
  Dataset d;
  d.targets = {1.0};
  CHECK_THROWS_AS((void)cauchy_log_lik(0.0, bad, d), std::invalid_argument);
  CauchyLocationModel model;
  Dataset empty;
  CHECK_THROWS_AS((void)cauchy_log_lik(0.0, model, empty), std::invalid_argument);
}

TEST_CASE("mlp_forward with no hidden layer is affine in x") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 1};
  const std::vector<double> w{2.0, 1.0};  // kernel 2, bias 1
  CHECK(mlp_forward<double>(w, model, 3.0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(mlp_forward<double>(w, model, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // Affine: f(x1 + x2) = f(x1) + f(x2) - f(0).
  const double lhs = mlp_forward<double>(w, model, 1.3 + 0.9);
  const double rhs = mlp_forward<double>(w, model, 1.3) +
                     mlp_forward<double>(w, model, 0.9) -
                     mlp_forward<double>(w, model, 0.0);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("mlp_forward with zero weights returns zero") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 8, 8, 1};
  const std::vector<double> w(model.weight_count(), 0.0);
  CHECK(mlp_forward<double>(w, model, 2.5) == 0.0);
}

TEST_CASE("mlp_forward matches a hand-rolled one-hidden-layer network") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 3, 1};
  REQUIRE(model.weight_count() == 10);
  Rng rng(77);
  std::vector<double> w(10);
  for (double& wi : w) {
    wi = rng.normal();
  }
  for (double x : {-1.5, 0.0, 0.8, 2.0}) {
    // Layout: hidden kernel w[0..2], hidden bias w[3..5], output kernel
    // w[6..8], output bias w[9].
    double out = w[9];
    for (int j = 0; j < 3; ++j) {
      out += w[size_t(6 + j)] * std::tanh(w[size_t(j)] * x + w[size_t(3 + j)]);
    }
    CHECK(std::fabs(mlp_forward<double>(w, model, x) - out) < 1e-12);
  }
}

TEST_CASE("mlp_forward rejects a wrong-size weight vector") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 3, 1};
  const std::vector<double> w(9, 0.0);
  CHECK_THROWS_AS((void)mlp_forward<double>(w, model, 0.0), std::invalid_argument);
}

TEST_CASE("mlp model validation catches malformed architectures") {
  MLPRegressionModel model;
  model.layer_sizes = {1};
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  model.layer_sizes = {2, 1};
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  model.layer_sizes = {1, 0, 1};
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  model.layer_sizes = {1, 4, 1};
  model.noise_sd = 0.0;
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  model.noise_sd = 0.1;
  CHECK_NOTHROW(model.validate());
}

TEST_CASE("gaussian_log_lik with zero residuals is the normalizer alone") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 1};
  model.noise_sd = 0.1;
  const std::vector<double> w{1.0, 0.0};  // identity map
  Dataset d;
  d.inputs = {-1.0, 0.0, 0.5, 2.0};
  d.targets = d.inputs;
  const double per_point = -0.5 * std::log(2.0 * std::numbers::pi * 0.01);
  CHECK(gaussian_log_lik<double>(w, model, d) ==
        doctest::Approx(4.0 * per_point).epsilon(1e-13));
  // Doubling the noise scale costs exactly n * log 2 when residuals vanish.
  MLPRegressionModel wide = model;
  wide.noise_sd = 0.2;
  CHECK(gaussian_log_lik<double>(w, model, d) - gaussian_log_lik<double>(w, wide, d) ==
        doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("gaussian_log_lik matches the direct normal sum") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 3, 1};
  model.noise_sd = 0.25;
  Rng rng(31);
  std::vector<double> w(model.weight_count());
  for (double& wi : w) {
    wi = rng.normal();
  }
  Dataset d;
  d.inputs = {-2.0, -0.3, 0.7, 1.9};
  d.targets = {0.5, -0.2, 0.0, 1.4};
  double want = 0.0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double mu = mlp_forward<double>(w, model, d.inputs[i]);
    const double z = (d.targets[i] - mu) / model.noise_sd;
    want += norm_logpdf(z) - std::log(model.noise_sd);
  }
  CHECK(std::fabs(gaussian_log_lik<double>(w, model, d) - want) < 1e-12);
}

TEST_CASE("gaussian_log_lik requires paired inputs") {
  MLPRegressionModel model;
  model.layer_sizes = {1, 1};
  const std::vector<double> w{1.0, 0.0};
  Dataset no_inputs;
  no_inputs.targets = {1.0};
  CHECK_THROWS_AS((void)gaussian_log_lik<double>(w, model, no_inputs),
                  std::invalid_argument);
  Dataset empty;
  CHECK_THROWS_AS((void)gaussian_log_lik<double>(w, model, empty),
                  std::invalid_argument);
}

TEST_CASE("normal_log_prior sums independent normal terms") {
  const std::vector<double> zero{0.0};
  CHECK(normal_log_prior(zero, 1.0) ==
        doctest::Approx(-0.5 * kLogTwoPi).epsilon(1e-15));
  const std::vector<double> two{1.0, 2.0};
  CHECK(normal_log_prior(two, 1.0) ==
        doctest::Approx(norm_logpdf(1.0) + norm_logpdf(2.0)).epsilon(1e-14));
  const double want = -kLogTwoPi - 2.0 * std::log(2.0) - 0.5 * (1.0 + 4.0) / 4.0;
  CHECK(normal_log_prior(two, 2.0) == doctest::Approx(want).epsilon(1e-14));
  CHECK_THROWS_AS((void)normal_log_prior(two, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian variational draws carry the right log-density") {
  GaussianVariational params;  // mean 0, sd 1
  CHECK(params.sd() == doctest::Approx(1.0).epsilon(1e-14));
  Rng rng(19);
  const auto batch = gaussian_vi_sample_and_logq(params, 50, rng);
  REQUIRE(batch.z.size() == 50);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(batch.w[t] == doctest::Approx(batch.z[t]).epsilon(1e-12));
    CHECK(batch.log_q[t] == doctest::Approx(norm_logpdf(batch.z[t])).epsilon(1e-12));
  }
}

TEST_CASE("gaussian variational draws have the requested moments") {
  GaussianVariational params;
  params.mean_raw = 1.5;
  params.sd_raw = inv_softplus(0.4);
  Rng rng(23);
  const auto batch = gaussian_vi_sample_and_logq(params, 10000, rng);
  const double m = mean_of(batch.w);
  const double sd = stddev_of(batch.w);
  CHECK(std::fabs(m - 1.5) < 3.0 * 0.4 / std::sqrt(10000.0));
  CHECK(std::fabs(sd - 0.4) < 0.02);
}

TEST_CASE("gaussian variational sampling is deterministic in the seed") {
  GaussianVariational params;
  params.mean_raw = -0.25;
  Rng r1(5);
  Rng r2(5);
  const auto b1 = gaussian_vi_sample_and_logq(params, 20, r1);
  const auto b2 = gaussian_vi_sample_and_logq(params, 20, r2);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(b1.w[t] == b2.w[t]);
    CHECK(b1.log_q[t] == b2.log_q[t]);
  }
  Rng r3(6);
  CHECK_THROWS_AS((void)gaussian_vi_sample_and_logq(params, 0, r3),
                  std::invalid_argument);
}
