#include "tmvi/models.hpp"

namespace tmvi {

double normal_log_prior(std::span<const double> w, double sd) {
  if (!(sd > 0.0)) {
    throw std::invalid_argument("normal_log_prior: sd must be positive");
  }
  double acc = 0.0;
  for (double wi : w) {
    acc += normal_log_prior_one(wi, sd);
  }
  return acc;
}

FlowSampleBatch gaussian_vi_sample_and_logq(const GaussianVariational& params, int count,
                                            Rng& rng) {
  if (count < 1) {
    throw std::invalid_argument("gaussian_vi_sample_and_logq: count must be >= 1");
  }
  const double sd = params.sd();
  const double log_sd = std::log(sd);
  FlowSampleBatch batch;
  batch.z.resize(static_cast<std::size_t>(count));
  batch.w.resize(static_cast<std::size_t>(count));
  batch.log_q.resize(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    const double z = rng.normal();
    const std::size_t i = static_cast<std::size_t>(t);
    batch.z[i] = z;
    batch.w[i] = params.mean() + sd * z;
    // log q(w) = log phi(z) - log sd under w = mean + sd * z.
    batch.log_q[i] = norm_logpdf(z) - log_sd;
  }
  return batch;
}

}  // namespace tmvi
