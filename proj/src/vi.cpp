#include "tmvi/vi.hpp"

#include <algorithm>
#include <cmath>

namespace tmvi {

std::vector<double> MeanFieldPosterior::pack() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto& e : entries) {
    if (e.family == Family::kTmFlow) {
      const auto p = e.flow.pack();
      out.insert(out.end(), p.begin(), p.end());
    } else {
      out.push_back(e.gaussian.mean_raw);
      out.push_back(e.gaussian.sd_raw);
    }
  }
  return out;
}

void MeanFieldPosterior::unpack(std::span<const double> x) {
  if (x.size() != param_count()) {
    throw std::invalid_argument("MeanFieldPosterior: packed length mismatch");
  }
  std::size_t off = 0;
  for (auto& e : entries) {
    const std::size_t n = e.param_count();
    const auto slice = x.subspan(off, n);
    if (e.family == Family::kTmFlow) {
      e.flow = UnconstrainedFlowParams::unpack(slice, e.flow_config.degree);
    } else {
      e.gaussian.mean_raw = slice[0];
      e.gaussian.sd_raw = slice[1];
    }
    off += n;
  }
}

MeanFieldPosterior MeanFieldPosterior::tm_flow(std::size_t dim, const FlowConfig& cfg) {
  if (dim == 0) {
    throw std::invalid_argument("MeanFieldPosterior: dim must be >= 1");
  }
  MeanFieldPosterior post;
  post.entries.resize(dim);
  const UnconstrainedFlowParams init = init_params(cfg);
  for (auto& e : post.entries) {
    e.family = Family::kTmFlow;
    e.flow_config = cfg;
    e.flow = init;
  }
  return post;
}

MeanFieldPosterior MeanFieldPosterior::gaussian(std::size_t dim, double mean, double sd) {
  if (dim == 0) {
    throw std::invalid_argument("MeanFieldPosterior: dim must be >= 1");
  }
  if (!(sd > 0.0)) {
    throw std::invalid_argument("MeanFieldPosterior: initial sd must be positive");
  }
  MeanFieldPosterior post;
  post.entries.resize(dim);
  for (auto& e : post.entries) {
    e.family = Family::kGaussian;
    e.gaussian.mean_raw = mean;
    e.gaussian.sd_raw = inv_softplus(sd);
  }
  return post;
}

double ElboTrace::smoothed_final(std::size_t window) const {
  if (elbo.empty()) {
    throw std::logic_error("ElboTrace: no recorded steps");
  }
  const std::size_t n = std::min(window == 0 ? std::size_t{1} : window, elbo.size());
  double acc = 0.0;
  for (std::size_t i = elbo.size() - n; i < elbo.size(); ++i) {
    acc += elbo[i];
  }
  return acc / double(n);
}

void adam_update(AdamState& state, std::span<double> params, std::span<const double> grad,
                 const TrainConfig& cfg) {
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_update: size mismatch");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, double(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * g;
    state.v[i] = cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

std::vector<double> draw_base_samples(Rng& rng, int samples, std::size_t dim) {
  if (samples < 1 || dim == 0) {
    throw std::invalid_argument("draw_base_samples: need samples >= 1 and dim >= 1");
  }
  std::vector<double> z(static_cast<std::size_t>(samples) * dim);
  for (auto& v : z) {
    v = rng.normal();
  }
  return z;
}

PredictiveSummary posterior_predictive(const MeanFieldPosterior& post,
                                       const MLPRegressionModel& model,
                                       std::span<const double> xs, int draws,
                                       std::uint64_t seed) {
  model.validate();
  if (post.dim() != model.weight_count()) {
    throw std::invalid_argument("posterior_predictive: posterior/model size mismatch");
  }
  if (draws < 2) {
    throw std::invalid_argument("posterior_predictive: need at least two draws");
  }
  std::vector<double> packed = post.pack();
  const auto evals =
      detail::build_evaluators<double>(post, std::span<const double>(packed));

  PredictiveSummary out;
  out.x.assign(xs.begin(), xs.end());
  out.mean.reserve(xs.size());
  out.q05.reserve(xs.size());
  out.q25.reserve(xs.size());
  out.q75.reserve(xs.size());
  out.q95.reserve(xs.size());

  const std::size_t dim = post.dim();
  std::vector<double> w(dim);
  std::vector<double> ys(static_cast<std::size_t>(draws));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    Rng rng = Rng::substream(seed, j);
    for (int s = 0; s < draws; ++s) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double z = rng.normal();
        w[i] = std::visit([&](const auto& ev) { return ev.sample_density(z).first; },
                          evals[i]);
      }
      const double mu = mlp_forward(std::span<const double>(w), model, xs[j]);
      ys[static_cast<std::size_t>(s)] = mu + model.noise_sd * rng.normal();
    }
    out.mean.push_back(mean_of(ys));
    std::sort(ys.begin(), ys.end());
    out.q05.push_back(quantile_sorted(ys, 0.05));
    out.q25.push_back(quantile_sorted(ys, 0.25));
    out.q75.push_back(quantile_sorted(ys, 0.75));
    out.q95.push_back(quantile_sorted(ys, 0.95));
  }
  return out;
}

}  // namespace tmvi
