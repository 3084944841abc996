#include "tmvi/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tmvi/math_util.hpp"
#include "tmvi/rng.hpp"

namespace tmvi {

void DensityGrid::validate() const {
  if (grid.size() != density.size()) {
    throw std::invalid_argument("DensityGrid: grid/density length mismatch");
  }
  if (grid.size() < 2) {
    throw std::invalid_argument("DensityGrid: need at least two points");
  }
  const double dx = (grid.back() - grid.front()) / double(grid.size() - 1);
  if (!(dx > 0.0)) {
    throw std::invalid_argument("DensityGrid: grid must be increasing");
  }
  const double tol = 1e-9 * std::fmax(1.0, std::fabs(dx));
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (std::fabs((grid[i + 1] - grid[i]) - dx) > tol) {
      throw std::invalid_argument("DensityGrid: grid must be uniformly spaced");
    }
  }
}

double DensityGrid::spacing() const {
  validate();
  return (grid.back() - grid.front()) / double(grid.size() - 1);
}

std::vector<double> make_linspace(double lo, double hi, std::size_t count) {
  if (count < 2 || !(lo < hi)) {
    throw std::invalid_argument("make_linspace: need lo < hi and count >= 2");
  }
  std::vector<double> out(count);
  const double step = (hi - lo) / double(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + double(i) * step;
  }
  out.back() = hi;
  return out;
}

std::pair<double, double> conjugate_beta_posterior(double alpha, double beta,
                                                   const Dataset& data) {
  if (!(alpha > 0.0 && beta > 0.0)) {
    throw std::invalid_argument("conjugate_beta_posterior: prior parameters must be positive");
  }
  double ones = 0.0;
  for (double y : data.targets) {
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("conjugate_beta_posterior: targets must be 0 or 1");
    }
    ones += y;
  }
  return {alpha + ones, beta + (double(data.n()) - ones)};
}

double beta_pdf(double x, double alpha, double beta) {
  if (!(alpha > 0.0 && beta > 0.0)) {
    throw std::invalid_argument("beta_pdf: shape parameters must be positive");
  }
  if (!(x > 0.0 && x < 1.0)) {
    throw std::domain_error("beta_pdf: argument outside (0, 1)");
  }
  return std::exp((alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) -
                  log_beta(alpha, beta));
}

DensityGrid beta_density_grid(double alpha, double beta, std::span<const double> grid) {
  DensityGrid out;
  out.grid.assign(grid.begin(), grid.end());
  out.density.reserve(grid.size());
  for (double x : grid) {
    out.density.push_back(beta_pdf(x, alpha, beta));
  }
  out.validate();
  return out;
}

DensityGrid gaussian_density_grid(double mean, double sd, std::span<const double> grid) {
  if (!(sd > 0.0)) {
    throw std::invalid_argument("gaussian_density_grid: sd must be positive");
  }
  DensityGrid out;
  out.grid.assign(grid.begin(), grid.end());
  out.density.reserve(grid.size());
  for (double x : grid) {
    out.density.push_back(norm_pdf((x - mean) / sd) / sd);
  }
  out.validate();
  return out;
}

DensityGrid flow_density_grid(const ConstrainedFlowParams& lam, const FlowConfig& cfg,
                              std::span<const double> grid) {
  const auto [lo, hi] = image_bounds(lam, cfg);
  DensityGrid out;
  out.grid.assign(grid.begin(), grid.end());
  out.density.reserve(grid.size());
  for (double w : grid) {
    if (!(w > lo && w < hi)) {
      out.density.push_back(0.0);
      continue;
    }
    const double z = invert(lam, cfg, w);
    const double log_q = norm_logpdf(z) - log_det_jacobian(lam, cfg, z);
    out.density.push_back(std::exp(log_q));
  }
  out.validate();
  return out;
}

namespace {

void require_same_grid(const DensityGrid& p, const DensityGrid& q) {
  p.validate();
  q.validate();
  if (p.grid.size() != q.grid.size()) {
    throw std::invalid_argument("density grids differ in size");
  }
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    if (std::fabs(p.grid[i] - q.grid[i]) > 1e-12 * std::fmax(1.0, std::fabs(p.grid[i]))) {
      throw std::invalid_argument("density grids differ in points");
    }
  }
}

}  // namespace

double quadrature_kl(const DensityGrid& p, const DensityGrid& q) {
  require_same_grid(p, q);
  std::vector<double> integrand(p.grid.size());
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    const double pi = p.density[i];
    const double qi = q.density[i];
    if (pi < 0.0 || qi < 0.0) {
      throw std::invalid_argument("quadrature_kl: negative density");
    }
    if (pi == 0.0) {
      integrand[i] = 0.0;
    } else if (qi == 0.0) {
      return std::numeric_limits<double>::infinity();
    } else {
      integrand[i] = pi * (std::log(pi) - std::log(qi));
    }
  }
  return trapezoid(integrand, p.spacing());
}

double total_variation(const DensityGrid& p, const DensityGrid& q) {
  require_same_grid(p, q);
  std::vector<double> integrand(p.grid.size());
  for (std::size_t i = 0; i < p.grid.size(); ++i) {
    integrand[i] = std::fabs(p.density[i] - q.density[i]);
  }
  return 0.5 * trapezoid(integrand, p.spacing());
}

void MetropolisConfig::validate() const {
  if (steps < 1 || burn_in < 0 || burn_in >= steps) {
    throw std::invalid_argument("MetropolisConfig: need 0 <= burn_in < steps");
  }
  if (thin < 1) {
    throw std::invalid_argument("MetropolisConfig: thin must be >= 1");
  }
  if (!(proposal_sd > 0.0)) {
    throw std::invalid_argument("MetropolisConfig: proposal_sd must be positive");
  }
}

McmcChain metropolis(const std::function<double(double)>& log_target,
                     const MetropolisConfig& cfg) {
  cfg.validate();
  double x = cfg.init;
  double log_px = log_target(x);
  if (!std::isfinite(log_px)) {
    throw std::invalid_argument("metropolis: log_target not finite at init");
  }
  Rng rng(cfg.seed);
  McmcChain chain;
  chain.burn_in = cfg.burn_in;
  chain.thinning = cfg.thin;
  chain.samples.reserve(
      static_cast<std::size_t>((cfg.steps - cfg.burn_in + cfg.thin - 1) / cfg.thin));
  std::int64_t accepted = 0;
  for (int i = 0; i < cfg.steps; ++i) {
    const double prop = x + cfg.proposal_sd * rng.normal();
    const double log_pp = log_target(prop);
    // Both draws always consumed so the stream layout is step-independent.
    const double u = rng.uniform();
    if (std::isfinite(log_pp) && std::log(u) < log_pp - log_px) {
      x = prop;
      log_px = log_pp;
      accepted += 1;
    }
    if (i >= cfg.burn_in && (i - cfg.burn_in) % cfg.thin == 0) {
      chain.samples.push_back(x);
    }
  }
  chain.acceptance_rate = double(accepted) / double(cfg.steps);
  return chain;
}

DensityGrid histogram_density(std::span<const double> samples, std::span<const double> grid) {
  if (samples.empty()) {
    throw std::invalid_argument("histogram_density: empty sample");
  }
  DensityGrid out;
  out.grid.assign(grid.begin(), grid.end());
  out.density.assign(grid.size(), 0.0);
  out.validate();
  const double dx = out.spacing();
  const double lo_edge = out.grid.front() - 0.5 * dx;
  const double hi_edge = out.grid.back() + 0.5 * dx;
  const double norm = 1.0 / (double(samples.size()) * dx);
  for (double s : samples) {
    if (!(s >= lo_edge && s < hi_edge)) {
      continue;
    }
    auto bin = static_cast<std::size_t>((s - lo_edge) / dx);
    bin = std::min(bin, out.density.size() - 1);
    out.density[bin] += norm;
  }
  return out;
}

std::vector<double> count_modes(const DensityGrid& g, double min_prominence) {
  g.validate();
  if (!(min_prominence > 0.0 && min_prominence < 1.0)) {
    throw std::invalid_argument("count_modes: min_prominence must lie in (0, 1)");
  }
  const auto& d = g.density;
  const double dmax = *std::max_element(d.begin(), d.end());
  std::vector<double> modes;
  if (!(dmax > 0.0)) {
    return modes;
  }
  const double threshold = min_prominence * dmax;

  // Plateau-folded local maxima, boundaries included; a plateau is
  // represented by its middle index.
  std::vector<std::size_t> peaks;
  std::size_t i = 0;
  while (i < d.size()) {
    std::size_t j = i;
    while (j + 1 < d.size() && d[j + 1] == d[i]) {
      ++j;
    }
    const bool rises_in = (i == 0) || (d[i - 1] < d[i]);
    const bool falls_out = (j + 1 == d.size()) || (d[j + 1] < d[i]);
    if (rises_in && falls_out) {
      peaks.push_back((i + j) / 2);
    }
    i = j + 1;
  }

  // Topographic prominence: walk outward from the peak on each side until
  // the boundary or strictly higher ground, track the lowest point seen, and
  // measure the drop to the higher of the two bases. Shoulder ripple on the
  // flank of a taller mode then scores only its local saddle depth instead
  // of the full descent into the tails, so approximation wiggle is ignored
  // while genuinely separated modes keep their full height. A plateau
  // spanning the whole grid has no higher ground and no drop, so it never
  // counts.
  for (const std::size_t p : peaks) {
    double left_base = d[p];
    for (std::size_t k = p; d[k] <= d[p]; --k) {
      left_base = std::fmin(left_base, d[k]);
      if (k == 0) {
        break;
      }
    }
    double right_base = d[p];
    for (std::size_t k = p; d[k] <= d[p]; ++k) {
      right_base = std::fmin(right_base, d[k]);
      if (k + 1 == d.size()) {
        break;
      }
    }
    if (d[p] - std::fmax(left_base, right_base) > threshold) {
      modes.push_back(g.grid[p]);
    }
  }
  return modes;
}

}  // namespace tmvi
