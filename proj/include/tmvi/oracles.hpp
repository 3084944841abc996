#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tmvi/flow.hpp"
#include "tmvi/models.hpp"

namespace tmvi {

// A density sampled on a uniform, strictly increasing grid. All the
// reference comparisons (quadrature KL, total variation, mode counts)
// operate on this shared representation.
struct DensityGrid {
  std::vector<double> grid;
  std::vector<double> density;

  void validate() const;
  double spacing() const;
};

std::vector<double> make_linspace(double lo, double hi, std::size_t count);

// Beta(alpha + sum y, beta + n - sum y) from a Beta(alpha, beta) prior and
// binary observations.
std::pair<double, double> conjugate_beta_posterior(double alpha, double beta,
                                                   const Dataset& data);

double beta_pdf(double x, double alpha, double beta);

DensityGrid beta_density_grid(double alpha, double beta, std::span<const double> grid);

DensityGrid gaussian_density_grid(double mean, double sd, std::span<const double> grid);

// Flow density on a grid through the numerical inverse; exactly zero outside
// the image interval.
DensityGrid flow_density_grid(const ConstrainedFlowParams& lam, const FlowConfig& cfg,
                              std::span<const double> grid);

// KL(p || q) by the trapezoid rule, with 0 log 0 read as 0. Returns
// +infinity when p puts mass where q has none.
double quadrature_kl(const DensityGrid& p, const DensityGrid& q);

// 0.5 * integral |p - q|.
double total_variation(const DensityGrid& p, const DensityGrid& q);

struct MetropolisConfig {
  int steps = 200000;
  int burn_in = 20000;
  int thin = 10;
  double proposal_sd = 1.0;
  double init = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct McmcChain {
  std::vector<double> samples;
  double acceptance_rate = 0.0;
  int burn_in = 0;
  int thinning = 1;
};

// Random-walk Metropolis on a one-dimensional log-density. Deterministic for
// a fixed seed; the reference posterior for the non-conjugate experiments.
McmcChain metropolis(const std::function<double(double)>& log_target,
                     const MetropolisConfig& cfg);

// Normalized histogram with bins centred on the grid points. Samples beyond
// the outermost bin edges are dropped, so the result integrates to the
// fraction of the sample inside the grid.
DensityGrid histogram_density(std::span<const double> samples, std::span<const double> grid);

// Locations (grid values) of the prominent local maxima, ascending. A peak
// counts as a mode when it rises by more than min_prominence * max(density)
// above its bases, each base being the lowest point between the peak and the
// nearest strictly higher ground (or the grid boundary) on that side, and
// the higher of the two bases is the one that counts. Small shoulders on the
// flank of a taller mode therefore never register. A flat density has no
// modes.
std::vector<double> count_modes(const DensityGrid& g, double min_prominence);

}  // namespace tmvi
