#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wge/gp.hpp"
#include "wge/types.hpp"

namespace wge::synlik {

// Synthetic log-likelihood: sum over statistics of the normal log density
// N(s_obs; mu, sigma2). Any nonpositive variance yields -inf unless flooring
// (at 1e-12) is enabled.
double synthetic_loglik(const Eigen::VectorXd& s_obs, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& sigma2, bool floor = false);

// log of the mean of exp(per-realization log-likelihoods), max-shifted.
double synthetic_loglik_averaged(const Eigen::VectorXd& s_obs,
                                 const std::vector<gp::Prediction>& realizations,
                                 bool floor = false);

// A surrogate log-likelihood as a plain function of beta. Counted flooring
// lets grid construction report how many cells needed it.
using LogLikFn = std::function<double(const ParamVector&)>;

enum class LikMode { Plugin, Averaged };

// Plugin mode evaluates approach 1; averaged mode draws r realizations with a
// seed derived deterministically from the bits of beta, so the likelihood is
// a fixed function of beta (required inside MCMC).
LogLikFn surrogate_loglik(const gp::FittedSurrogate& fs,
                          const Eigen::VectorXd& s_obs, LikMode mode,
                          int r = 100, std::uint64_t seed = 0,
                          bool floor = true);

// Surrogate replaced by the enumeration oracle (tests, benchmark checks).
LogLikFn exact_moment_loglik(const lattice::ModelSpec& spec, int width,
                             int height, const Eigen::VectorXd& s_obs);

// Cell-centered full-factorial grid over the prior box with normalized
// weights; the surrogate posterior distribution of the grid approximation.
struct GridPosterior {
  Bounds bounds;
  std::vector<int> counts;
  std::vector<ParamVector> points;  // row-major over dimensions
  Eigen::VectorXd log_density;      // unnormalized log posterior
  Eigen::VectorXd weights;          // sum to 1
  double cell_volume = 0.0;
  int floored_cells = 0;
};

// Evaluates log prior + log likelihood at every cell center (uniform prior
// over the box, so the prior contributes a constant inside). Embarrassingly
// parallel over points with a deterministic index-order reduction.
GridPosterior build_grid_posterior(const LogLikFn& loglik, const Bounds& prior,
                                   const std::vector<int>& counts,
                                   int workers = 1);

// Categorical draw over cells plus uniform jitter within the cell.
std::vector<ParamVector> sample_grid(const GridPosterior& grid, int T,
                                     std::uint64_t seed);

// Argmax cell center of a grid built from the likelihood alone; ties broken
// by lowest linear index.
ParamVector surrogate_mle(const GridPosterior& grid);

// CSV: point coordinates, log_density, weight.
void save_grid_csv(const std::string& path, const GridPosterior& grid);

}  // namespace wge::synlik
