#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wge/rng.hpp"
#include "wge/types.hpp"

namespace wge::lattice {

enum class ModelKind { Potts, Autologistic };

// Declares a lattice model: label alphabet and sufficient statistics.
// Neighborhood is 4-nearest-neighbor on a rectangular lattice with free
// (non-wrapping) boundary, so a WxH lattice has H*(W-1) + W*(H-1) pairs.
struct ModelSpec {
  ModelKind kind = ModelKind::Potts;
  int k = 2;  // number of labels; autologistic is fixed at 2 with alphabet {-1,+1}

  int num_stats() const { return kind == ModelKind::Potts ? 1 : 2; }

  static ModelSpec potts(int k);
  static ModelSpec autologistic();
};

// Rectangular lattice of integer labels, row-major. Potts labels are 1..k,
// autologistic labels are -1/+1.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<int> labels;

  int size() const { return width * height; }
  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
};

bool label_valid(const ModelSpec& spec, int label);
void validate_image(const LabelImage& image, const ModelSpec& spec);

int pair_count(int width, int height);

// Sufficient statistics s(z). Potts: [#matching neighbor pairs].
// Autologistic: [sum of labels, #matching neighbor pairs].
Eigen::VectorXd sufficient_stats(const LabelImage& image, const ModelSpec& spec);

// ---------------------------------------------------------------------------
// Exhaustive-enumeration oracles (small lattices only).
// ---------------------------------------------------------------------------

// Histogram of sufficient-statistic values over all k^(W*H) configurations.
// Enumerating once makes log C(beta) and the exact moments cheap at any beta.
struct StatHistogram {
  int D = 0;
  std::vector<Eigen::VectorXi> stats;
  std::vector<std::uint64_t> counts;
};

// Refuses lattices with more than 2^24 configurations.
StatHistogram enumerate_stats(const ModelSpec& spec, int width, int height);

struct Moments {
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
};

double exact_log_normconst(const StatHistogram& hist, const ParamVector& beta);
double exact_log_normconst(const ModelSpec& spec, const ParamVector& beta,
                           int width, int height);
Moments exact_moments(const StatHistogram& hist, const ParamVector& beta);
Moments exact_moments(const ModelSpec& spec, const ParamVector& beta,
                      int width, int height);

// Posterior mean/sd of beta under a uniform prior on `prior`, given observed
// statistics s_obs, by midpoint-rule quadrature of the enumerated likelihood.
struct PosteriorMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};
PosteriorMoments exact_posterior_moments(const ModelSpec& spec, int width,
                                         int height,
                                         const Eigen::VectorXd& s_obs,
                                         const Bounds& prior,
                                         int cells_per_dim);

// ---------------------------------------------------------------------------
// Samplers. Pure functions of (spec, beta, init, sweeps, seed).
// ---------------------------------------------------------------------------

LabelImage random_image(const ModelSpec& spec, int width, int height, Rng& rng);

// One Swendsen-Wang cluster update (Potts, beta >= 0). Bonds between
// equal-label neighbors open with probability 1 - exp(-beta); connected
// components are relabeled uniformly, one draw per component in
// discovery (raster) order.
void sw_sweep(const ModelSpec& spec, double beta, LabelImage& image, Rng& rng);

// One raster-scan single-site Gibbs sweep from the full conditionals.
void gibbs_sweep(const ModelSpec& spec, const ParamVector& beta,
                 LabelImage& image, Rng& rng);

LabelImage sw_sample(const ModelSpec& spec, const ParamVector& beta,
                     const LabelImage& init, int sweeps, std::uint64_t seed);
LabelImage gibbs_sample(const ModelSpec& spec, const ParamVector& beta,
                        const LabelImage& init, int sweeps, std::uint64_t seed);

// log(1 + sqrt(k)): the square-lattice Potts phase-transition point.
double critical_beta(int k);

// ---------------------------------------------------------------------------
// Plain-text image format: header "LBL <width> <height> <k>", then row-major
// whitespace-separated labels (autologistic stores -1/+1 literally).
// ---------------------------------------------------------------------------
void save_image(const std::string& path, const LabelImage& image, int k);
std::pair<LabelImage, int> load_image(const std::string& path);

}  // namespace wge::lattice
