#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wge/kernel.hpp"
#include "wge/training.hpp"
#include "wge/types.hpp"
#include "wge/warping.hpp"

namespace wge::gp {

enum class SurrogateKind { SGP, NSGP, GENSGP };

std::string kind_name(SurrogateKind kind);
SurrogateKind kind_from_name(const std::string& name);

struct PerStatHyper {
  Matern32Kernel kernel;
  AxialWarping warping;
};

// One fitted statistic: constant trend b, kernel, warping, and the factorized
// training system. S-GP/NS-GP condition on the sample means only; GE-NS-GP
// conditions on the stacked (means, variances) vector where the variance rows
// observe the derivative process with zero trend.
struct PerStatModel {
  double trend_b = 0.0;
  Matern32Kernel kernel;
  AxialWarping warping;

  // caches
  Eigen::MatrixXd warped_train;      // p x D warped design points
  Eigen::VectorXd warp_deriv_train;  // p, d/dbeta_d of dimension d's axial map
  Eigen::VectorXd obs;               // p (means) or 2p (means, variances)
  Eigen::LLT<Eigen::MatrixXd> chol;  // training covariance + noise
  Eigen::VectorXd alpha;             // (C + T)^{-1} (obs - trend)
  double jitter_used = 0.0;
};

struct FittedSurrogate {
  SurrogateKind kind = SurrogateKind::SGP;
  Bounds bounds;
  train::TrainingTable table;
  std::vector<PerStatModel> stats;  // one per statistic d
  std::uint64_t table_hash = 0;
};

struct FitConfig {
  int n_basis = 100;
  int n_layers = 1;
  int n_starts = 5;
  int max_evals_per_start = 500;
  double jitter_rel_max = 1e-6;  // times xi2
  // Initialize sigmoid weights from the observed sample variances (the
  // empirical slope of the mean statistic); falls back to identity when off.
  bool data_driven_init = true;
  std::optional<Bounds> bounds;  // default: design extremes from the table
};

// The four cross-covariance entries between (g~, h~) at beta_j and beta_l for
// statistic d. Derivatives are with respect to the raw parameter, so each
// derivative order carries one warp_deriv factor:
//   [ cov(g~_j, g~_l)  cov(g~_j, h~_l) ]
//   [ cov(h~_j, g~_l)  cov(h~_j, h~_l) ]
Eigen::Matrix2d cross_cov_block(const Matern32Kernel& kernel,
                                const AxialWarping& warping,
                                const ParamVector& beta_j,
                                const ParamVector& beta_l, int d);

// Gaussian log marginal likelihood of statistic d's observations under the
// given hyperparameters (kind decides the observation vector and covariance).
double log_marginal_likelihood(SurrogateKind kind,
                               const train::TrainingTable& table, int d,
                               const PerStatHyper& hyper,
                               const Bounds& bounds);

// Builds the factorized model at fixed hyperparameters (no optimization).
FittedSurrogate make_surrogate(SurrogateKind kind,
                               const train::TrainingTable& table,
                               const std::vector<PerStatHyper>& hyper,
                               std::optional<Bounds> bounds = std::nullopt,
                               double jitter_rel_max = 1e-6);

// The deterministic start-0 hyperparameters fit() searches from.
PerStatHyper fit_initial_guess(SurrogateKind kind,
                               const train::TrainingTable& table, int d,
                               const FitConfig& cfg, const Bounds& bounds);

// Maximum-likelihood fit: per statistic, multistart (seeded) cyclic
// coordinate search over log xi2, log a and softplus-reparameterized warping
// weights. Deterministic given seed.
FittedSurrogate fit(SurrogateKind kind, const train::TrainingTable& table,
                    const FitConfig& cfg, std::uint64_t seed);

struct Prediction {
  Eigen::VectorXd mu;      // per statistic d
  Eigen::VectorXd sigma2;  // per statistic d
};

// Approach 1: mu~ = posterior mean of g~ at beta*, sigma2~ = posterior mean
// of h~ (the analytic derivative of the predictive mean). No positivity
// clipping unless floor_variance is set (floor 1e-12).
Prediction predict_plugin(const FittedSurrogate& fs, const ParamVector& beta,
                          bool floor_variance = false);

// Approach 2: r joint draws of (g~, h~) from the bivariate posterior at
// beta*, so each realization's variance is the derivative of that
// realization. Deterministic given seed.
std::vector<Prediction> predict_sampled(const FittedSurrogate& fs,
                                        const ParamVector& beta, int r,
                                        std::uint64_t seed);

// Posterior mean and 2x2 covariance of (g~, h~) at beta* for statistic d.
void posterior_joint(const FittedSurrogate& fs, const ParamVector& beta, int d,
                     Eigen::Vector2d* mean, Eigen::Matrix2d* cov);

// Versioned JSON document; factorizations are recomputed on load, and the
// stored training-table hash must match the supplied table.
void save_surrogate(const std::string& path, const FittedSurrogate& fs);
FittedSurrogate load_surrogate(const std::string& path,
                               const train::TrainingTable& table);

}  // namespace wge::gp
