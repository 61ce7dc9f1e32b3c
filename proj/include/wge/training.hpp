#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wge/lattice.hpp"
#include "wge/types.hpp"

namespace wge::train {

// Fixed set of parameter values at which pseudo-data is simulated.
struct Design {
  std::vector<ParamVector> points;
  Bounds bounds;

  int dim() const { return bounds.dim(); }
  int size() const { return static_cast<int>(points.size()); }
};

// Full-factorial equally spaced grid including endpoints; 1-D reduces to a
// linspace. counts are per dimension, each >= 2.
Design make_design(const Bounds& bounds, const std::vector<int>& counts);

// The p-1 midpoints of a sorted 1-D design, for held-out testing.
Design midpoint_test_design(const Design& design);

enum class Sampler { Auto, SwendsenWang, Gibbs };

struct SimulateConfig {
  int width = 64;
  int height = 64;
  int q = 100;       // replicates per design point
  int sweeps = 10;   // thinning between recorded replicates
  int burnin = 500;  // sweeps discarded before the first record
  Sampler sampler = Sampler::Auto;
};

// Sample moments of the simulated sufficient statistics at each design point,
// with the Monte Carlo error variances used as fixed GP noise:
//   tau2_mu = v / q,  tau2_sigma = 2 v^2 / (q - 1),
// both floored at 1e-12 to keep noise matrices positive definite.
struct TrainingTable {
  int D = 0;
  int p = 0;
  std::vector<ParamVector> beta;  // p design points
  Eigen::MatrixXd m;              // p x D sample means
  Eigen::MatrixXd v;              // p x D sample variances
  Eigen::MatrixXd tau2_mu;        // p x D
  Eigen::MatrixXd tau2_sigma;     // p x D
  int q = 0;

  // provenance
  lattice::ModelSpec spec;
  SimulateConfig sim;
  std::uint64_t seed = 0;
};

// Simulates design points independently (one seed-split chain per point;
// results assembled in design order regardless of worker count).
TrainingTable simulate_training_table(const Design& design,
                                      const lattice::ModelSpec& spec,
                                      const SimulateConfig& sim,
                                      std::uint64_t seed, int workers = 1);

// CSV with header d,j,beta_1[,beta_2],m,v,tau2_mu,tau2_sigma,q plus a JSON
// sidecar (<path>.meta.json) for provenance.
void save_table_csv(const std::string& path, const TrainingTable& table);
TrainingTable load_table_csv(const std::string& path);

// FNV-1a over the canonical CSV serialization.
std::uint64_t table_hash(const TrainingTable& table);

}  // namespace wge::train
