#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wge/lattice.hpp"
#include "wge/synlik.hpp"
#include "wge/types.hpp"

namespace wge::infer {

// Random-walk Gaussian proposal, one standard deviation per dimension.
struct ProposalSpec {
  Eigen::VectorXd sd;

  // heuristic default: 2.4 x prior width / sqrt(12) per dimension
  static ProposalSpec default_for(const Bounds& prior);
};

// Auxiliary pseudo-data simulation: a fresh chain per iteration from a random
// initial image, burned in for aux_burnin sweeps. The burn-in approximates
// perfect simulation and is an explicit knob.
struct SimConfig {
  int width = 0;
  int height = 0;
  int aux_burnin = 50;
  train::Sampler sampler = train::Sampler::Auto;
};

// Per-iteration log for screening-property checks and JSONL export.
struct IterRecord {
  ParamVector proposal;
  bool in_support = false;
  bool stage1_pass = false;
  bool accepted = false;
  double log_surrogate_ratio = 0.0;  // log p~(z|new) - log p~(z|cur)
  double log_exchange_ratio = 0.0;   // auxiliary-variable log ratio
};

struct PosteriorTrace {
  std::string method;
  std::vector<ParamVector> samples;
  Eigen::VectorXd weights;  // empty for MCMC traces
  long iterations = 0;
  long burnin = 0;
  long stage1_accepts = 0;
  long stage2_accepts = 0;
  double wall_seconds = 0.0;
  Eigen::VectorXd ess;
  bool ess_degenerate = false;
  bool ess_clamped = false;
  bool weight_degeneracy_warning = false;
  nlohmann::json config_echo;
  std::vector<IterRecord> iters;  // populated when record_iters is set
};

// Exchange algorithm: simulate auxiliary pseudo-data at the proposal and
// accept with the ratio that cancels the intractable normalizing constants.
// `iters` counts total iterations including `burnin` discarded ones.
PosteriorTrace exchange(const Eigen::VectorXd& s_obs,
                        const lattice::ModelSpec& spec, const Bounds& prior,
                        const ProposalSpec& proposal, long iters, long burnin,
                        const SimConfig& sim, std::uint64_t seed,
                        bool record_iters = false);

// Two-stage delayed acceptance: the surrogate likelihood screens proposals
// (Stage 1); survivors pay for an auxiliary simulation whose ratio corrects
// the surrogate back out (Stage 2).
PosteriorTrace delayed_acceptance(const Eigen::VectorXd& s_obs,
                                  const lattice::ModelSpec& spec,
                                  const synlik::LogLikFn& surrogate,
                                  const Bounds& prior,
                                  const ProposalSpec& proposal, long iters,
                                  long burnin, const SimConfig& sim,
                                  std::uint64_t seed, bool record_iters = false);

struct ImportanceConfig {
  std::vector<int> grid_counts;  // surrogate-posterior grid resolution
  long T = 1000;
  int workers = 1;
};

// Importance sampling from the grid surrogate posterior with one auxiliary
// simulation per draw (parallel over draws, seed-split per index):
//   log w_i = beta_i's(z) + beta_hat's(x_i) - beta_i's(x_i) - log p~(z|beta_i)
// with beta_hat the grid surrogate MLE.
PosteriorTrace importance_sampling(const Eigen::VectorXd& s_obs,
                                   const lattice::ModelSpec& spec,
                                   const synlik::LogLikFn& surrogate,
                                   const Bounds& prior,
                                   const ImportanceConfig& cfg,
                                   const SimConfig& sim, std::uint64_t seed);

// Initial-positive-sequence autocorrelation ESS (per dimension). Constant
// chains report 1 with the degenerate flag; superefficient (antithetic)
// chains are clamped to T with the clamped flag.
Eigen::VectorXd ess_mcmc(const std::vector<ParamVector>& samples,
                         bool* degenerate = nullptr, bool* clamped = nullptr);

// 1 / sum of squared normalized weights.
double ess_is(const Eigen::VectorXd& weights);

struct SummaryRow {
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double ess_per_sec = 0.0;
};

// Weighted statistics when weights are present; times from the trace clock.
std::vector<SummaryRow> summarize(const PosteriorTrace& trace);

// Monte Carlo standard error of the posterior-mean estimate per dimension.
Eigen::VectorXd mcse(const PosteriorTrace& trace);

// Primary trace file: one JSON record per kept sample (no timing, so reruns
// are byte-identical). Summary JSON carries timing and diagnostics.
void write_trace_jsonl(const std::string& path, const PosteriorTrace& trace);
void write_summary_json(const std::string& path, const PosteriorTrace& trace);
void write_density_csv(const std::string& path, const PosteriorTrace& trace,
                       int bins = 60);

}  // namespace wge::infer
