#include "wge/synlik.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "wge/errors.hpp"
#include "wge/io.hpp"
#include "wge/parallel.hpp"
#include "wge/rng.hpp"

namespace wge::synlik {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}  // namespace

double synthetic_loglik(const Eigen::VectorXd& s_obs, const Eigen::VectorXd& mu,
                        const Eigen::VectorXd& sigma2, bool floor) {
  if (s_obs.size() != mu.size() || mu.size() != sigma2.size())
    throw InvalidInputError("synthetic_loglik dimension mismatch");
  double total = 0.0;
  for (int d = 0; d < s_obs.size(); ++d) {
    double s2 = sigma2[d];
    if (floor) s2 = std::max(s2, 1e-12);
    if (!(s2 > 0.0)) return kNegInf;
    const double z = s_obs[d] - mu[d];
    total += -0.5 * (kLog2Pi + std::log(s2)) - 0.5 * z * z / s2;
  }
  return total;
}

double synthetic_loglik_averaged(const Eigen::VectorXd& s_obs,
                                 const std::vector<gp::Prediction>& realizations,
                                 bool floor) {
  if (realizations.empty())
    throw InvalidInputError("need at least one realization");
  double max_l = kNegInf;
  std::vector<double> ls;
  ls.reserve(realizations.size());
  for (const auto& pr : realizations) {
    const double l = synthetic_loglik(s_obs, pr.mu, pr.sigma2, floor);
    ls.push_back(l);
    max_l = std::max(max_l, l);
  }
  if (max_l == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double l : ls) sum += std::exp(l - max_l);
  return max_l + std::log(sum) - std::log(static_cast<double>(ls.size()));
}

LogLikFn surrogate_loglik(const gp::FittedSurrogate& fs,
                          const Eigen::VectorXd& s_obs, LikMode mode, int r,
                          std::uint64_t seed, bool floor) {
  if (mode == LikMode::Plugin) {
    return [&fs, s_obs, floor](const ParamVector& beta) {
      const gp::Prediction pr = gp::predict_plugin(fs, beta, floor);
      return synthetic_loglik(s_obs, pr.mu, pr.sigma2, floor);
    };
  }
  return [&fs, s_obs, r, seed, floor](const ParamVector& beta) {
    // realization seed from the bits of beta: the averaged likelihood must be
    // a fixed function of beta for use inside a Markov chain
    std::uint64_t h = seed;
    for (int d = 0; d < beta.size(); ++d) h = mix_bits(h, beta[d]);
    const auto realizations = gp::predict_sampled(fs, beta, r, h);
    return synthetic_loglik_averaged(s_obs, realizations, floor);
  };
}

LogLikFn exact_moment_loglik(const lattice::ModelSpec& spec, int width,
                             int height, const Eigen::VectorXd& s_obs) {
  const auto hist = lattice::enumerate_stats(spec, width, height);
  return [hist, s_obs](const ParamVector& beta) {
    const auto mom = lattice::exact_moments(hist, beta);
    return synthetic_loglik(s_obs, mom.mu, mom.sigma2, true);
  };
}

GridPosterior build_grid_posterior(const LogLikFn& loglik, const Bounds& prior,
                                   const std::vector<int>& counts,
                                   int workers) {
  prior.validate();
  if (static_cast<int>(counts.size()) != prior.dim())
    throw InvalidInputError("grid counts dimension mismatch");
  for (int c : counts) {
    if (c < 2) throw InvalidInputError("need at least 2 grid points per dimension");
  }
  const int D = prior.dim();
  long total = 1;
  for (int c : counts) total *= c;

  GridPosterior grid;
  grid.bounds = prior;
  grid.counts = counts;
  grid.cell_volume = prior.volume() / static_cast<double>(total);
  grid.points.resize(total);
  grid.log_density.resize(total);

  parallel_for(static_cast<std::size_t>(total), workers, [&](std::size_t idx) {
    ParamVector beta(D);
    long rem = static_cast<long>(idx);
    for (int d = D - 1; d >= 0; --d) {
      const long i = rem % counts[d];
      rem /= counts[d];
      const double w = (prior.hi[d] - prior.lo[d]) / counts[d];
      beta[d] = prior.lo[d] + (i + 0.5) * w;
    }
    grid.points[idx] = beta;
    grid.log_density[idx] = loglik(beta);
  });

  const double max_ld = grid.log_density.maxCoeff();
  if (max_ld == kNegInf)
    throw DegeneratePosteriorError("all grid points have zero posterior density");
  grid.weights.resize(total);
  double sum = 0.0;
  for (long i = 0; i < total; ++i) {
    grid.weights[i] = std::exp(grid.log_density[i] - max_ld);
    sum += grid.weights[i];
  }
  grid.weights /= sum;
  grid.floored_cells = static_cast<int>(
      (grid.log_density.array() == kNegInf).count());
  return grid;
}

std::vector<ParamVector> sample_grid(const GridPosterior& grid, int T,
                                     std::uint64_t seed) {
  if (T < 1) throw InvalidInputError("need T >= 1 samples");
  const long n = static_cast<long>(grid.points.size());
  Eigen::VectorXd cum(n);
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    acc += grid.weights[i];
    cum[i] = acc;
  }
  const int D = grid.bounds.dim();
  std::vector<double> cell_w(D);
  for (int d = 0; d < D; ++d)
    cell_w[d] = (grid.bounds.hi[d] - grid.bounds.lo[d]) / grid.counts[d];

  std::vector<ParamVector> out(T);
  Rng rng(seed);
  for (int t = 0; t < T; ++t) {
    const double u = rng.uniform() * acc;
    const double* it = std::lower_bound(cum.data(), cum.data() + n, u);
    long idx = it - cum.data();
    if (idx >= n) idx = n - 1;
    ParamVector beta = grid.points[idx];
    for (int d = 0; d < D; ++d)
      beta[d] += (rng.uniform() - 0.5) * cell_w[d];
    out[t] = beta;
  }
  return out;
}

ParamVector surrogate_mle(const GridPosterior& grid) {
  long best = 0;
  for (long i = 1; i < static_cast<long>(grid.points.size()); ++i) {
    if (grid.log_density[i] > grid.log_density[best]) best = i;
  }
  return grid.points[best];
}

void save_grid_csv(const std::string& path, const GridPosterior& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  const int D = grid.bounds.dim();
  for (int d = 0; d < D; ++d) out << "beta_" << (d + 1) << ",";
  out << "log_density,weight\n";
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    for (int d = 0; d < D; ++d) out << fmt_g17(grid.points[i][d]) << ",";
    out << fmt_g17(grid.log_density[i]) << "," << fmt_g17(grid.weights[i])
        << "\n";
  }
}

}  // namespace wge::synlik
