#include "wge/gp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wge/errors.hpp"
#include "wge/io.hpp"
#include "wge/rng.hpp"

namespace wge::gp {

using nlohmann::json;
using train::TrainingTable;

std::string kind_name(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::SGP: return "S-GP";
    case SurrogateKind::NSGP: return "NS-GP";
    case SurrogateKind::GENSGP: return "GE-NS-GP";
  }
  return "?";
}

SurrogateKind kind_from_name(const std::string& name) {
  std::string s;
  for (char c : name) {
    if (c != '-' && c != '_') s.push_back(static_cast<char>(std::tolower(c)));
  }
  if (s == "sgp") return SurrogateKind::SGP;
  if (s == "nsgp") return SurrogateKind::NSGP;
  if (s == "gensgp") return SurrogateKind::GENSGP;
  throw InvalidInputError("unknown surrogate kind: " + name);
}

// ---------------------------------------------------------------------------
// Cross-covariances. With axial warping, only dimension d of the warp enters
// the derivative of statistic d, so each derivative order contributes a
// single scalar warp_deriv factor.
// ---------------------------------------------------------------------------

namespace {

// cov(g~(A), g~(B))
inline double cc_gg(const Matern32Kernel& k, const Eigen::VectorXd& wA,
                    const Eigen::VectorXd& wB) {
  return kernel_eval(k, wA, wB);
}
// cov(h~(A), g~(B)): derivative at the first argument
inline double cc_hg(const Matern32Kernel& k, const Eigen::VectorXd& wA,
                    const Eigen::VectorXd& wB, int d, double fpA) {
  return kernel_d1(k, wA, wB, d) * fpA;
}
// cov(g~(A), h~(B)): derivative at the second argument
inline double cc_gh(const Matern32Kernel& k, const Eigen::VectorXd& wA,
                    const Eigen::VectorXd& wB, int d, double fpB) {
  return -kernel_d1(k, wA, wB, d) * fpB;
}
// cov(h~(A), h~(B))
inline double cc_hh(const Matern32Kernel& k, const Eigen::VectorXd& wA,
                    const Eigen::VectorXd& wB, int d, double fpA, double fpB) {
  return kernel_d2(k, wA, wB, d) * fpA * fpB;
}

}  // namespace

Eigen::Matrix2d cross_cov_block(const Matern32Kernel& kernel,
                                const AxialWarping& warping,
                                const ParamVector& beta_j,
                                const ParamVector& beta_l, int d) {
  const Eigen::VectorXd wj = warp(warping, beta_j);
  const Eigen::VectorXd wl = warp(warping, beta_l);
  const double fpj = warp_deriv(warping, d, beta_j[d]);
  const double fpl = warp_deriv(warping, d, beta_l[d]);
  Eigen::Matrix2d block;
  block(0, 0) = cc_gg(kernel, wj, wl);
  block(0, 1) = cc_gh(kernel, wj, wl, d, fpl);
  block(1, 0) = cc_hg(kernel, wj, wl, d, fpj);
  block(1, 1) = cc_hh(kernel, wj, wl, d, fpj, fpl);
  return block;
}

// ---------------------------------------------------------------------------
// Training-system assembly
// ---------------------------------------------------------------------------

namespace {

struct System {
  Eigen::MatrixXd cov;        // without noise
  Eigen::VectorXd noise;      // diagonal
  Eigen::VectorXd residual;   // obs - trend
  Eigen::VectorXd obs;
  Eigen::MatrixXd warped;     // p x D
  Eigen::VectorXd warp_fp;    // p
  double trend_b = 0.0;
};

System assemble(SurrogateKind kind, const TrainingTable& table, int d,
                const Matern32Kernel& kernel, const AxialWarping& warping) {
  const int p = table.p;
  const int D = table.D;
  System sys;
  sys.trend_b = table.m.col(d).mean();
  sys.warped.resize(p, D);
  sys.warp_fp.resize(p);
  for (int j = 0; j < p; ++j) {
    sys.warped.row(j) = warp(warping, table.beta[j]).transpose();
    sys.warp_fp[j] = warp_deriv(warping, d, table.beta[j][d]);
  }

  if (kind != SurrogateKind::GENSGP) {
    sys.cov.resize(p, p);
    for (int j = 0; j < p; ++j) {
      for (int l = j; l < p; ++l) {
        const double kv = cc_gg(kernel, sys.warped.row(j), sys.warped.row(l));
        sys.cov(j, l) = kv;
        sys.cov(l, j) = kv;
      }
    }
    sys.noise = table.tau2_mu.col(d);
    sys.obs = table.m.col(d);
    sys.residual = sys.obs.array() - sys.trend_b;
    return sys;
  }

  // stacked (means, variances) with the derivative cross-covariance blocks
  sys.cov.resize(2 * p, 2 * p);
  for (int j = 0; j < p; ++j) {
    for (int l = 0; l < p; ++l) {
      const Eigen::VectorXd wj = sys.warped.row(j), wl = sys.warped.row(l);
      sys.cov(j, l) = cc_gg(kernel, wj, wl);
      sys.cov(j, p + l) = cc_gh(kernel, wj, wl, d, sys.warp_fp[l]);
      sys.cov(p + j, l) = cc_hg(kernel, wj, wl, d, sys.warp_fp[j]);
      sys.cov(p + j, p + l) =
          cc_hh(kernel, wj, wl, d, sys.warp_fp[j], sys.warp_fp[l]);
    }
  }
  sys.noise.resize(2 * p);
  sys.noise.head(p) = table.tau2_mu.col(d);
  sys.noise.tail(p) = table.tau2_sigma.col(d);
  sys.obs.resize(2 * p);
  sys.obs.head(p) = table.m.col(d);
  sys.obs.tail(p) = table.v.col(d);
  sys.residual = sys.obs;
  sys.residual.head(p).array() -= sys.trend_b;  // variance rows have zero trend
  return sys;
}

// Cholesky with an escalating jitter ladder (relative to xi2).
bool factorize(const System& sys, double xi2, double jitter_rel_max,
               Eigen::LLT<Eigen::MatrixXd>* llt, double* jitter_used) {
  const int n = static_cast<int>(sys.cov.rows());
  Eigen::MatrixXd s = sys.cov;
  s.diagonal() += sys.noise;
  for (double rel : {0.0, 1e-10, 1e-8, jitter_rel_max}) {
    Eigen::MatrixXd sj = s;
    sj.diagonal().array() += rel * xi2;
    llt->compute(sj);
    if (llt->info() == Eigen::Success) {
      // Eigen's LLT can succeed with non-finite input; double-check.
      bool finite = true;
      for (int i = 0; i < n && finite; ++i)
        finite = std::isfinite(llt->matrixLLT()(i, i)) &&
                 llt->matrixLLT()(i, i) > 0.0;
      if (finite) {
        *jitter_used = rel * xi2;
        return true;
      }
    }
    if (rel >= jitter_rel_max) break;
  }
  return false;
}

double lml_from(const System& sys, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const int n = static_cast<int>(sys.residual.size());
  const Eigen::VectorXd alpha = llt.solve(sys.residual);
  double logdet_half = 0.0;
  for (int i = 0; i < n; ++i) logdet_half += std::log(llt.matrixLLT()(i, i));
  return -0.5 * sys.residual.dot(alpha) - logdet_half -
         0.5 * n * std::log(2.0 * M_PI);
}

Bounds bounds_from_table(const TrainingTable& table) {
  Bounds b;
  const int D = table.D;
  b.lo = Eigen::VectorXd::Constant(D, std::numeric_limits<double>::infinity());
  b.hi = Eigen::VectorXd::Constant(D, -std::numeric_limits<double>::infinity());
  for (const auto& beta : table.beta) {
    b.lo = b.lo.cwiseMin(beta);
    b.hi = b.hi.cwiseMax(beta);
  }
  b.validate();
  return b;
}

}  // namespace

double log_marginal_likelihood(SurrogateKind kind, const TrainingTable& table,
                               int d, const PerStatHyper& hyper,
                               const Bounds& bounds) {
  (void)bounds;
  const System sys = assemble(kind, table, d, hyper.kernel, hyper.warping);
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  if (!factorize(sys, hyper.kernel.xi2, 1e-6, &llt, &jitter))
    return -std::numeric_limits<double>::infinity();
  return lml_from(sys, llt);
}

FittedSurrogate make_surrogate(SurrogateKind kind, const TrainingTable& table,
                               const std::vector<PerStatHyper>& hyper,
                               std::optional<Bounds> bounds,
                               double jitter_rel_max) {
  if (static_cast<int>(hyper.size()) != table.D)
    throw InvalidInputError("need one hyperparameter set per statistic");
  FittedSurrogate fs;
  fs.kind = kind;
  fs.bounds = bounds ? *bounds : bounds_from_table(table);
  fs.table = table;
  fs.table_hash = train::table_hash(table);
  fs.stats.resize(table.D);
  for (int d = 0; d < table.D; ++d) {
    PerStatModel& m = fs.stats[d];
    m.kernel = hyper[d].kernel;
    m.warping = kind == SurrogateKind::SGP ? AxialWarping::identity(fs.bounds)
                                           : hyper[d].warping;
    const System sys = assemble(kind, table, d, m.kernel, m.warping);
    m.trend_b = sys.trend_b;
    m.warped_train = sys.warped;
    m.warp_deriv_train = sys.warp_fp;
    m.obs = sys.obs;
    if (!factorize(sys, m.kernel.xi2, jitter_rel_max, &m.chol, &m.jitter_used))
      throw IllConditionedError(
          "training covariance factorization failed (statistic " +
          std::to_string(d + 1) + ", xi2=" + fmt_g17(m.kernel.xi2) +
          ", a=" + fmt_g17(m.kernel.a) + ")");
    m.alpha = m.chol.solve(sys.residual);
  }
  return fs;
}

// ---------------------------------------------------------------------------
// Maximum-likelihood fitting
// ---------------------------------------------------------------------------

namespace {

inline double softplus(double u) {
  return u > 40.0 ? u : std::log1p(std::exp(u));
}
inline double softplus_inv(double y) {
  if (y <= 0.0) throw InvalidInputError("softplus_inv needs y > 0");
  return y > 40.0 ? y : std::log(std::expm1(y));
}

struct ParamPack {
  SurrogateKind kind;
  int D = 0;
  int n_layers = 1;
  int n_basis = 0;
  bool warped = false;

  int size() const {
    return 2 + (warped ? D * n_layers * (n_basis + 1) : 0);
  }

  PerStatHyper unpack(const Eigen::VectorXd& th, const Bounds& bounds) const {
    PerStatHyper h;
    h.kernel.xi2 = std::exp(th[0]);
    h.kernel.a = std::exp(th[1]);
    if (!warped) {
      h.warping = AxialWarping::identity(bounds);
      return h;
    }
    h.warping = AxialWarping::sigmoid_grid(bounds, n_basis, n_layers);
    int c = 2;
    for (int dim = 0; dim < D; ++dim) {
      for (int l = 0; l < n_layers; ++l) {
        auto& wv = h.warping.layers[dim][l].weights;
        for (int b = 0; b < wv.size(); ++b) wv[b] = softplus(th[c++]);
      }
    }
    return h;
  }

  Eigen::VectorXd pack(const PerStatHyper& h) const {
    Eigen::VectorXd th(size());
    th[0] = std::log(h.kernel.xi2);
    th[1] = std::log(h.kernel.a);
    if (warped) {
      int c = 2;
      for (int dim = 0; dim < D; ++dim) {
        for (int l = 0; l < n_layers; ++l) {
          const auto& wv = h.warping.layers[dim][l].weights;
          for (int b = 0; b < wv.size(); ++b)
            th[c++] = softplus_inv(std::max(wv[b], 1e-9));
        }
      }
    }
    return th;
  }
};

// piecewise-linear interpolation of the per-coordinate profile of v along one
// input dimension; used to seed the warping weights with the empirical slope
// of the mean statistic (Eq.-style: the variance is that slope).
class SlopeProfile {
 public:
  SlopeProfile(const TrainingTable& table, int stat_d, int dim) {
    std::vector<std::pair<double, std::pair<double, int>>> acc;
    for (int j = 0; j < table.p; ++j) {
      const double x = table.beta[j][dim];
      bool found = false;
      for (auto& e : acc) {
        if (std::abs(e.first - x) < 1e-12) {
          e.second.first += table.v(j, stat_d);
          e.second.second += 1;
          found = true;
          break;
        }
      }
      if (!found) acc.push_back({x, {table.v(j, stat_d), 1}});
    }
    std::sort(acc.begin(), acc.end());
    for (const auto& e : acc) {
      xs_.push_back(e.first);
      vs_.push_back(e.second.first / e.second.second);
    }
  }

  double at(double x) const {
    if (x <= xs_.front()) return vs_.front();
    if (x >= xs_.back()) return vs_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return (1.0 - t) * vs_[i - 1] + t * vs_[i];
  }

 private:
  std::vector<double> xs_, vs_;
};

// Deterministic cyclic coordinate search with per-coordinate adaptive steps.
// Returns the best objective value found; th is updated in place.
template <typename Obj>
double coordinate_search(Obj&& obj, Eigen::VectorXd& th, double f0,
                         int max_evals) {
  const int n = static_cast<int>(th.size());
  Eigen::VectorXd step = Eigen::VectorXd::Constant(n, 1.0);
  step[0] = 0.7;
  step[1] = 0.7;
  double best = f0;
  int evals = 0;
  while (evals < max_evals) {
    bool any_improved = false;
    for (int i = 0; i < n && evals < max_evals; ++i) {
      const double old = th[i];
      th[i] = old + step[i];
      double f = obj(th);
      ++evals;
      if (f > best) {
        best = f;
        step[i] = std::min(step[i] * 1.8, 4.0);
        any_improved = true;
        continue;
      }
      if (evals >= max_evals) {
        th[i] = old;
        break;
      }
      th[i] = old - step[i];
      f = obj(th);
      ++evals;
      if (f > best) {
        best = f;
        step[i] = std::min(step[i] * 1.8, 4.0);
        any_improved = true;
        continue;
      }
      th[i] = old;
      step[i] *= 0.55;
    }
    if (!any_improved && step.maxCoeff() < 1e-5) break;
  }
  return best;
}

}  // namespace

PerStatHyper fit_initial_guess(SurrogateKind kind, const TrainingTable& table,
                               int d, const FitConfig& cfg,
                               const Bounds& bounds) {
  PerStatHyper h;
  const Eigen::VectorXd m = table.m.col(d);
  const double var_m =
      (m.array() - m.mean()).square().sum() / std::max(table.p - 1, 1);
  h.kernel.xi2 = std::max(var_m, 1e-8);
  h.kernel.a = 8.0 / ((bounds.hi - bounds.lo).mean());

  if (kind == SurrogateKind::SGP) {
    h.warping = AxialWarping::identity(bounds);
    return h;
  }
  h.warping = AxialWarping::sigmoid_grid(bounds, cfg.n_basis, cfg.n_layers);
  if (!cfg.data_driven_init) {
    for (auto& per_dim : h.warping.layers)
      for (auto& layer : per_dim)
        for (int b = 1; b < layer.weights.size(); ++b) layer.weights[b] = 1e-6;
    return h;
  }
  // Seed dimension d of statistic d's warp with the empirical slope profile
  // (the observed sample variances); other dimensions start near identity.
  for (int dim = 0; dim < table.D; ++dim) {
    auto& layer0 = h.warping.layers[dim][0];
    const double span = layer0.hi - layer0.lo;
    if (dim == d) {
      const SlopeProfile prof(table, d, dim);
      Eigen::VectorXd w(layer0.centers.size());
      double wsum = 0.0;
      for (int b = 0; b < layer0.centers.size(); ++b) {
        w[b] = prof.at(layer0.centers[b]);
        wsum += w[b];
      }
      if (wsum > 0.0) {
        w *= span / wsum;
        w = w.cwiseMax(1e-6);
        layer0.weights[0] = 0.05;
        layer0.weights.tail(w.size()) = w;
      } else {
        for (int b = 1; b < layer0.weights.size(); ++b) layer0.weights[b] = 1e-6;
      }
    } else {
      for (int b = 1; b < layer0.weights.size(); ++b) layer0.weights[b] = 1e-6;
    }
    // deeper layers stay at identity
    for (std::size_t l = 1; l < h.warping.layers[dim].size(); ++l) {
      auto& layer = h.warping.layers[dim][l];
      for (int b = 1; b < layer.weights.size(); ++b) layer.weights[b] = 1e-6;
    }
  }
  return h;
}

FittedSurrogate fit(SurrogateKind kind, const TrainingTable& table,
                    const FitConfig& cfg, std::uint64_t seed) {
  if (table.p < 3)
    throw InvalidInputError("fit requires at least 3 design points");
  const Bounds bounds = cfg.bounds ? *cfg.bounds : bounds_from_table(table);

  std::vector<PerStatHyper> best(table.D);
  for (int d = 0; d < table.D; ++d) {
    ParamPack pack;
    pack.kind = kind;
    pack.D = table.D;
    pack.n_layers = cfg.n_layers;
    pack.n_basis = cfg.n_basis;
    pack.warped = kind != SurrogateKind::SGP;

    auto objective = [&](const Eigen::VectorXd& th) {
      // soft box on the log-scale parameters keeps the search sane
      if (th[0] < -40.0 || th[0] > 60.0 || th[1] < -20.0 || th[1] > 25.0)
        return -std::numeric_limits<double>::infinity();
      const PerStatHyper h = pack.unpack(th, bounds);
      return log_marginal_likelihood(kind, table, d, h, bounds);
    };

    const PerStatHyper guess = fit_initial_guess(kind, table, d, cfg, bounds);
    const Eigen::VectorXd th_guess = pack.pack(guess);

    PerStatHyper identity_guess = guess;
    if (pack.warped) {
      FitConfig id_cfg = cfg;
      id_cfg.data_driven_init = false;
      identity_guess = fit_initial_guess(kind, table, d, id_cfg, bounds);
    }
    const Eigen::VectorXd th_identity = pack.pack(identity_guess);

    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(d)));
    double best_f = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_th;
    for (int s = 0; s < cfg.n_starts; ++s) {
      Eigen::VectorXd th;
      if (s == 0) {
        th = th_guess;
      } else if (s == 1) {
        th = th_identity;
      } else {
        th = th_guess;
        th[0] += rng.normal() * 0.7;
        th[1] += rng.normal() * 0.7;
        for (int i = 2; i < th.size(); ++i) th[i] += rng.normal() * 0.5;
      }
      double f = objective(th);
      f = coordinate_search(objective, th, f, cfg.max_evals_per_start);
      // strict > keeps the lowest start index on ties
      if (f > best_f) {
        best_f = f;
        best_th = th;
      }
    }
    if (!std::isfinite(best_f)) {
      std::ostringstream msg;
      msg << "fit failed for statistic " << (d + 1)
          << ": non-finite log marginal likelihood at all starts"
          << " (xi2=" << fmt_g17(std::exp(th_guess[0]))
          << ", a=" << fmt_g17(std::exp(th_guess[1])) << ")";
      throw FitFailedError(msg.str());
    }
    best[d] = pack.unpack(best_th, bounds);
  }
  return make_surrogate(kind, table, best, bounds, cfg.jitter_rel_max);
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

namespace {

// cross-covariance vectors between (g~(beta*), h~(beta*)) and the
// observation vector of statistic d
void predict_vectors(const FittedSurrogate& fs, int d,
                     const ParamVector& beta, Eigen::VectorXd* k_g,
                     Eigen::VectorXd* k_h, double* fp_star) {
  const PerStatModel& m = fs.stats[d];
  const int p = fs.table.p;
  const Eigen::VectorXd ws = warp(m.warping, beta);
  const double fp = warp_deriv(m.warping, d, beta[d]);
  *fp_star = fp;
  const bool ge = fs.kind == SurrogateKind::GENSGP;
  const int n = ge ? 2 * p : p;
  k_g->resize(n);
  k_h->resize(n);
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd wj = m.warped_train.row(j);
    (*k_g)[j] = cc_gg(m.kernel, ws, wj);
    (*k_h)[j] = cc_hg(m.kernel, ws, wj, d, fp);
    if (ge) {
      (*k_g)[p + j] = cc_gh(m.kernel, ws, wj, d, m.warp_deriv_train[j]);
      (*k_h)[p + j] = cc_hh(m.kernel, ws, wj, d, fp, m.warp_deriv_train[j]);
    }
  }
}

}  // namespace

Prediction predict_plugin(const FittedSurrogate& fs, const ParamVector& beta,
                          bool floor_variance) {
  if (beta.size() != fs.table.D) throw InvalidInputError("beta dimension mismatch");
  Prediction out;
  out.mu.resize(fs.table.D);
  out.sigma2.resize(fs.table.D);
  for (int d = 0; d < fs.table.D; ++d) {
    Eigen::VectorXd k_g, k_h;
    double fp = 0.0;
    predict_vectors(fs, d, beta, &k_g, &k_h, &fp);
    const PerStatModel& m = fs.stats[d];
    out.mu[d] = m.trend_b + k_g.dot(m.alpha);
    out.sigma2[d] = k_h.dot(m.alpha);
    if (floor_variance) out.sigma2[d] = std::max(out.sigma2[d], 1e-12);
  }
  return out;
}

void posterior_joint(const FittedSurrogate& fs, const ParamVector& beta, int d,
                     Eigen::Vector2d* mean, Eigen::Matrix2d* cov) {
  Eigen::VectorXd k_g, k_h;
  double fp = 0.0;
  predict_vectors(fs, d, beta, &k_g, &k_h, &fp);
  const PerStatModel& m = fs.stats[d];
  (*mean)[0] = m.trend_b + k_g.dot(m.alpha);
  (*mean)[1] = k_h.dot(m.alpha);

  Eigen::MatrixXd u(k_g.size(), 2);
  u.col(0) = k_g;
  u.col(1) = k_h;
  const Eigen::MatrixXd v = m.chol.solve(u);
  Eigen::Matrix2d prior;
  prior << m.kernel.xi2, 0.0, 0.0, m.kernel.xi2 * m.kernel.a * m.kernel.a * fp * fp;
  *cov = prior - u.transpose() * v;
  (*cov)(0, 1) = (*cov)(1, 0) = 0.5 * ((*cov)(0, 1) + (*cov)(1, 0));
}

std::vector<Prediction> predict_sampled(const FittedSurrogate& fs,
                                        const ParamVector& beta, int r,
                                        std::uint64_t seed) {
  if (r < 1) throw InvalidInputError("predict_sampled needs r >= 1");
  std::vector<Prediction> out(r);
  for (auto& pr : out) {
    pr.mu.resize(fs.table.D);
    pr.sigma2.resize(fs.table.D);
  }
  for (int d = 0; d < fs.table.D; ++d) {
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
    posterior_joint(fs, beta, d, &mean, &cov);

    // 2x2 Cholesky with clamping of small negative pivots; anything clearly
    // indefinite is a hard error.
    const double scale =
        std::max({std::abs(cov(0, 0)), std::abs(cov(1, 1)), fs.stats[d].kernel.xi2});
    if (cov(0, 0) < -1e-8 * scale)
      throw IllConditionedError("posterior covariance not positive semidefinite");
    const double l00 = std::sqrt(std::max(cov(0, 0), 0.0));
    const double l10 = l00 > 0.0 ? cov(1, 0) / l00 : 0.0;
    const double rem = cov(1, 1) - l10 * l10;
    if (rem < -1e-8 * scale)
      throw IllConditionedError("posterior covariance not positive semidefinite");
    const double l11 = std::sqrt(std::max(rem, 0.0));

    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(d)));
    for (int i = 0; i < r; ++i) {
      const double z0 = rng.normal();
      const double z1 = rng.normal();
      out[i].mu[d] = mean[0] + l00 * z0;
      out[i].sigma2[d] = mean[1] + l10 * z0 + l11 * z1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void save_surrogate(const std::string& path, const FittedSurrogate& fs) {
  json doc;
  doc["format"] = "wge-surrogate";
  doc["version"] = 1;
  doc["kind"] = kind_name(fs.kind);
  doc["table_hash"] = fs.table_hash;
  doc["bounds"]["lo"] = std::vector<double>(fs.bounds.lo.data(),
                                            fs.bounds.lo.data() + fs.bounds.dim());
  doc["bounds"]["hi"] = std::vector<double>(fs.bounds.hi.data(),
                                            fs.bounds.hi.data() + fs.bounds.dim());
  for (const auto& m : fs.stats) {
    json stat;
    stat["trend_b"] = m.trend_b;
    stat["xi2"] = m.kernel.xi2;
    stat["a"] = m.kernel.a;
    json warping = json::array();
    for (const auto& per_dim : m.warping.layers) {
      json dim_layers = json::array();
      for (const auto& layer : per_dim) {
        json jl;
        jl["lo"] = layer.lo;
        jl["hi"] = layer.hi;
        jl["sharpness"] = layer.sharpness;
        jl["centers"] = std::vector<double>(
            layer.centers.data(), layer.centers.data() + layer.centers.size());
        jl["weights"] = std::vector<double>(
            layer.weights.data(), layer.weights.data() + layer.weights.size());
        dim_layers.push_back(jl);
      }
      warping.push_back(dim_layers);
    }
    stat["warping"] = warping;
    doc["stats"].push_back(stat);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

FittedSurrogate load_surrogate(const std::string& path,
                               const TrainingTable& table) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open for reading: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || doc.value("format", "") != "wge-surrogate")
    throw InvalidInputError("not a surrogate file: " + path);
  if (doc.value("version", 0) != 1)
    throw InvalidInputError("unsupported surrogate version in " + path);
  const std::uint64_t expect = doc.value("table_hash", std::uint64_t{0});
  if (expect != train::table_hash(table))
    throw InvalidInputError("surrogate was fitted to a different training table");

  const SurrogateKind kind = kind_from_name(doc.at("kind").get<std::string>());
  Bounds bounds;
  const auto lo = doc.at("bounds").at("lo").get<std::vector<double>>();
  const auto hi = doc.at("bounds").at("hi").get<std::vector<double>>();
  bounds.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
  bounds.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size());

  std::vector<PerStatHyper> hyper;
  for (const auto& stat : doc.at("stats")) {
    PerStatHyper h;
    h.kernel.xi2 = stat.at("xi2").get<double>();
    h.kernel.a = stat.at("a").get<double>();
    h.warping.layers.clear();
    for (const auto& dim_layers : stat.at("warping")) {
      std::vector<AxialLayer> per_dim;
      for (const auto& jl : dim_layers) {
        AxialLayer layer;
        layer.lo = jl.at("lo").get<double>();
        layer.hi = jl.at("hi").get<double>();
        layer.sharpness = jl.at("sharpness").get<double>();
        const auto cs = jl.at("centers").get<std::vector<double>>();
        const auto ws = jl.at("weights").get<std::vector<double>>();
        layer.centers = Eigen::Map<const Eigen::VectorXd>(cs.data(), cs.size());
        layer.weights = Eigen::Map<const Eigen::VectorXd>(ws.data(), ws.size());
        per_dim.push_back(layer);
      }
      h.warping.layers.push_back(per_dim);
    }
    hyper.push_back(h);
  }
  return make_surrogate(kind, table, hyper, bounds);
}

}  // namespace wge::gp
