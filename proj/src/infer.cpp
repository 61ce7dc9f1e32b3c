#include "wge/infer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "wge/errors.hpp"
#include "wge/io.hpp"
#include "wge/parallel.hpp"
#include "wge/rng.hpp"

namespace wge::infer {

using lattice::LabelImage;
using lattice::ModelSpec;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

train::Sampler resolve_sampler(const ModelSpec& spec, train::Sampler s) {
  if (s != train::Sampler::Auto) return s;
  return spec.kind == lattice::ModelKind::Potts ? train::Sampler::SwendsenWang
                                                : train::Sampler::Gibbs;
}

// Fresh auxiliary chain: random initial image, aux_burnin sweeps.
Eigen::VectorXd simulate_aux_stats(const ModelSpec& spec, const ParamVector& beta,
                                   const SimConfig& sim, Rng& rng) {
  LabelImage img = lattice::random_image(spec, sim.width, sim.height, rng);
  const train::Sampler sampler = resolve_sampler(spec, sim.sampler);
  for (int s = 0; s < sim.aux_burnin; ++s) {
    if (sampler == train::Sampler::SwendsenWang)
      lattice::sw_sweep(spec, beta[0], img, rng);
    else
      lattice::gibbs_sweep(spec, beta, img, rng);
  }
  return lattice::sufficient_stats(img, spec);
}

// Per-iteration, per-purpose RNG streams. Skipping a draw in one stream
// cannot shift any other, which keeps paired runs (e.g. exchange vs.
// delayed acceptance with a constant surrogate) exactly comparable.
enum Purpose : std::uint64_t { kProp = 1, kScreen = 2, kAux = 3, kAccept = 4 };

Rng iter_rng(std::uint64_t seed, long iter, Purpose purpose) {
  return Rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(iter)), purpose));
}

void finalize_mcmc(PosteriorTrace& trace) {
  trace.ess = ess_mcmc(trace.samples, &trace.ess_degenerate, &trace.ess_clamped);
}

}  // namespace

ProposalSpec ProposalSpec::default_for(const Bounds& prior) {
  ProposalSpec p;
  p.sd = 2.4 * (prior.hi - prior.lo) / std::sqrt(12.0);
  return p;
}

PosteriorTrace exchange(const Eigen::VectorXd& s_obs, const ModelSpec& spec,
                        const Bounds& prior, const ProposalSpec& proposal,
                        long iters, long burnin, const SimConfig& sim,
                        std::uint64_t seed, bool record_iters) {
  prior.validate();
  if (iters < 1 || burnin < 0 || burnin >= iters)
    throw InvalidInputError("need 0 <= burnin < iters");
  if (proposal.sd.size() != prior.dim() || (proposal.sd.array() <= 0).any())
    throw InvalidInputError("proposal standard deviations must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  PosteriorTrace trace;
  trace.method = "exchange";
  trace.iterations = iters;
  trace.burnin = burnin;
  trace.samples.reserve(iters - burnin);

  ParamVector cur = 0.5 * (prior.lo + prior.hi);
  for (long i = 0; i < iters; ++i) {
    Rng rng_prop = iter_rng(seed, i, kProp);
    ParamVector prop(cur.size());
    for (int d = 0; d < cur.size(); ++d)
      prop[d] = cur[d] + proposal.sd[d] * rng_prop.normal();

    IterRecord rec;
    rec.proposal = prop;
    rec.in_support = prior.contains(prop);
    if (rec.in_support) {
      Rng rng_aux = iter_rng(seed, i, kAux);
      const Eigen::VectorXd s_aux = simulate_aux_stats(spec, prop, sim, rng_aux);
      rec.log_exchange_ratio = (prop - cur).dot(s_obs - s_aux);
      Rng rng_accept = iter_rng(seed, i, kAccept);
      if (std::log(rng_accept.uniform()) < rec.log_exchange_ratio) {
        cur = prop;
        rec.accepted = true;
        ++trace.stage2_accepts;
      }
    }
    if (i >= burnin) trace.samples.push_back(cur);
    if (record_iters) trace.iters.push_back(std::move(rec));
  }
  finalize_mcmc(trace);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

PosteriorTrace delayed_acceptance(const Eigen::VectorXd& s_obs,
                                  const ModelSpec& spec,
                                  const synlik::LogLikFn& surrogate,
                                  const Bounds& prior,
                                  const ProposalSpec& proposal, long iters,
                                  long burnin, const SimConfig& sim,
                                  std::uint64_t seed, bool record_iters) {
  prior.validate();
  if (iters < 1 || burnin < 0 || burnin >= iters)
    throw InvalidInputError("need 0 <= burnin < iters");
  if (proposal.sd.size() != prior.dim() || (proposal.sd.array() <= 0).any())
    throw InvalidInputError("proposal standard deviations must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  PosteriorTrace trace;
  trace.method = "delayed-acceptance";
  trace.iterations = iters;
  trace.burnin = burnin;
  trace.samples.reserve(iters - burnin);

  ParamVector cur = 0.5 * (prior.lo + prior.hi);
  double cur_loglik = surrogate(cur);

  for (long i = 0; i < iters; ++i) {
    Rng rng_prop = iter_rng(seed, i, kProp);
    ParamVector prop(cur.size());
    for (int d = 0; d < cur.size(); ++d)
      prop[d] = cur[d] + proposal.sd[d] * rng_prop.normal();

    IterRecord rec;
    rec.proposal = prop;
    rec.in_support = prior.contains(prop);
    if (rec.in_support) {
      // Stage 1: surrogate-likelihood screen (symmetric proposal, uniform
      // prior, so only the surrogate ratio remains).
      const double prop_loglik = surrogate(prop);
      rec.log_surrogate_ratio = prop_loglik - cur_loglik;
      Rng rng_screen = iter_rng(seed, i, kScreen);
      if (std::log(rng_screen.uniform()) < rec.log_surrogate_ratio) {
        rec.stage1_pass = true;
        ++trace.stage1_accepts;
        // Stage 2: auxiliary simulation corrects the surrogate back out.
        Rng rng_aux = iter_rng(seed, i, kAux);
        const Eigen::VectorXd s_aux = simulate_aux_stats(spec, prop, sim, rng_aux);
        rec.log_exchange_ratio = (prop - cur).dot(s_obs - s_aux);
        const double log_alpha2 = rec.log_exchange_ratio - rec.log_surrogate_ratio;
        Rng rng_accept = iter_rng(seed, i, kAccept);
        if (std::log(rng_accept.uniform()) < log_alpha2) {
          cur = prop;
          cur_loglik = prop_loglik;
          rec.accepted = true;
          ++trace.stage2_accepts;
        }
      }
    }
    if (i >= burnin) trace.samples.push_back(cur);
    if (record_iters) trace.iters.push_back(std::move(rec));
  }
  finalize_mcmc(trace);
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

PosteriorTrace importance_sampling(const Eigen::VectorXd& s_obs,
                                   const ModelSpec& spec,
                                   const synlik::LogLikFn& surrogate,
                                   const Bounds& prior,
                                   const ImportanceConfig& cfg,
                                   const SimConfig& sim, std::uint64_t seed) {
  if (cfg.T < 2) throw InvalidInputError("importance sampling needs T >= 2");
  const auto t0 = std::chrono::steady_clock::now();

  const synlik::GridPosterior grid =
      synlik::build_grid_posterior(surrogate, prior, cfg.grid_counts, cfg.workers);
  const ParamVector beta_hat = synlik::surrogate_mle(grid);

  PosteriorTrace trace;
  trace.method = "importance-sampling";
  trace.iterations = cfg.T;
  trace.samples = synlik::sample_grid(grid, static_cast<int>(cfg.T),
                                      mix_seed(seed, 0xB0A));

  Eigen::VectorXd logw(cfg.T);
  const std::uint64_t aux_seed = mix_seed(seed, 0xA0);
  parallel_for(static_cast<std::size_t>(cfg.T), cfg.workers, [&](std::size_t i) {
    const ParamVector& beta = trace.samples[i];
    Rng rng(mix_seed(aux_seed, i));
    const Eigen::VectorXd s_aux = simulate_aux_stats(spec, beta, sim, rng);
    logw[i] = beta.dot(s_obs) + beta_hat.dot(s_aux) - beta.dot(s_aux) -
              surrogate(beta);
  });

  const double max_lw = logw.maxCoeff();
  if (max_lw == kNegInf)
    throw DegeneratePosteriorError("all importance weights are zero");
  trace.weights = (logw.array() - max_lw).exp();
  trace.weights /= trace.weights.sum();
  trace.weights /= trace.weights.sum();  // second pass tightens the invariant

  const double ess = ess_is(trace.weights);
  trace.ess = Eigen::VectorXd::Constant(prior.dim(), ess);
  trace.weight_degeneracy_warning = ess < 10.0;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

Eigen::VectorXd ess_mcmc(const std::vector<ParamVector>& samples,
                         bool* degenerate, bool* clamped) {
  const long T = static_cast<long>(samples.size());
  if (T < 10) throw InvalidInputError("ess_mcmc needs at least 10 samples");
  const int D = static_cast<int>(samples.front().size());
  if (degenerate) *degenerate = false;
  if (clamped) *clamped = false;

  Eigen::VectorXd ess(D);
  for (int d = 0; d < D; ++d) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s[d];
    mean /= T;
    std::vector<double> x(T);
    for (long i = 0; i < T; ++i) x[i] = samples[i][d] - mean;

    auto gamma = [&](long t) {
      double g = 0.0;
      for (long i = 0; i + t < T; ++i) g += x[i] * x[i + t];
      return g / T;
    };
    const double g0 = gamma(0);
    if (!(g0 > 0.0)) {
      ess[d] = 1.0;
      if (degenerate) *degenerate = true;
      continue;
    }
    // Geyer initial positive sequence: sum paired autocorrelations while
    // positive.
    double s = 0.0;
    for (long m = 0;; ++m) {
      const long l0 = 2 * m, l1 = 2 * m + 1;
      if (l0 > T - 2) break;
      double g = gamma(l0) / g0;
      if (l1 <= T - 2) g += gamma(l1) / g0;
      if (g <= 0.0) break;
      s += g;
    }
    double tau = 2.0 * s - 1.0;
    if (tau < 1.0) {
      tau = 1.0;
      if (clamped) *clamped = true;
    }
    ess[d] = static_cast<double>(T) / tau;
  }
  return ess;
}

double ess_is(const Eigen::VectorXd& weights) {
  const double s2 = weights.squaredNorm();
  if (!(s2 > 0.0)) throw InvalidInputError("weights must not be all zero");
  return 1.0 / s2;
}

std::vector<SummaryRow> summarize(const PosteriorTrace& trace) {
  const long T = static_cast<long>(trace.samples.size());
  if (T < 1) throw InvalidInputError("empty trace");
  const int D = static_cast<int>(trace.samples.front().size());
  const bool weighted = trace.weights.size() == T;

  std::vector<SummaryRow> rows(D);
  for (int d = 0; d < D; ++d) {
    double mean = 0.0;
    for (long i = 0; i < T; ++i)
      mean += (weighted ? trace.weights[i] : 1.0 / T) * trace.samples[i][d];
    double var = 0.0;
    for (long i = 0; i < T; ++i) {
      const double dx = trace.samples[i][d] - mean;
      var += (weighted ? trace.weights[i] : 1.0 / T) * dx * dx;
    }
    rows[d].mean = mean;
    rows[d].sd = std::sqrt(std::max(var, 0.0));
    rows[d].ess = trace.ess.size() == D ? trace.ess[d] : 0.0;
    rows[d].ess_per_sec =
        trace.wall_seconds > 0.0 ? rows[d].ess / trace.wall_seconds : 0.0;
  }
  return rows;
}

Eigen::VectorXd mcse(const PosteriorTrace& trace) {
  const auto rows = summarize(trace);
  Eigen::VectorXd out(rows.size());
  for (std::size_t d = 0; d < rows.size(); ++d)
    out[d] = rows[d].ess > 0.0
                 ? rows[d].sd / std::sqrt(rows[d].ess)
                 : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// Trace files
// ---------------------------------------------------------------------------

namespace {

nlohmann::json vec_json(const ParamVector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

void write_trace_jsonl(const std::string& path, const PosteriorTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  if (!trace.iters.empty()) {
    for (std::size_t i = 0; i < trace.iters.size(); ++i) {
      const IterRecord& r = trace.iters[i];
      nlohmann::json rec;
      rec["i"] = i;
      rec["proposal"] = vec_json(r.proposal);
      rec["in_support"] = r.in_support;
      rec["stage1_pass"] = r.stage1_pass;
      rec["accepted"] = r.accepted;
      rec["log_surrogate_ratio"] = r.log_surrogate_ratio;
      rec["log_exchange_ratio"] = r.log_exchange_ratio;
      out << rec.dump() << "\n";
    }
    return;
  }
  const bool weighted = trace.weights.size() ==
                        static_cast<long>(trace.samples.size());
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    nlohmann::json rec;
    rec["i"] = i;
    rec["beta"] = vec_json(trace.samples[i]);
    if (weighted) rec["weight"] = trace.weights[i];
    out << rec.dump() << "\n";
  }
}

void write_summary_json(const std::string& path, const PosteriorTrace& trace) {
  const auto rows = summarize(trace);
  nlohmann::json doc;
  doc["method"] = trace.method;
  doc["iterations"] = trace.iterations;
  doc["burnin"] = trace.burnin;
  doc["kept_samples"] = trace.samples.size();
  doc["stage1_accepts"] = trace.stage1_accepts;
  doc["stage2_accepts"] = trace.stage2_accepts;
  doc["wall_seconds"] = trace.wall_seconds;
  doc["weight_degeneracy_warning"] = trace.weight_degeneracy_warning;
  doc["ess_degenerate"] = trace.ess_degenerate;
  doc["ess_clamped"] = trace.ess_clamped;
  for (std::size_t d = 0; d < rows.size(); ++d) {
    nlohmann::json row;
    row["dimension"] = d + 1;
    row["posterior_mean"] = rows[d].mean;
    row["posterior_sd"] = rows[d].sd;
    row["ess"] = rows[d].ess;
    row["ess_per_hour"] = rows[d].ess_per_sec * 3600.0;
    row["time_hours"] = trace.wall_seconds / 3600.0;
    doc["per_dimension"].push_back(row);
  }
  doc["config"] = trace.config_echo;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  out << doc.dump(2) << "\n";
}

void write_density_csv(const std::string& path, const PosteriorTrace& trace,
                       int bins) {
  if (trace.samples.empty()) throw InvalidInputError("empty trace");
  const long T = static_cast<long>(trace.samples.size());
  const int D = static_cast<int>(trace.samples.front().size());
  const bool weighted = trace.weights.size() == T;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  out << "dimension,bin_center,density\n";
  for (int d = 0; d < D; ++d) {
    double lo = trace.samples[0][d], hi = lo;
    for (const auto& s : trace.samples) {
      lo = std::min(lo, s[d]);
      hi = std::max(hi, s[d]);
    }
    if (!(hi > lo)) hi = lo + 1e-12;
    const double w = (hi - lo) / bins;
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(bins);
    for (long i = 0; i < T; ++i) {
      int b = static_cast<int>((trace.samples[i][d] - lo) / w);
      b = std::min(std::max(b, 0), bins - 1);
      mass[b] += weighted ? trace.weights[i] : 1.0 / T;
    }
    for (int b = 0; b < bins; ++b) {
      out << (d + 1) << "," << fmt_g17(lo + (b + 0.5) * w) << ","
          << fmt_g17(mass[b] / w) << "\n";
    }
  }
}

}  // namespace wge::infer
