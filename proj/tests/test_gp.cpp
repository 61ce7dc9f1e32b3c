#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "wge/gp.hpp"
#include "wge/lattice.hpp"
#include "wge/rng.hpp"
#include "test_util.hpp"

using namespace wge;
using namespace wge::gp;
using train::TrainingTable;

namespace {

// Training table filled from the enumeration oracle with tiny noise.
TrainingTable oracle_table(const lattice::ModelSpec& spec, int w, int h,
                           const Bounds& bounds, int p, double tau2 = 1e-8) {
  const auto hist = lattice::enumerate_stats(spec, w, h);
  TrainingTable t;
  t.D = spec.num_stats();
  t.p = p;
  t.q = 1000;
  t.spec = spec;
  t.m.resize(p, t.D);
  t.v.resize(p, t.D);
  t.tau2_mu.resize(p, t.D);
  t.tau2_sigma.resize(p, t.D);
  for (int j = 0; j < p; ++j) {
    ParamVector beta(1);
    beta << bounds.lo[0] + (bounds.hi[0] - bounds.lo[0]) * j / (p - 1);
    t.beta.push_back(beta);
    const auto mom = lattice::exact_moments(hist, beta);
    for (int d = 0; d < t.D; ++d) {
      t.m(j, d) = mom.mu[d];
      t.v(j, d) = mom.sigma2[d];
      t.tau2_mu(j, d) = tau2;
      t.tau2_sigma(j, d) = tau2;
    }
  }
  return t;
}

FitConfig fast_cfg() {
  FitConfig cfg;
  cfg.n_basis = 30;
  cfg.n_starts = 3;
  cfg.max_evals_per_start = 400;
  return cfg;
}

PerStatHyper hyper_of(const FittedSurrogate& fs, int d) {
  return PerStatHyper{fs.stats[d].kernel, fs.stats[d].warping};
}

}  // namespace

TEST_CASE("plugin prediction interpolates near-noiseless training data") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 21, 1e-10);

  std::vector<PerStatHyper> hyper(1);
  hyper[0].kernel = {4.0, 10.0};
  hyper[0].warping = AxialWarping::identity(bounds);
  const FittedSurrogate fs = make_surrogate(SurrogateKind::NSGP, t, hyper);
  for (int j = 0; j < t.p; ++j) {
    const Prediction pr = predict_plugin(fs, t.beta[j]);
    CHECK(testutil::rel_err(pr.mu[0], t.m(j, 0)) < 1e-6);
  }
}

TEST_CASE("NS-GP with identity warping reproduces S-GP bit for bit") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 15, 1e-6);

  std::vector<PerStatHyper> hyper(1);
  hyper[0].kernel = {2.7, 8.5};
  hyper[0].warping = AxialWarping::identity(bounds);
  const FittedSurrogate s_gp = make_surrogate(SurrogateKind::SGP, t, hyper);
  const FittedSurrogate ns_gp = make_surrogate(SurrogateKind::NSGP, t, hyper);

  Rng rng(404);
  for (int i = 0; i < 50; ++i) {
    ParamVector beta(1);
    beta << 0.3 + rng.uniform();
    const Prediction a = predict_plugin(s_gp, beta);
    const Prediction b = predict_plugin(ns_gp, beta);
    CHECK(a.mu[0] == b.mu[0]);
    CHECK(a.sigma2[0] == b.sigma2[0]);
  }
}

TEST_CASE("GE-NS-GP restricted to the mean block matches NS-GP") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 15, 1e-8);
  TrainingTable muted = t;
  muted.tau2_sigma.setConstant(1e30);  // drown the variance observations

  std::vector<PerStatHyper> hyper(1);
  hyper[0].kernel = {3.0, 9.0};
  hyper[0].warping = AxialWarping::sigmoid_grid(bounds, 10, 1);
  Rng wrng(3);
  for (auto& layer : hyper[0].warping.layers[0])
    for (int b = 0; b < layer.weights.size(); ++b)
      layer.weights[b] = 0.1 + wrng.uniform();

  const FittedSurrogate ns = make_surrogate(SurrogateKind::NSGP, t, hyper);
  const FittedSurrogate ge = make_surrogate(SurrogateKind::GENSGP, muted, hyper);
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    ParamVector beta(1);
    beta << 0.3 + rng.uniform();
    CHECK(testutil::rel_err(predict_plugin(ge, beta).mu[0],
                            predict_plugin(ns, beta).mu[0]) < 1e-8);
  }
}

TEST_CASE("surrogate-level derivative identity: sigma2~ = d mu~ / d beta") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 21, 1e-8);
  const double h = 1e-5 * (bounds.hi[0] - bounds.lo[0]);

  for (SurrogateKind kind :
       {SurrogateKind::SGP, SurrogateKind::NSGP, SurrogateKind::GENSGP}) {
    std::vector<PerStatHyper> hyper(1);
    hyper[0].kernel = {4.0, 12.0};
    hyper[0].warping = AxialWarping::sigmoid_grid(bounds, 12, 1);
    Rng wrng(21);
    for (auto& layer : hyper[0].warping.layers[0])
      for (int b = 0; b < layer.weights.size(); ++b)
        layer.weights[b] = 0.2 + wrng.uniform();
    const FittedSurrogate fs = make_surrogate(kind, t, hyper);

    Rng rng(777);
    for (int i = 0; i < 50; ++i) {
      ParamVector beta(1);
      beta << 0.31 + 0.98 * rng.uniform();
      const double fd = testutil::fd_central(
          [&](double x) {
            ParamVector b(1);
            b << x;
            return predict_plugin(fs, b).mu[0];
          },
          beta[0], h);
      const Prediction pr = predict_plugin(fs, beta);
      CHECK(testutil::rel_err(pr.sigma2[0], fd) < 1e-4);
    }
  }
}

TEST_CASE("S-GP self-consistency on data from a known stationary GP") {
  // draw a function from a known GP, observe with tiny noise, refit, and
  // check coverage of held-out points by +-2 posterior sd
  const Bounds bounds = Bounds::interval(0.0, 1.0);
  const int p = 40;
  const Matern32Kernel truth{4.0, 6.0};

  Eigen::MatrixXd cov(p, p);
  std::vector<ParamVector> pts;
  for (int j = 0; j < p; ++j) {
    ParamVector b(1);
    b << static_cast<double>(j) / (p - 1);
    pts.push_back(b);
  }
  for (int j = 0; j < p; ++j)
    for (int l = 0; l < p; ++l)
      cov(j, l) = kernel_eval(truth, pts[j][0], pts[l][0]);
  cov.diagonal().array() += 1e-10;
  const Eigen::MatrixXd L = cov.llt().matrixL();
  Rng rng(31415);
  Eigen::VectorXd z(p);
  for (int j = 0; j < p; ++j) z[j] = rng.normal();
  const Eigen::VectorXd f = L * z;

  TrainingTable t;
  t.D = 1;
  t.p = p / 2;
  t.q = 100;
  t.spec = lattice::ModelSpec::potts(2);
  t.m.resize(t.p, 1);
  t.v.resize(t.p, 1);
  t.tau2_mu.resize(t.p, 1);
  t.tau2_sigma.resize(t.p, 1);
  const double noise_sd = 1e-3;
  for (int j = 0; j < t.p; ++j) {
    t.beta.push_back(pts[2 * j]);
    t.m(j, 0) = 10.0 + f[2 * j] + noise_sd * rng.normal();
    t.v(j, 0) = 1.0;
    t.tau2_mu(j, 0) = noise_sd * noise_sd;
    t.tau2_sigma(j, 0) = 1.0;
  }

  FitConfig cfg = fast_cfg();
  cfg.bounds = bounds;
  const FittedSurrogate fs = fit(SurrogateKind::SGP, t, cfg, 99);

  int covered = 0, total = 0;
  for (int j = 0; j < p; j += 2) {
    if (j + 1 >= p) break;
    const ParamVector& beta = pts[j + 1];
    Eigen::Vector2d mean;
    Eigen::Matrix2d pc;
    posterior_joint(fs, beta, 0, &mean, &pc);
    const double sd = std::sqrt(std::max(pc(0, 0), 0.0));
    if (std::abs(mean[0] - (10.0 + f[j + 1])) <= 2.0 * sd + 3.0 * noise_sd)
      ++covered;
    ++total;
  }
  CHECK(covered >= (9 * total) / 10);
}

TEST_CASE("GE-NS-GP fits the enumerable Potts moments accurately") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 21, 1e-8);
  const auto hist = lattice::enumerate_stats(spec, 3, 3);

  FitConfig cfg = fast_cfg();
  const FittedSurrogate fs = fit(SurrogateKind::GENSGP, t, cfg, 7);

  double range_lo = t.m.col(0).minCoeff(), range_hi = t.m.col(0).maxCoeff();
  const double tol = 1e-2 * (range_hi - range_lo);
  for (int j = 0; j + 1 < t.p; ++j) {
    ParamVector mid = 0.5 * (t.beta[j] + t.beta[j + 1]);
    const auto mom = lattice::exact_moments(hist, mid);
    const Prediction pr = predict_plugin(fs, mid);
    CHECK(std::abs(pr.mu[0] - mom.mu[0]) < tol);
  }

  SUBCASE("plugin variance tracks the exact variance") {
    double s2lo = 1e300, s2hi = -1e300;
    for (int j = 0; j < t.p; ++j) {
      s2lo = std::min(s2lo, t.v(j, 0));
      s2hi = std::max(s2hi, t.v(j, 0));
    }
    for (int j = 0; j + 1 < t.p; ++j) {
      ParamVector mid = 0.5 * (t.beta[j] + t.beta[j + 1]);
      const auto mom = lattice::exact_moments(hist, mid);
      const Prediction pr = predict_plugin(fs, mid);
      CHECK(std::abs(pr.sigma2[0] - mom.sigma2[0]) < 0.05 * (s2hi - s2lo));
    }
  }

  SUBCASE("optimum is at least as good as the initial guess") {
    const PerStatHyper init =
        fit_initial_guess(SurrogateKind::GENSGP, t, 0, cfg, bounds);
    const double lml_init =
        log_marginal_likelihood(SurrogateKind::GENSGP, t, 0, init, bounds);
    const double lml_fit = log_marginal_likelihood(SurrogateKind::GENSGP, t, 0,
                                                   hyper_of(fs, 0), bounds);
    CHECK(lml_fit >= lml_init - 1e-9);
  }
}

TEST_CASE("predict_sampled") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 15, 1e-4);
  std::vector<PerStatHyper> hyper(1);
  hyper[0].kernel = {4.0, 10.0};
  hyper[0].warping = AxialWarping::identity(bounds);
  const FittedSurrogate fs = make_surrogate(SurrogateKind::GENSGP, t, hyper);

  ParamVector beta(1);
  beta << 0.77;

  SUBCASE("sample mean converges to the plugin prediction") {
    const int r = 10000;
    const auto draws = predict_sampled(fs, beta, r, 555);
    const Prediction plugin = predict_plugin(fs, beta);
    Eigen::Vector2d mean;
    Eigen::Matrix2d pc;
    posterior_joint(fs, beta, 0, &mean, &pc);
    double mu_bar = 0.0, s2_bar = 0.0;
    for (const auto& d : draws) {
      mu_bar += d.mu[0];
      s2_bar += d.sigma2[0];
    }
    mu_bar /= r;
    s2_bar /= r;
    CHECK(std::abs(mu_bar - plugin.mu[0]) <
          4.0 * std::sqrt(std::max(pc(0, 0), 0.0) / r));
    CHECK(std::abs(s2_bar - plugin.sigma2[0]) <
          4.0 * std::sqrt(std::max(pc(1, 1), 0.0) / r));
  }
  SUBCASE("empirical covariance matches the analytic posterior") {
    const int r = 10000;
    const auto draws = predict_sampled(fs, beta, r, 808);
    Eigen::Vector2d mean;
    Eigen::Matrix2d pc;
    posterior_joint(fs, beta, 0, &mean, &pc);
    Eigen::Vector2d mu_hat = Eigen::Vector2d::Zero();
    for (const auto& d : draws) mu_hat += Eigen::Vector2d(d.mu[0], d.sigma2[0]);
    mu_hat /= r;
    Eigen::Matrix2d cov_hat = Eigen::Matrix2d::Zero();
    for (const auto& d : draws) {
      const Eigen::Vector2d x(d.mu[0] - mu_hat[0], d.sigma2[0] - mu_hat[1]);
      cov_hat += x * x.transpose();
    }
    cov_hat /= r;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double se =
            std::sqrt((pc(i, i) * pc(j, j) + pc(i, j) * pc(i, j)) / r);
        CHECK(std::abs(cov_hat(i, j) - pc(i, j)) < 4.0 * se + 1e-14);
      }
    }
  }
  SUBCASE("degenerate posterior at a noise-free training point") {
    const TrainingTable t0 = oracle_table(spec, 3, 3, bounds, 15, 1e-14);
    const FittedSurrogate fs0 = make_surrogate(SurrogateKind::GENSGP, t0, hyper);
    const auto draws = predict_sampled(fs0, t0.beta[7], 1, 42);
    const Prediction plugin = predict_plugin(fs0, t0.beta[7]);
    CHECK(testutil::rel_err(draws[0].mu[0], plugin.mu[0]) < 1e-5);
  }
  SUBCASE("deterministic given the seed") {
    const auto a = predict_sampled(fs, beta, 5, 99);
    const auto b = predict_sampled(fs, beta, 5, 99);
    for (int i = 0; i < 5; ++i) {
      CHECK(a[i].mu[0] == b[i].mu[0]);
      CHECK(a[i].sigma2[0] == b[i].sigma2[0]);
    }
  }
}

TEST_CASE("surrogate serialization round trip") {
  const auto spec = lattice::ModelSpec::potts(2);
  const Bounds bounds = Bounds::interval(0.3, 1.3);
  const TrainingTable t = oracle_table(spec, 3, 3, bounds, 15, 1e-8);
  FitConfig cfg = fast_cfg();
  cfg.max_evals_per_start = 150;
  const FittedSurrogate fs = fit(SurrogateKind::NSGP, t, cfg, 3);

  const auto path = std::filesystem::temp_directory_path() / "wge_gp_test.json";
  save_surrogate(path.string(), fs);
  const FittedSurrogate loaded = load_surrogate(path.string(), t);

  Rng rng(66);
  for (int i = 0; i < 20; ++i) {
    ParamVector beta(1);
    beta << 0.3 + rng.uniform();
    const Prediction a = predict_plugin(fs, beta);
    const Prediction b = predict_plugin(loaded, beta);
    CHECK(a.mu[0] == b.mu[0]);
    CHECK(a.sigma2[0] == b.sigma2[0]);
  }

  SUBCASE("hash mismatch is rejected") {
    TrainingTable other = t;
    other.m(0, 0) += 1.0;
    CHECK_THROWS_AS(load_surrogate(path.string(), other), InvalidInputError);
  }
  std::filesystem::remove(path);
}
