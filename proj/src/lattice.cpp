#include "wge/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "wge/errors.hpp"

namespace wge::lattice {

ModelSpec ModelSpec::potts(int k) {
  if (k < 2) throw InvalidInputError("Potts model requires k >= 2");
  ModelSpec s;
  s.kind = ModelKind::Potts;
  s.k = k;
  return s;
}

ModelSpec ModelSpec::autologistic() {
  ModelSpec s;
  s.kind = ModelKind::Autologistic;
  s.k = 2;
  return s;
}

bool label_valid(const ModelSpec& spec, int label) {
  if (spec.kind == ModelKind::Potts) return label >= 1 && label <= spec.k;
  return label == -1 || label == 1;
}

void validate_image(const LabelImage& image, const ModelSpec& spec) {
  if (image.width < 1 || image.height < 1)
    throw InvalidInputError("image dimensions must be positive");
  if (static_cast<int>(image.labels.size()) != image.size())
    throw InvalidInputError("label array size does not match dimensions");
  for (int lbl : image.labels) {
    if (!label_valid(spec, lbl))
      throw InvalidInputError("label out of alphabet: " + std::to_string(lbl));
  }
}

int pair_count(int width, int height) {
  return height * (width - 1) + width * (height - 1);
}

Eigen::VectorXd sufficient_stats(const LabelImage& image, const ModelSpec& spec) {
  validate_image(image, spec);
  const int w = image.width, h = image.height;
  long matches = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int z = image.at(x, y);
      if (x + 1 < w && z == image.at(x + 1, y)) ++matches;
      if (y + 1 < h && z == image.at(x, y + 1)) ++matches;
    }
  }
  Eigen::VectorXd s(spec.num_stats());
  if (spec.kind == ModelKind::Potts) {
    s << static_cast<double>(matches);
  } else {
    const long sum = std::accumulate(image.labels.begin(), image.labels.end(), 0L);
    s << static_cast<double>(sum), static_cast<double>(matches);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Enumeration oracles
// ---------------------------------------------------------------------------

StatHistogram enumerate_stats(const ModelSpec& spec, int width, int height) {
  if (width < 1 || height < 1)
    throw InvalidInputError("image dimensions must be positive");
  const int n = width * height;
  const double log_states = n * std::log(static_cast<double>(spec.k));
  if (log_states > 24.0 * std::log(2.0) + 1e-9)
    throw EnumerationRefusedError("lattice too large to enumerate (k^N > 2^24)");

  LabelImage img;
  img.width = width;
  img.height = height;
  const int lo_label = spec.kind == ModelKind::Potts ? 1 : -1;
  img.labels.assign(static_cast<std::size_t>(n), lo_label);

  auto bump = [&](int i) {
    // odometer increment over the alphabet; autologistic alphabet is {-1,+1}
    if (spec.kind == ModelKind::Potts) {
      if (img.labels[i] < spec.k) {
        ++img.labels[i];
        return true;
      }
      img.labels[i] = 1;
      return false;
    }
    if (img.labels[i] == -1) {
      img.labels[i] = 1;
      return true;
    }
    img.labels[i] = -1;
    return false;
  };

  std::map<std::vector<int>, std::uint64_t> acc;
  const int D = spec.num_stats();
  for (;;) {
    const Eigen::VectorXd s = sufficient_stats(img, spec);
    std::vector<int> key(D);
    for (int d = 0; d < D; ++d) key[d] = static_cast<int>(std::lround(s[d]));
    ++acc[key];
    int i = 0;
    while (i < n && !bump(i)) ++i;
    if (i == n) break;
  }

  StatHistogram hist;
  hist.D = D;
  hist.stats.reserve(acc.size());
  hist.counts.reserve(acc.size());
  for (const auto& [key, count] : acc) {
    Eigen::VectorXi s(D);
    for (int d = 0; d < D; ++d) s[d] = key[d];
    hist.stats.push_back(s);
    hist.counts.push_back(count);
  }
  return hist;
}

double exact_log_normconst(const StatHistogram& hist, const ParamVector& beta) {
  if (beta.size() != hist.D)
    throw InvalidInputError("beta length does not match number of statistics");
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> exponents(hist.stats.size());
  for (std::size_t i = 0; i < hist.stats.size(); ++i) {
    double e = std::log(static_cast<double>(hist.counts[i]));
    for (int d = 0; d < hist.D; ++d) e += beta[d] * hist.stats[i][d];
    exponents[i] = e;
    max_e = std::max(max_e, e);
  }
  double sum = 0.0;
  for (double e : exponents) sum += std::exp(e - max_e);
  return max_e + std::log(sum);
}

double exact_log_normconst(const ModelSpec& spec, const ParamVector& beta,
                           int width, int height) {
  return exact_log_normconst(enumerate_stats(spec, width, height), beta);
}

Moments exact_moments(const StatHistogram& hist, const ParamVector& beta) {
  if (beta.size() != hist.D)
    throw InvalidInputError("beta length does not match number of statistics");
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> exponents(hist.stats.size());
  for (std::size_t i = 0; i < hist.stats.size(); ++i) {
    double e = std::log(static_cast<double>(hist.counts[i]));
    for (int d = 0; d < hist.D; ++d) e += beta[d] * hist.stats[i][d];
    exponents[i] = e;
    max_e = std::max(max_e, e);
  }
  double z = 0.0;
  for (double e : exponents) z += std::exp(e - max_e);

  Moments out;
  out.mu = Eigen::VectorXd::Zero(hist.D);
  out.sigma2 = Eigen::VectorXd::Zero(hist.D);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(hist.D);
  for (std::size_t i = 0; i < hist.stats.size(); ++i) {
    const double p = std::exp(exponents[i] - max_e) / z;
    for (int d = 0; d < hist.D; ++d) {
      const double s = hist.stats[i][d];
      out.mu[d] += p * s;
      m2[d] += p * s * s;
    }
  }
  for (int d = 0; d < hist.D; ++d) out.sigma2[d] = m2[d] - out.mu[d] * out.mu[d];
  return out;
}

Moments exact_moments(const ModelSpec& spec, const ParamVector& beta,
                      int width, int height) {
  return exact_moments(enumerate_stats(spec, width, height), beta);
}

PosteriorMoments exact_posterior_moments(const ModelSpec& spec, int width,
                                         int height,
                                         const Eigen::VectorXd& s_obs,
                                         const Bounds& prior,
                                         int cells_per_dim) {
  prior.validate();
  if (cells_per_dim < 2) throw InvalidInputError("need at least 2 quadrature cells");
  const int D = prior.dim();
  if (s_obs.size() != D || spec.num_stats() != D)
    throw InvalidInputError("dimension mismatch in posterior quadrature");
  const StatHistogram hist = enumerate_stats(spec, width, height);

  long total = 1;
  for (int d = 0; d < D; ++d) total *= cells_per_dim;

  std::vector<double> logpost(total);
  std::vector<ParamVector> pts(total);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (long idx = 0; idx < total; ++idx) {
    ParamVector beta(D);
    long rem = idx;
    for (int d = D - 1; d >= 0; --d) {
      const long i = rem % cells_per_dim;
      rem /= cells_per_dim;
      const double wcell = (prior.hi[d] - prior.lo[d]) / cells_per_dim;
      beta[d] = prior.lo[d] + (i + 0.5) * wcell;
    }
    const double lp = beta.dot(s_obs) - exact_log_normconst(hist, beta);
    logpost[idx] = lp;
    pts[idx] = beta;
    max_lp = std::max(max_lp, lp);
  }

  double z = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(D);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(D);
  for (long idx = 0; idx < total; ++idx) {
    const double w = std::exp(logpost[idx] - max_lp);
    z += w;
    mean += w * pts[idx];
    m2 += w * pts[idx].cwiseProduct(pts[idx]);
  }
  mean /= z;
  m2 /= z;
  PosteriorMoments out;
  out.mean = mean;
  out.sd = (m2 - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
  return out;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

LabelImage random_image(const ModelSpec& spec, int width, int height, Rng& rng) {
  LabelImage img;
  img.width = width;
  img.height = height;
  img.labels.resize(static_cast<std::size_t>(width) * height);
  for (auto& lbl : img.labels) {
    const int u = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.k)));
    lbl = spec.kind == ModelKind::Potts ? u + 1 : (u == 0 ? -1 : 1);
  }
  return img;
}

namespace {

// Union-find with path halving.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

void sw_sweep(const ModelSpec& spec, double beta, LabelImage& image, Rng& rng) {
  if (spec.kind != ModelKind::Potts)
    throw UnsupportedRegimeError("Swendsen-Wang requires a pure pairwise Potts spec");
  if (beta < 0.0)
    throw UnsupportedRegimeError("Swendsen-Wang bond probability undefined for beta < 0");
  const int w = image.width, h = image.height;
  const double p_open = -std::expm1(-beta);  // 1 - exp(-beta)
  DisjointSets uf(w * h);
  // Bonds scanned pixel-by-pixel in raster order: right neighbor, then down.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      if (x + 1 < w && image.labels[i] == image.labels[i + 1] &&
          rng.uniform() < p_open)
        uf.unite(i, i + 1);
      if (y + 1 < h && image.labels[i] == image.labels[i + w] &&
          rng.uniform() < p_open)
        uf.unite(i, i + w);
    }
  }
  // One label draw per component, in component-discovery (raster) order.
  std::vector<int> new_label(static_cast<std::size_t>(w) * h, 0);
  for (int i = 0; i < w * h; ++i) {
    const int root = uf.find(i);
    if (new_label[root] == 0)
      new_label[root] = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.k)));
    image.labels[i] = new_label[root];
  }
}

void gibbs_sweep(const ModelSpec& spec, const ParamVector& beta,
                 LabelImage& image, Rng& rng) {
  const int w = image.width, h = image.height;
  if (spec.kind == ModelKind::Potts) {
    const double b = beta[0];
    std::vector<double> probs(spec.k);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double norm = 0.0;
        for (int lbl = 1; lbl <= spec.k; ++lbl) {
          int same = 0;
          if (x > 0 && image.at(x - 1, y) == lbl) ++same;
          if (x + 1 < w && image.at(x + 1, y) == lbl) ++same;
          if (y > 0 && image.at(x, y - 1) == lbl) ++same;
          if (y + 1 < h && image.at(x, y + 1) == lbl) ++same;
          probs[lbl - 1] = std::exp(b * same);
          norm += probs[lbl - 1];
        }
        double u = rng.uniform() * norm;
        int lbl = 1;
        for (; lbl < spec.k; ++lbl) {
          u -= probs[lbl - 1];
          if (u < 0.0) break;
        }
        image.at(x, y) = lbl;
      }
    }
  } else {
    const double b1 = beta[0], b2 = beta[1];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double lp_plus = b1, lp_minus = -b1;
        auto add = [&](int nb) {
          lp_plus += b2 * (nb == 1 ? 1.0 : 0.0);
          lp_minus += b2 * (nb == -1 ? 1.0 : 0.0);
        };
        if (x > 0) add(image.at(x - 1, y));
        if (x + 1 < w) add(image.at(x + 1, y));
        if (y > 0) add(image.at(x, y - 1));
        if (y + 1 < h) add(image.at(x, y + 1));
        const double m = std::max(lp_plus, lp_minus);
        const double p_plus =
            std::exp(lp_plus - m) / (std::exp(lp_plus - m) + std::exp(lp_minus - m));
        image.at(x, y) = rng.uniform() < p_plus ? 1 : -1;
      }
    }
  }
}

LabelImage sw_sample(const ModelSpec& spec, const ParamVector& beta,
                     const LabelImage& init, int sweeps, std::uint64_t seed) {
  validate_image(init, spec);
  if (sweeps < 1) throw InvalidInputError("sweeps must be >= 1");
  if (beta.size() != spec.num_stats())
    throw InvalidInputError("beta length does not match model");
  LabelImage img = init;
  Rng rng(seed);
  for (int s = 0; s < sweeps; ++s) sw_sweep(spec, beta[0], img, rng);
  return img;
}

LabelImage gibbs_sample(const ModelSpec& spec, const ParamVector& beta,
                        const LabelImage& init, int sweeps, std::uint64_t seed) {
  validate_image(init, spec);
  if (sweeps < 1) throw InvalidInputError("sweeps must be >= 1");
  if (beta.size() != spec.num_stats())
    throw InvalidInputError("beta length does not match model");
  LabelImage img = init;
  Rng rng(seed);
  for (int s = 0; s < sweeps; ++s) gibbs_sweep(spec, beta, img, rng);
  return img;
}

double critical_beta(int k) {
  if (k < 2) throw InvalidInputError("critical_beta requires k >= 2");
  return std::log(1.0 + std::sqrt(static_cast<double>(k)));
}

// ---------------------------------------------------------------------------
// LBL file format
// ---------------------------------------------------------------------------

void save_image(const std::string& path, const LabelImage& image, int k) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  out << "LBL " << image.width << " " << image.height << " " << k << "\n";
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (x) out << " ";
      out << image.at(x, y);
    }
    out << "\n";
  }
}

std::pair<LabelImage, int> load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open for reading: " + path);
  std::string magic;
  int w = 0, h = 0, k = 0;
  in >> magic >> w >> h >> k;
  if (!in || magic != "LBL" || w < 1 || h < 1 || k < 2)
    throw InvalidInputError("malformed LBL header in " + path);
  LabelImage img;
  img.width = w;
  img.height = h;
  img.labels.resize(static_cast<std::size_t>(w) * h);
  for (auto& lbl : img.labels) {
    if (!(in >> lbl)) throw InvalidInputError("truncated LBL payload in " + path);
  }
  return {img, k};
}

}  // namespace wge::lattice
