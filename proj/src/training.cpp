#include "wge/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wge/errors.hpp"
#include "wge/io.hpp"
#include "wge/parallel.hpp"
#include "wge/rng.hpp"

namespace wge::train {

using nlohmann::json;

Design make_design(const Bounds& bounds, const std::vector<int>& counts) {
  bounds.validate();
  if (static_cast<int>(counts.size()) != bounds.dim())
    throw InvalidInputError("counts-per-dimension length mismatch");
  for (int c : counts) {
    if (c < 2) throw InvalidInputError("need at least 2 points per dimension");
  }
  const int D = bounds.dim();
  long total = 1;
  for (int c : counts) total *= c;

  Design design;
  design.bounds = bounds;
  design.points.reserve(total);
  for (long idx = 0; idx < total; ++idx) {
    ParamVector beta(D);
    long rem = idx;
    for (int d = D - 1; d >= 0; --d) {
      const long i = rem % counts[d];
      rem /= counts[d];
      beta[d] = bounds.lo[d] +
                (bounds.hi[d] - bounds.lo[d]) * static_cast<double>(i) /
                    (counts[d] - 1);
    }
    design.points.push_back(beta);
  }
  return design;
}

Design midpoint_test_design(const Design& design) {
  if (design.dim() != 1)
    throw InvalidInputError("midpoint test designs are defined for 1-D designs only");
  if (design.size() < 2) throw InvalidInputError("need at least 2 design points");
  for (int j = 1; j < design.size(); ++j) {
    if (!(design.points[j - 1][0] < design.points[j][0]))
      throw InvalidInputError("1-D design must be sorted ascending");
  }
  Design mid;
  mid.bounds = design.bounds;
  mid.points.reserve(design.size() - 1);
  for (int j = 1; j < design.size(); ++j)
    mid.points.push_back(0.5 * (design.points[j - 1] + design.points[j]));
  return mid;
}

namespace {

Sampler resolve_sampler(const lattice::ModelSpec& spec, Sampler s) {
  if (s != Sampler::Auto) return s;
  return spec.kind == lattice::ModelKind::Potts ? Sampler::SwendsenWang
                                                : Sampler::Gibbs;
}

}  // namespace

TrainingTable simulate_training_table(const Design& design,
                                      const lattice::ModelSpec& spec,
                                      const SimulateConfig& sim,
                                      std::uint64_t seed, int workers) {
  if (sim.q < 2) throw InvalidInputError("need q >= 2 replicates per design point");
  if (sim.sweeps < 1 || sim.burnin < 0)
    throw InvalidInputError("invalid sweeps/burnin");
  if (design.dim() != spec.num_stats())
    throw InvalidInputError("design dimension does not match model statistics");
  const Sampler sampler = resolve_sampler(spec, sim.sampler);
  if (sampler == Sampler::SwendsenWang && spec.kind != lattice::ModelKind::Potts)
    throw UnsupportedRegimeError("Swendsen-Wang supports Potts only; use Gibbs");

  const int p = design.size();
  const int D = spec.num_stats();
  TrainingTable table;
  table.D = D;
  table.p = p;
  table.beta = design.points;
  table.m.resize(p, D);
  table.v.resize(p, D);
  table.tau2_mu.resize(p, D);
  table.tau2_sigma.resize(p, D);
  table.q = sim.q;
  table.spec = spec;
  table.sim = sim;
  table.sim.sampler = sampler;
  table.seed = seed;

  parallel_for(static_cast<std::size_t>(p), workers, [&](std::size_t j) {
    const ParamVector& beta = design.points[j];
    // stream keyed by the design point value, so permuting the design
    // permutes the table rows identically
    std::uint64_t point_seed = seed;
    for (int i = 0; i < beta.size(); ++i)
      point_seed = mix_bits(point_seed, beta[i]);
    Rng rng(point_seed);
    lattice::LabelImage img = lattice::random_image(spec, sim.width, sim.height, rng);
    auto advance = [&](int sweeps) {
      for (int s = 0; s < sweeps; ++s) {
        if (sampler == Sampler::SwendsenWang)
          lattice::sw_sweep(spec, beta[0], img, rng);
        else
          lattice::gibbs_sweep(spec, beta, img, rng);
      }
    };
    advance(sim.burnin);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(D);
    for (int rep = 0; rep < sim.q; ++rep) {
      advance(sim.sweeps);
      const Eigen::VectorXd s = lattice::sufficient_stats(img, spec);
      sum += s;
      sum2 += s.cwiseProduct(s);
    }
    for (int d = 0; d < D; ++d) {
      const double mean = sum[d] / sim.q;
      double var = (sum2[d] - sim.q * mean * mean) / (sim.q - 1);
      var = std::max(var, 0.0);
      table.m(j, d) = mean;
      table.v(j, d) = var;
      table.tau2_mu(j, d) = std::max(var / sim.q, 1e-12);
      table.tau2_sigma(j, d) = std::max(2.0 * var * var / (sim.q - 1), 1e-12);
    }
  });
  return table;
}

namespace {

std::string table_csv_body(const TrainingTable& t) {
  std::ostringstream out;
  out << "d,j,beta_1";
  if (t.D > 1) out << ",beta_2";
  out << ",m,v,tau2_mu,tau2_sigma,q\n";
  for (int d = 0; d < t.D; ++d) {
    for (int j = 0; j < t.p; ++j) {
      out << (d + 1) << "," << (j + 1);
      for (int i = 0; i < t.D; ++i) out << "," << fmt_g17(t.beta[j][i]);
      out << "," << fmt_g17(t.m(j, d)) << "," << fmt_g17(t.v(j, d)) << ","
          << fmt_g17(t.tau2_mu(j, d)) << "," << fmt_g17(t.tau2_sigma(j, d))
          << "," << t.q << "\n";
    }
  }
  return out.str();
}

}  // namespace

std::uint64_t table_hash(const TrainingTable& table) {
  return fnv1a64(table_csv_body(table));
}

void save_table_csv(const std::string& path, const TrainingTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open for writing: " + path);
  out << table_csv_body(t);

  json meta;
  meta["model"] = t.spec.kind == lattice::ModelKind::Potts ? "potts" : "autologistic";
  meta["k"] = t.spec.k;
  meta["width"] = t.sim.width;
  meta["height"] = t.sim.height;
  meta["q"] = t.q;
  meta["sweeps"] = t.sim.sweeps;
  meta["burnin"] = t.sim.burnin;
  meta["sampler"] = t.sim.sampler == Sampler::SwendsenWang ? "sw" : "gibbs";
  meta["seed"] = t.seed;
  meta["table_hash"] = table_hash(t);
  std::ofstream mout(path + ".meta.json", std::ios::binary);
  if (!mout) throw InvalidInputError("cannot open for writing: " + path + ".meta.json");
  mout << meta.dump(2) << "\n";
}

TrainingTable load_table_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open for reading: " + path);
  std::string header;
  if (!std::getline(in, header)) throw InvalidInputError("empty table file");
  const int D = header.find("beta_2") != std::string::npos ? 2 : 1;

  struct Row {
    int d, j;
    std::vector<double> beta;
    double m, v, t2m, t2s;
    int q;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != 7 + D)
      throw InvalidInputError("malformed table row: " + line);
    Row r;
    std::size_t c = 0;
    r.d = std::stoi(cells[c++]);
    r.j = std::stoi(cells[c++]);
    for (int i = 0; i < D; ++i) r.beta.push_back(std::stod(cells[c++]));
    r.m = std::stod(cells[c++]);
    r.v = std::stod(cells[c++]);
    r.t2m = std::stod(cells[c++]);
    r.t2s = std::stod(cells[c++]);
    r.q = std::stoi(cells[c++]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw InvalidInputError("table has no rows");

  int p = 0;
  for (const auto& r : rows) p = std::max(p, r.j);

  TrainingTable t;
  t.D = D;
  t.p = p;
  t.q = rows.front().q;
  t.beta.assign(p, ParamVector::Zero(D));
  t.m.resize(p, D);
  t.v.resize(p, D);
  t.tau2_mu.resize(p, D);
  t.tau2_sigma.resize(p, D);
  for (const auto& r : rows) {
    const int j = r.j - 1, d = r.d - 1;
    if (j < 0 || j >= p || d < 0 || d >= D)
      throw InvalidInputError("table indices out of range");
    for (int i = 0; i < D; ++i) t.beta[j][i] = r.beta[i];
    t.m(j, d) = r.m;
    t.v(j, d) = r.v;
    t.tau2_mu(j, d) = r.t2m;
    t.tau2_sigma(j, d) = r.t2s;
  }

  std::ifstream min(path + ".meta.json", std::ios::binary);
  if (min) {
    json meta = json::parse(min, nullptr, false);
    if (!meta.is_discarded()) {
      if (meta.value("model", "potts") == std::string("autologistic"))
        t.spec = lattice::ModelSpec::autologistic();
      else
        t.spec = lattice::ModelSpec::potts(meta.value("k", 2));
      t.sim.width = meta.value("width", 0);
      t.sim.height = meta.value("height", 0);
      t.sim.q = t.q;
      t.sim.sweeps = meta.value("sweeps", 0);
      t.sim.burnin = meta.value("burnin", 0);
      t.sim.sampler = meta.value("sampler", "sw") == std::string("gibbs")
                          ? Sampler::Gibbs
                          : Sampler::SwendsenWang;
      t.seed = meta.value("seed", std::uint64_t{0});
    }
  }
  return t;
}

}  // namespace wge::train
