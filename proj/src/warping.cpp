#include "wge/warping.hpp"

#include <cmath>

#include "wge/errors.hpp"

namespace wge::gp {

namespace {

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// raw basis expansion and its derivative at x
void layer_raw(const AxialLayer& layer, double x, double* value, double* deriv) {
  double v = layer.weights[0] * x;
  double dv = layer.weights[0];
  for (int b = 0; b < layer.centers.size(); ++b) {
    const double s = sigmoid(layer.sharpness * (x - layer.centers[b]));
    const double w = layer.weights[b + 1];
    v += w * s;
    dv += w * layer.sharpness * s * (1.0 - s);
  }
  *value = v;
  *deriv = dv;
}

// Evaluate one endpoint-pinned layer: affine renormalization of the raw map
// so that lo -> lo and hi -> hi.
void layer_eval(const AxialLayer& layer, double x, double* value, double* deriv) {
  if (layer.is_identity()) {
    *value = x;
    *deriv = 1.0;
    return;
  }
  double raw_x, draw_x, raw_lo, d0, raw_hi, d1;
  layer_raw(layer, x, &raw_x, &draw_x);
  layer_raw(layer, layer.lo, &raw_lo, &d0);
  layer_raw(layer, layer.hi, &raw_hi, &d1);
  const double span = raw_hi - raw_lo;
  if (!(span > 1e-300)) {  // degenerate all-zero weights
    *value = x;
    *deriv = 1.0;
    return;
  }
  const double scale = (layer.hi - layer.lo) / span;
  *value = layer.lo + scale * (raw_x - raw_lo);
  *deriv = scale * draw_x;
}

}  // namespace

bool AxialLayer::is_identity() const {
  if (weights.size() != centers.size() + 1) return false;
  if (weights[0] <= 0.0) return false;
  for (int b = 1; b < weights.size(); ++b) {
    if (weights[b] != 0.0) return false;
  }
  return true;
}

bool AxialWarping::is_identity() const {
  for (const auto& per_dim : layers) {
    for (const auto& layer : per_dim) {
      if (!layer.is_identity()) return false;
    }
  }
  return true;
}

AxialWarping AxialWarping::identity(const Bounds& bounds) {
  bounds.validate();
  AxialWarping w;
  w.layers.resize(bounds.dim());
  for (int d = 0; d < bounds.dim(); ++d) {
    AxialLayer layer;
    layer.lo = bounds.lo[d];
    layer.hi = bounds.hi[d];
    layer.centers.resize(0);
    layer.sharpness = 1.0;
    layer.weights = Eigen::VectorXd::Ones(1);
    w.layers[d].push_back(layer);
  }
  return w;
}

AxialWarping AxialWarping::sigmoid_grid(const Bounds& bounds, int n_basis,
                                        int n_layers) {
  bounds.validate();
  if (n_basis < 1 || n_layers < 1)
    throw InvalidInputError("warping needs n_basis >= 1 and n_layers >= 1");
  AxialWarping w;
  w.layers.resize(bounds.dim());
  for (int d = 0; d < bounds.dim(); ++d) {
    const double lo = bounds.lo[d], hi = bounds.hi[d];
    const double spacing = (hi - lo) / (n_basis + 1);
    AxialLayer layer;
    layer.lo = lo;
    layer.hi = hi;
    layer.centers.resize(n_basis);
    for (int b = 0; b < n_basis; ++b) layer.centers[b] = lo + (b + 1) * spacing;
    layer.sharpness = 2.0 / spacing;
    layer.weights = Eigen::VectorXd::Zero(n_basis + 1);
    layer.weights[0] = 1.0;  // identity until fitted
    w.layers[d].assign(n_layers, layer);
  }
  return w;
}

double warp_component(const AxialWarping& w, int dim, double x, bool* clamped) {
  const auto& per_dim = w.layers[dim];
  const double lo = per_dim.front().lo, hi = per_dim.front().hi;
  if (clamped) *clamped = x < lo || x > hi;
  double value = std::min(std::max(x, lo), hi);
  double deriv;
  for (const auto& layer : per_dim) layer_eval(layer, value, &value, &deriv);
  return value;
}

double warp_deriv(const AxialWarping& w, int dim, double x) {
  const auto& per_dim = w.layers[dim];
  const double lo = per_dim.front().lo, hi = per_dim.front().hi;
  double value = std::min(std::max(x, lo), hi);
  double total = 1.0;
  for (const auto& layer : per_dim) {
    double deriv;
    layer_eval(layer, value, &value, &deriv);
    total *= deriv;
  }
  return total;
}

ParamVector warp(const AxialWarping& w, const ParamVector& beta, bool* clamped) {
  if (beta.size() != w.dim()) throw InvalidInputError("warping dimension mismatch");
  if (clamped) *clamped = false;
  ParamVector out(beta.size());
  for (int d = 0; d < beta.size(); ++d) {
    bool c = false;
    out[d] = warp_component(w, d, beta[d], &c);
    if (clamped && c) *clamped = true;
  }
  return out;
}

}  // namespace wge::gp
