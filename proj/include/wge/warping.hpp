#pragma once

#include <vector>

#include "wge/types.hpp"

namespace wge::gp {

// One axial warping layer on [lo, hi]: a monotone basis expansion
//   raw(x) = w_0 x + sum_b w_b sigmoid(sharpness (x - center_b)),
// affinely renormalized so lo and hi map to themselves. Nonnegative weights
// and increasing basis functions make every layer nondecreasing; the linear
// basis column makes the exact identity map representable (all sigmoid
// weights zero).
struct AxialLayer {
  double lo = 0.0;
  double hi = 1.0;
  Eigen::VectorXd centers;   // sigmoid centers, equally spaced over [lo, hi]
  double sharpness = 1.0;
  Eigen::VectorXd weights;   // size 1 + centers.size(); weights[0] is linear

  bool is_identity() const;
};

// Composition of per-dimension axial layers; the warping for one statistic.
// Each input dimension is warped independently (axial units), so the warp
// Jacobian is diagonal.
struct AxialWarping {
  // layers[dim][layer]
  std::vector<std::vector<AxialLayer>> layers;

  int dim() const { return static_cast<int>(layers.size()); }
  bool is_identity() const;

  static AxialWarping identity(const Bounds& bounds);
  // n_basis sigmoids per layer with centers equally spaced over the bounds
  // and sharpness 2/spacing; weights initialized to the identity map.
  static AxialWarping sigmoid_grid(const Bounds& bounds, int n_basis,
                                   int n_layers);
};

// Single-dimension warp and its derivative (product of layer derivatives).
// Inputs outside [lo, hi] are clamped; *clamped is set when provided.
double warp_component(const AxialWarping& w, int dim, double x,
                      bool* clamped = nullptr);
double warp_deriv(const AxialWarping& w, int dim, double x);

// Warp all components of beta.
ParamVector warp(const AxialWarping& w, const ParamVector& beta,
                 bool* clamped = nullptr);

}  // namespace wge::gp
