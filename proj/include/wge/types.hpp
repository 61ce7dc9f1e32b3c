#pragma once

#include <Eigen/Dense>

#include "wge/errors.hpp"

namespace wge {

// Natural parameter vector beta, length D.
using ParamVector = Eigen::VectorXd;

// Axis-aligned box, used for prior supports and design bounds.
struct Bounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const ParamVector& x) const {
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
    return v;
  }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() == 0)
      throw InvalidInputError("bounds dimensions mismatch");
    for (int i = 0; i < dim(); ++i) {
      if (!(lo[i] < hi[i])) throw InvalidInputError("bounds require lo < hi");
    }
  }

  static Bounds interval(double lo, double hi) {
    Bounds b;
    b.lo = Eigen::VectorXd::Constant(1, lo);
    b.hi = Eigen::VectorXd::Constant(1, hi);
    return b;
  }

  static Bounds box2(double lo1, double hi1, double lo2, double hi2) {
    Bounds b;
    b.lo.resize(2);
    b.hi.resize(2);
    b.lo << lo1, lo2;
    b.hi << hi1, hi2;
    return b;
  }
};

}  // namespace wge
