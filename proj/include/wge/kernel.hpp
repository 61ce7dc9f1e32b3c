#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace wge::gp {

// Matern 3/2 covariance K(w_j, w_l) = xi2 (1 + a r) exp(-a r), r = |w_l - w_j|.
// The process is once mean-square differentiable, which is exactly what the
// derivative-observation blocks below require.
struct Matern32Kernel {
  double xi2 = 1.0;  // process variance
  double a = 1.0;    // inverse length-scale
};

inline double kernel_eval(const Matern32Kernel& k, const Eigen::VectorXd& wj,
                          const Eigen::VectorXd& wl) {
  const double r = (wl - wj).norm();
  return k.xi2 * (1.0 + k.a * r) * std::exp(-k.a * r);
}

// dK / d wj_d. For the 1-D kernel this is xi2 a^2 h exp(-a|h|), h = wl - wj.
inline double kernel_d1(const Matern32Kernel& k, const Eigen::VectorXd& wj,
                        const Eigen::VectorXd& wl, int d) {
  const Eigen::VectorXd h = wl - wj;
  const double r = h.norm();
  return k.xi2 * k.a * k.a * h[d] * std::exp(-k.a * r);
}

// d2K / d wj_d d wl_d. 1-D: xi2 a^2 (1 - a|h|) exp(-a|h|).
inline double kernel_d2(const Matern32Kernel& k, const Eigen::VectorXd& wj,
                        const Eigen::VectorXd& wl, int d) {
  const Eigen::VectorXd h = wl - wj;
  const double r = h.norm();
  const double hd2_over_r = r > 0.0 ? h[d] * h[d] / r : 0.0;
  return k.xi2 * k.a * k.a * (1.0 - k.a * hd2_over_r) * std::exp(-k.a * r);
}

// scalar overloads for the 1-D case
inline double kernel_eval(const Matern32Kernel& k, double wj, double wl) {
  const double r = std::abs(wl - wj);
  return k.xi2 * (1.0 + k.a * r) * std::exp(-k.a * r);
}
inline double kernel_d1(const Matern32Kernel& k, double wj, double wl) {
  const double h = wl - wj;
  return k.xi2 * k.a * k.a * h * std::exp(-k.a * std::abs(h));
}
inline double kernel_d2(const Matern32Kernel& k, double wj, double wl) {
  const double r = std::abs(wl - wj);
  return k.xi2 * k.a * k.a * (1.0 - k.a * r) * std::exp(-k.a * r);
}

}  // namespace wge::gp
