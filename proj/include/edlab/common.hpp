#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace edlab {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;

// Probability floor below which the (rho, phi) chart is treated as singular.
inline constexpr double kRhoFloor = 1e-14;

// Normalization slack accepted at runtime entry points. Construction-time
// checks in the test suite are tighter; this one has to survive long
// propagations whose norm drifts at the 1e-10 level.
inline constexpr double kNormTol = 1e-9;

[[noreturn]] inline void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

// Inverse-CDF draw from a probability vector, u in (0, 1].
inline Eigen::Index sample_index(const RVector& probs, double u) {
  double cum = 0.0;
  const Eigen::Index n = probs.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    cum += probs[k];
    if (u <= cum) return k;
  }
  return n - 1;  // u ~ 1 and the sum rounded just below it
}

// Wrap into (-period/2, period/2].
inline double wrap_centered(double x, double period) {
  double w = x - period * std::round(x / period);
  if (w <= -0.5 * period) w += period;
  return w;
}

}  // namespace edlab
