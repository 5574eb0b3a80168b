#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

#include "detectors.hpp"
#include "state.hpp"

namespace edlab {

// Continuous readout device modelled on its own grid: a Gaussian ready packet
// exp(-(X - ready_center)^2 / 4 sigma_pi^2) that the coupling translates by
// the measured eigenvalue.
struct PointerDevice {
  Lattice grid;
  double sigma_pi;
  double ready_center;

  PointerDevice(Lattice grid_, double sigma_pi_, double ready_center_ = 0.0)
      : grid(grid_), sigma_pi(sigma_pi_), ready_center(ready_center_) {
    if (!(sigma_pi > 0.0) || !std::isfinite(sigma_pi))
      fail("PointerDevice: sigma_pi must be positive and finite");
    if (!std::isfinite(ready_center)) fail("PointerDevice: ready_center must be finite");
    if (grid.spacing > sigma_pi)
      fail("PointerDevice: grid spacing exceeds sigma_pi, the packet is unresolved");
    if (grid.coordinate(0) > ready_center - 6.0 * sigma_pi ||
        grid.coordinate(grid.n_sites - 1) < ready_center + 6.0 * sigma_pi)
      fail("PointerDevice: grid must span ready_center +- 6 sigma_pi");
  }

  // Unit-norm ready packet sampled on the grid.
  CVector ready_state() const {
    CVector g(grid.n_sites);
    for (int j = 0; j < grid.n_sites; ++j) {
      const double d = grid.coordinate(j) - ready_center;
      g[j] = std::exp(-d * d / (4.0 * sigma_pi * sigma_pi));
    }
    return g / g.norm();
  }
};

// Smallest comfortable grid for a device: spans the ready center and every
// translated packet center with `margin_sigmas` of clearance, resolved at
// `cells_per_sigma` cells per packet width.
inline Lattice pointer_grid_for(const RVector& alpha, double sigma_pi,
                                double ready_center = 0.0, double margin_sigmas = 8.0,
                                int cells_per_sigma = 4) {
  if (!(sigma_pi > 0.0) || !std::isfinite(sigma_pi))
    fail("pointer_grid_for: sigma_pi must be positive and finite");
  double lo = ready_center;
  double hi = ready_center;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    lo = std::min(lo, ready_center + alpha[k]);
    hi = std::max(hi, ready_center + alpha[k]);
  }
  lo -= margin_sigmas * sigma_pi;
  hi += margin_sigmas * sigma_pi;
  const double spacing = sigma_pi / cells_per_sigma;
  const int n = static_cast<int>(std::ceil((hi - lo) / spacing)) + 1;
  return Lattice(n, spacing, lo);
}

// System-pointer state after the impulsive coupling: sum_k c_k |s_k> (x) |packet_k>,
// with c_k = <s_k|psi> and packet k the ready packet translated by alpha_k.
struct JointState {
  PointerDevice device;
  CVector coeffs;   // c_k, one per detector outcome
  CMatrix packets;  // column k: unit-norm pointer packet of branch k

  JointState(PointerDevice device_, CVector coeffs_, CMatrix packets_)
      : device(device_), coeffs(std::move(coeffs_)), packets(std::move(packets_)) {
    if (packets.rows() != device.grid.n_sites)
      fail("JointState: packet length does not match the pointer grid");
    if (packets.cols() != coeffs.size())
      fail("JointState: packet count does not match coefficient count");
    if (!coeffs.allFinite() || !packets.allFinite()) fail("JointState: non-finite entry");
    double total = 0.0;
    for (Eigen::Index k = 0; k < coeffs.size(); ++k)
      total += std::norm(coeffs[k]) * packets.col(k).squaredNorm();
    if (std::abs(total - 1.0) > 1e-10)
      fail("JointState: joint norm deviates from 1 beyond 1e-10");
  }
};

namespace detail {

// Translate a periodic grid function by a (generally off-grid) shift via the
// discrete Fourier representation: multiply mode f by exp(-i k_f shift).
inline CVector spectral_translate(const CVector& values, double spacing, double shift) {
  const int n = static_cast<int>(values.size());
  std::vector<Complex> time(values.data(), values.data() + n);
  std::vector<Complex> freq;
  Eigen::FFT<double> fft;
  fft.fwd(freq, time);
  for (int f = 0; f < n; ++f) {
    const int folded = f <= n / 2 ? f : f - n;
    const double k = 2.0 * kPi * folded / (n * spacing);
    freq[static_cast<std::size_t>(f)] *= std::polar(1.0, -k * shift);
  }
  fft.inv(time, freq);
  return Eigen::Map<const CVector>(time.data(), n);
}

}  // namespace detail

// The impulsive measurement interaction: each detector branch k keeps its
// amplitude c_k and has the pointer's ready packet translated by alpha_k. The
// translation is spectral, so alpha_k need not be a multiple of the grid
// spacing. The grid must hold every translated packet with a 6 sigma margin,
// otherwise mass wraps around the periodic Fourier boundary.
inline JointState couple(const Detector& det, const Wavefunction& psi,
                         const PointerDevice& device) {
  if (!(det.lattice == psi.lattice)) fail("couple: lattice mismatch");
  if (!psi.is_normalized()) fail("couple: wavefunction is not normalized");
  const double lo = device.grid.coordinate(0);
  const double hi = device.grid.coordinate(device.grid.n_sites - 1);
  for (Eigen::Index k = 0; k < det.eigenvalues.size(); ++k) {
    const double c = device.ready_center + det.eigenvalues[k];
    if (c - 6.0 * device.sigma_pi < lo || c + 6.0 * device.sigma_pi > hi)
      fail("couple: pointer grid must span [" +
           std::to_string(device.ready_center + det.eigenvalues.minCoeff() -
                          6.0 * device.sigma_pi) +
           ", " +
           std::to_string(device.ready_center + det.eigenvalues.maxCoeff() +
                          6.0 * device.sigma_pi) +
           "] to hold every translated packet");
  }
  const int n = det.lattice.n_sites;
  CVector coeffs(n);
  for (int k = 0; k < n; ++k) coeffs[k] = det.basis.col(k).dot(psi.amps);
  const CVector ready = device.ready_state();
  CMatrix packets(device.grid.n_sites, n);
  for (int k = 0; k < n; ++k) {
    CVector shifted =
        detail::spectral_translate(ready, device.grid.spacing, det.eigenvalues[k]);
    packets.col(k) = shifted / shifted.norm();
  }
  return JointState(device, std::move(coeffs), std::move(packets));
}

// Readout distribution over pointer cells: sum_k |c_k|^2 |packet_k(X)|^2.
inline RVector pointer_marginal(const JointState& joint) {
  RVector p = RVector::Zero(joint.device.grid.n_sites);
  for (Eigen::Index k = 0; k < joint.coeffs.size(); ++k)
    p += std::norm(joint.coeffs[k]) * joint.packets.col(k).cwiseAbs2().eval();
  return p;
}

enum class Regime { strong, weak };

struct RegimeReport {
  Regime regime;
  double resolution_ratio;  // smallest distinct-eigenvalue gap over sigma_pi
};

// Strong means every distinct-eigenvalue gap resolves the packet width by at
// least `threshold`; one distinct eigenvalue counts as strong (nothing to
// confuse). Weak otherwise.
inline RegimeReport classify_regime(const PointerDevice& device, const RVector& alpha,
                                    double threshold = 6.0) {
  const auto groups = eigenvalue_groups(alpha);
  if (groups.size() < 2)
    return {Regime::strong, std::numeric_limits<double>::infinity()};
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t g = 1; g < groups.size(); ++g)
    min_gap = std::min(min_gap, alpha[groups[g].front()] - alpha[groups[g - 1].front()]);
  const double ratio = min_gap / device.sigma_pi;
  return {ratio >= threshold ? Regime::strong : Regime::weak, ratio};
}

// n pointer readings X_f drawn from the marginal, one derived stream per trial.
inline RVector sample_pointer(const JointState& joint, long n, std::uint64_t seed) {
  if (n < 1) fail("sample_pointer: need at least one draw");
  const RVector marginal = pointer_marginal(joint);
  RVector out(n);
  for (long t = 0; t < n; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    out[t] = joint.device.grid.coordinate(
        static_cast<int>(sample_index(marginal, rng.u01())));
  }
  return out;
}

// Posterior over eigenvalue labels given one pointer reading: weight k is
// |c_k|^2 times the Gaussian likelihood of reading x_f from a packet centred
// at ready_center + alpha_k. Exponents are shifted by their maximum before
// exponentiating so far-tail readings cannot underflow to an all-zero posterior.
inline RVector infer_eigenvalue(const JointState& joint, const RVector& alpha,
                                double x_f) {
  if (alpha.size() != joint.coeffs.size())
    fail("infer_eigenvalue: eigenvalue count does not match branch count");
  if (!std::isfinite(x_f)) fail("infer_eigenvalue: reading must be finite");
  const Eigen::Index n = alpha.size();
  const double s2 = 2.0 * joint.device.sigma_pi * joint.device.sigma_pi;
  RVector log_w(n);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = std::norm(joint.coeffs[k]);
    if (w > 0.0) {
      const double d = x_f - joint.device.ready_center - alpha[k];
      log_w[k] = std::log(w) - d * d / s2;
      top = std::max(top, log_w[k]);
    } else {
      log_w[k] = -std::numeric_limits<double>::infinity();
    }
  }
  if (!std::isfinite(top))
    fail("infer_eigenvalue: every branch has zero amplitude");
  RVector post(n);
  for (Eigen::Index k = 0; k < n; ++k)
    post[k] = std::isfinite(log_w[k]) ? std::exp(log_w[k] - top) : 0.0;
  return post / post.sum();
}

// Distribution over distinct eigenvalues implied by the joint state: branch
// masses |c_k|^2 ||packet_k||^2 summed within degenerate groups.
inline EigenvalueDistribution eigenvalue_marginal(const JointState& joint,
                                                  const RVector& alpha) {
  if (alpha.size() != joint.coeffs.size())
    fail("eigenvalue_marginal: eigenvalue count does not match branch count");
  const auto groups = eigenvalue_groups(alpha);
  EigenvalueDistribution out;
  out.values.resize(static_cast<Eigen::Index>(groups.size()));
  out.probs.resize(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double mass = 0.0;
    for (int k : groups[g])
      mass += (joint.coeffs[k] * joint.packets.col(k)).squaredNorm();
    out.values[static_cast<Eigen::Index>(g)] = alpha[groups[g].front()];
    out.probs[static_cast<Eigen::Index>(g)] = mass;
  }
  return out;
}

// Singular values of the joint amplitude matrix A(k, X) = c_k packet_k(X).
// Their squares sum to 1 and measure how entangled system and pointer are.
inline RVector schmidt_coefficients(const JointState& joint) {
  CMatrix a(joint.coeffs.size(), joint.device.grid.n_sites);
  for (Eigen::Index k = 0; k < joint.coeffs.size(); ++k)
    a.row(k) = joint.coeffs[k] * joint.packets.col(k).transpose();
  Eigen::BDCSVD<CMatrix> svd(a);
  return svd.singularValues();
}

}  // namespace edlab
