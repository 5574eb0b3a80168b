#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "lattice.hpp"

namespace edlab {

// Epistemic state in the complex chart: one amplitude per lattice site.
struct Wavefunction {
  Lattice lattice;
  CVector amps;
  double hbar = 1.0;

  Wavefunction(Lattice lat, CVector a, double hb = 1.0)
      : lattice(lat), amps(std::move(a)), hbar(hb) {
    if (amps.size() != lattice.n_sites)
      fail("Wavefunction: amplitude count does not match n_sites");
    if (!amps.allFinite()) fail("Wavefunction: non-finite amplitude");
    if (!(hbar > 0.0) || !std::isfinite(hbar))
      fail("Wavefunction: hbar must be positive and finite");
  }

  double norm() const { return amps.norm(); }

  bool is_normalized(double tol = kNormTol) const {
    return std::abs(amps.squaredNorm() - 1.0) <= tol;
  }

  Wavefunction normalized() const {
    const double n = amps.norm();
    if (!(n > 0.0)) fail("Wavefunction: cannot normalize the zero vector");
    return Wavefunction(lattice, amps / n, hbar);
  }
};

// Position eigenstate concentrated on site j.
inline Wavefunction basis_state(const Lattice& lat, int j, double hbar = 1.0) {
  if (j < 0 || j >= lat.n_sites) fail("basis_state: site index out of range");
  CVector a = CVector::Zero(lat.n_sites);
  a[j] = 1.0;
  return Wavefunction(lat, std::move(a), hbar);
}

// Normalized packet exp(-(x - center)^2 / (4 width^2) + i momentum x / hbar).
inline Wavefunction gaussian_packet(const Lattice& lat, double center, double width,
                                    double momentum = 0.0, double hbar = 1.0) {
  if (!(width > 0.0) || !std::isfinite(width))
    fail("gaussian_packet: width must be positive and finite");
  if (!std::isfinite(center) || !std::isfinite(momentum))
    fail("gaussian_packet: center and momentum must be finite");
  CVector a(lat.n_sites);
  for (int j = 0; j < lat.n_sites; ++j) {
    const double x = lat.coordinate(j);
    const double envelope = std::exp(-(x - center) * (x - center) / (4.0 * width * width));
    a[j] = std::polar(envelope, momentum * x / hbar);
  }
  const double n = a.norm();
  if (!(n > 0.0)) fail("gaussian_packet: packet vanishes everywhere on this lattice");
  return Wavefunction(lat, a / n, hbar);
}

// Same state in the canonical chart: site probabilities and the conjugate
// phase, unwrapped along the lattice so finite differences of phi mean
// something. phi is only physical where rho clears the node floor.
struct EpistemicPair {
  Lattice lattice;
  RVector rho;
  RVector phi;
  double hbar = 1.0;

  EpistemicPair(Lattice lat, RVector r, RVector p, double hb = 1.0)
      : lattice(lat), rho(std::move(r)), phi(std::move(p)), hbar(hb) {
    if (rho.size() != lattice.n_sites || phi.size() != lattice.n_sites)
      fail("EpistemicPair: field size does not match n_sites");
    if (!rho.allFinite() || !phi.allFinite())
      fail("EpistemicPair: non-finite field entry");
    if (rho.minCoeff() < 0.0) fail("EpistemicPair: negative probability");
    if (std::abs(rho.sum() - 1.0) > kNormTol)
      fail("EpistemicPair: probabilities do not sum to 1");
    if (!(hbar > 0.0) || !std::isfinite(hbar))
      fail("EpistemicPair: hbar must be positive and finite");
  }
};

// Chart change psi -> (rho, phi). Phases are unwrapped left to right across
// sites above the node floor: each step takes the raw arg difference mapped
// into (-pi*hbar, pi*hbar]. Sites at or below the floor get their phase by
// linear interpolation between the nearest live neighbors (constant
// extrapolation past the ends, zero if no site is live).
inline EpistemicPair to_pair(const Wavefunction& psi) {
  if (!psi.is_normalized()) fail("to_pair: wavefunction is not normalized");
  const int n = psi.lattice.n_sites;
  RVector rho(n);
  RVector phi = RVector::Zero(n);
  std::vector<int> live;
  live.reserve(n);
  for (int k = 0; k < n; ++k) {
    rho[k] = std::norm(psi.amps[k]);
    if (rho[k] > kRhoFloor) live.push_back(k);
  }
  const double period = 2.0 * kPi * psi.hbar;
  double prev_raw = 0.0;
  double prev_unwrapped = 0.0;
  for (std::size_t i = 0; i < live.size(); ++i) {
    const int k = live[i];
    const double raw = psi.hbar * std::arg(psi.amps[k]);
    if (i == 0) {
      phi[k] = raw;
    } else {
      phi[k] = prev_unwrapped + wrap_centered(raw - prev_raw, period);
    }
    prev_raw = raw;
    prev_unwrapped = phi[k];
  }
  if (!live.empty()) {
    for (int k = 0; k < n; ++k) {
      if (rho[k] > kRhoFloor) continue;
      const auto it = std::lower_bound(live.begin(), live.end(), k);
      const bool has_above = it != live.end();
      const bool has_below = it != live.begin();
      if (has_below && has_above) {
        const int lo = *(it - 1);
        const int hi = *it;
        const double w = static_cast<double>(k - lo) / static_cast<double>(hi - lo);
        phi[k] = (1.0 - w) * phi[lo] + w * phi[hi];
      } else if (has_below) {
        phi[k] = phi[*(it - 1)];
      } else {
        phi[k] = phi[*it];
      }
    }
  }
  return EpistemicPair(psi.lattice, std::move(rho), std::move(phi), psi.hbar);
}

// Chart change (rho, phi) -> psi.
inline Wavefunction to_psi(const EpistemicPair& pair) {
  if (std::abs(pair.rho.sum() - 1.0) > kNormTol)
    fail("to_psi: corrupted pair, probabilities do not sum to 1");
  const int n = pair.lattice.n_sites;
  CVector a(n);
  for (int k = 0; k < n; ++k)
    a[k] = std::polar(std::sqrt(pair.rho[k]), pair.phi[k] / pair.hbar);
  return Wavefunction(pair.lattice, std::move(a), pair.hbar).normalized();
}

// Site probabilities |psi_k|^2.
inline RVector born_position(const Wavefunction& psi) {
  if (!psi.is_normalized()) fail("born_position: wavefunction is not normalized");
  return psi.amps.cwiseAbs2();
}

// Fix the unobservable global phase: rotate so the largest-modulus amplitude
// is real and positive. Lets states be compared entrywise.
inline Wavefunction canonical_phase(const Wavefunction& psi) {
  Eigen::Index imax = 0;
  psi.amps.cwiseAbs().maxCoeff(&imax);
  const Complex z = psi.amps[imax];
  if (std::abs(z) == 0.0) return psi;
  return Wavefunction(psi.lattice, psi.amps * std::polar(1.0, -std::arg(z)), psi.hbar);
}

// Largest entrywise distance after optimally aligning the global phase of b
// against a (the L2-optimal rotation, arg of the overlap).
inline double phase_aligned_distance(const CVector& a, const CVector& b) {
  if (a.size() != b.size()) fail("phase_aligned_distance: size mismatch");
  const Complex overlap = b.dot(a);  // <b|a>
  const double mag = std::abs(overlap);
  const Complex rot = mag > 0.0 ? overlap / mag : Complex(1.0, 0.0);
  return (a - rot * b).cwiseAbs().maxCoeff();
}

}  // namespace edlab
