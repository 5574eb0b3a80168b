#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dynamics.hpp"
#include "rng.hpp"
#include "state.hpp"

namespace edlab {

// Group outcome indices whose eigenvalues coincide within 1e-9 * max|alpha|.
// Groups come back ordered by ascending eigenvalue.
inline std::vector<std::vector<int>> eigenvalue_groups(const RVector& alpha) {
  const int n = static_cast<int>(alpha.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return alpha[a] < alpha[b]; });
  const double scale = alpha.size() ? alpha.cwiseAbs().maxCoeff() : 0.0;
  const double tol = 1e-9 * scale;
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    const int k = order[i];
    if (groups.empty() || alpha[k] - alpha[groups.back().front()] > tol)
      groups.emplace_back();
    groups.back().push_back(k);
  }
  return groups;
}

// Measurement device: an orthonormal basis {|s_k>} with one real eigenvalue
// label per outcome. Column k of `basis` is |s_k>; the device unitary maps
// |s_k> onto the position state |x_k>.
struct Detector {
  Lattice lattice;
  CMatrix basis;
  RVector eigenvalues;
  std::string label;

  Detector(Lattice lat, CMatrix basis_, RVector eigenvalues_, std::string label_ = "detector")
      : lattice(lat),
        basis(std::move(basis_)),
        eigenvalues(std::move(eigenvalues_)),
        label(std::move(label_)) {
    const int n = lattice.n_sites;
    if (basis.rows() != n || basis.cols() != n)
      fail("Detector: basis shape does not match n_sites");
    if (eigenvalues.size() != n)
      fail("Detector: eigenvalue count does not match n_sites");
    if (!basis.allFinite() || !eigenvalues.allFinite())
      fail("Detector: non-finite entry");
    const double residual =
        (basis.adjoint() * basis - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (residual >= 1e-10) fail("Detector: basis columns are not orthonormal");
  }
};

// Position device: the identity basis labelled by site coordinates.
inline Detector position_detector(const Lattice& lat) {
  return Detector(lat, CMatrix::Identity(lat.n_sites, lat.n_sites), lat.coordinates(),
                  "position");
}

// Momentum device: DFT columns s_k(j) = exp(2 pi i j k / n) / sqrt(n), labelled
// by the wavenumbers hbar 2 pi f(k) / (n spacing) with f(k) folded into the
// symmetric Brillouin range.
inline Detector momentum_detector(const Lattice& lat, double hbar = 1.0) {
  const int n = lat.n_sites;
  CMatrix b(n, n);
  RVector alpha(n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    const int folded = k <= n / 2 ? k : k - n;
    alpha[k] = hbar * 2.0 * kPi * folded / (n * lat.spacing);
    for (int j = 0; j < n; ++j)
      b(j, k) = norm * std::polar(1.0, 2.0 * kPi * j * k / n);
  }
  return Detector(lat, std::move(b), std::move(alpha), "momentum");
}

// Device for any Hermitian observable: eigenvectors in ascending eigenvalue
// order, each column rotated so its first component above 1e-12 in modulus is
// real and positive. That convention pins the otherwise arbitrary per-column
// phase, so equal matrices give byte-equal detectors.
inline Detector detector_from_hermitian(const Lattice& lat, const CMatrix& observable,
                                        std::string label = "hermitian") {
  const int n = lat.n_sites;
  if (observable.rows() != n || observable.cols() != n)
    fail("detector_from_hermitian: matrix shape does not match n_sites");
  if (!observable.allFinite()) fail("detector_from_hermitian: non-finite entry");
  if ((observable - observable.adjoint()).cwiseAbs().maxCoeff() >= 1e-12)
    fail("detector_from_hermitian: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(observable);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("detector_from_hermitian: eigensolver failed");
  CMatrix basis = solver.eigenvectors();
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      const Complex z = basis(j, k);
      if (std::abs(z) > 1e-12) {
        basis.col(k) *= std::polar(1.0, -std::arg(z));
        break;
      }
    }
  }
  return Detector(lat, std::move(basis), solver.eigenvalues(), std::move(label));
}

// Energy device for a kernel: its eigenbasis labelled by the energies.
inline Detector energy_detector(const HamiltonianKernel& kernel) {
  return detector_from_hermitian(kernel.lattice, kernel.matrix, "energy");
}

struct OutcomeDistribution {
  RVector probs;
  RVector eigenvalues;
  std::string detector_label;
};

// Outcome probabilities p_k = |<s_k|psi>|^2, one overlap per outcome.
inline OutcomeDistribution born_rule(const Detector& det, const Wavefunction& psi) {
  if (!(det.lattice == psi.lattice)) fail("born_rule: lattice mismatch");
  if (!psi.is_normalized()) fail("born_rule: wavefunction is not normalized");
  const int n = det.lattice.n_sites;
  RVector p(n);
  for (int k = 0; k < n; ++k) p[k] = std::norm(det.basis.col(k).dot(psi.amps));
  return {std::move(p), det.eigenvalues, det.label};
}

// The device unitary applied to the state: amplitudes in the detector basis
// land on position states, so component k of the result is <s_k|psi>. Linear,
// norm preserving, and deliberately a different code path from born_rule.
inline Wavefunction apply_unitary(const Detector& det, const Wavefunction& psi) {
  if (!(det.lattice == psi.lattice)) fail("apply_unitary: lattice mismatch");
  return Wavefunction(psi.lattice, det.basis.adjoint() * psi.amps, psi.hbar);
}

// <M> = sum_k alpha_k p_k.
inline double expectation(const Detector& det, const Wavefunction& psi) {
  const OutcomeDistribution d = born_rule(det, psi);
  return d.probs.dot(d.eigenvalues);
}

// n independent outcome draws, returned as counts per outcome. Trial t uses
// its own stream derived from (seed, t), so a sharded run reproduces the
// serial one draw for draw.
inline Eigen::VectorXi sample_outcomes(const Detector& det, const Wavefunction& psi,
                                       long n, std::uint64_t seed) {
  if (n < 1) fail("sample_outcomes: need at least one draw");
  const OutcomeDistribution d = born_rule(det, psi);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(det.lattice.n_sites);
  for (long t = 0; t < n; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    counts[sample_index(d.probs, rng.u01())] += 1;
  }
  return counts;
}

// Post-outcome state: the detector state |s_k> itself.
inline Wavefunction bayes_collapse(const Detector& det, const Wavefunction& psi,
                                   int outcome) {
  if (!(det.lattice == psi.lattice)) fail("bayes_collapse: lattice mismatch");
  if (outcome < 0 || outcome >= det.lattice.n_sites)
    fail("bayes_collapse: outcome index out of range");
  const double p = std::norm(det.basis.col(outcome).dot(psi.amps));
  if (!(p > 0.0))
    fail("bayes_collapse: conditioning on an outcome of probability zero");
  return Wavefunction(psi.lattice, det.basis.col(outcome), psi.hbar);
}

struct EigenvalueDistribution {
  RVector values;  // distinct eigenvalues, ascending
  RVector probs;   // aggregated outcome probabilities
};

// Collapse an outcome distribution onto distinct eigenvalues, aggregating the
// probabilities of degenerate outcomes.
inline EigenvalueDistribution by_eigenvalue(const OutcomeDistribution& dist) {
  const auto groups = eigenvalue_groups(dist.eigenvalues);
  EigenvalueDistribution out;
  out.values.resize(static_cast<Eigen::Index>(groups.size()));
  out.probs.resize(static_cast<Eigen::Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double mass = 0.0;
    for (int k : groups[g]) mass += dist.probs[k];
    out.values[static_cast<Eigen::Index>(g)] = dist.eigenvalues[groups[g].front()];
    out.probs[static_cast<Eigen::Index>(g)] = mass;
  }
  return out;
}

}  // namespace edlab
