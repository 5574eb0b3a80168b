#pragma once

#include <utility>

#include <Eigen/QR>

#include "rng.hpp"
#include "state.hpp"

namespace edlab {

inline CVector random_complex_vector(int n, Rng& rng) {
  CVector v(n);
  for (int k = 0; k < n; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    v[k] = Complex(re, im);
  }
  return v;
}

inline Wavefunction random_wavefunction(const Lattice& lat, Rng& rng, double hbar = 1.0) {
  return Wavefunction(lat, random_complex_vector(lat.n_sites, rng), hbar).normalized();
}

// Haar-distributed unitary: QR of a complex Ginibre matrix with the R diagonal
// phases folded into Q.
inline CMatrix random_unitary(int n, Rng& rng) {
  CMatrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = Complex(re, im);
    }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const Complex d = r(j, j);
    const double m = std::abs(d);
    if (m > 0.0) q.col(j) *= d / m;
  }
  return q;
}

inline CMatrix random_hermitian(int n, Rng& rng, double scale = 1.0) {
  CMatrix g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double re = rng.normal();
      const double im = rng.normal();
      g(i, j) = Complex(re, im);
    }
  return scale * 0.5 * (g + g.adjoint()).eval();
}

}  // namespace edlab
