#pragma once

// Independent reference implementations used only by the test suite. Each one
// reaches a result the library also produces, but by a different route: dense
// eigendecompositions instead of factored propagators or FFTs, and explicit
// brute-force sums instead of vectorized expressions.

#include <Eigen/Eigenvalues>

#include <edlab/edlab.hpp>

namespace oracle {

using edlab::CMatrix;
using edlab::Complex;
using edlab::CVector;
using edlab::Lattice;
using edlab::RMatrix;
using edlab::RVector;

// exp(-i H t / hbar) psi through the eigendecomposition of H.
inline CVector schrodinger_dense(const CMatrix& h, const CVector& psi, double t,
                                 double hbar) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector c = es.eigenvectors().adjoint() * psi;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    c[j] *= std::polar(1.0, -es.eigenvalues()[j] * t / hbar);
  return es.eigenvectors() * c;
}

// Largest entrywise difference after rotating b by the L2-optimal global
// phase, written out longhand.
inline double aligned_max_diff(const CVector& a, const CVector& b) {
  Complex overlap(0.0, 0.0);
  for (Eigen::Index k = 0; k < a.size(); ++k) overlap += std::conj(b[k]) * a[k];
  const double mag = std::abs(overlap);
  const Complex rot = mag > 0.0 ? overlap / mag : Complex(1.0, 0.0);
  double d = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    d = std::max(d, std::abs(a[k] - rot * b[k]));
  return d;
}

// Dense translation generator on an n-cell periodic grid, assembled from
// explicit plane-wave projectors. Hermitian by construction.
inline CMatrix momentum_operator_dense(int n, double spacing, double hbar) {
  CMatrix p = CMatrix::Zero(n, n);
  const double root = std::sqrt(static_cast<double>(n));
  for (int f = 0; f < n; ++f) {
    const int folded = f <= n / 2 ? f : f - n;
    const double k = 2.0 * edlab::kPi * folded / (n * spacing);
    CVector mode(n);
    for (int j = 0; j < n; ++j)
      mode[j] = std::polar(1.0 / root, 2.0 * edlab::kPi * f * j / n);
    p += hbar * k * (mode * mode.adjoint());
  }
  return p;
}

// Translate by alpha through the eigendecomposition of the dense generator.
inline CVector translate_dense(const CVector& values, double spacing, double alpha,
                               double hbar) {
  const int n = static_cast<int>(values.size());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(momentum_operator_dense(n, spacing, hbar));
  CVector c = es.eigenvectors().adjoint() * values;
  for (Eigen::Index j = 0; j < c.size(); ++j)
    c[j] *= std::polar(1.0, -es.eigenvalues()[j] * alpha / hbar);
  return es.eigenvectors() * c;
}

// Posterior by brute force: elementwise product, then an explicit
// normalization loop.
inline RVector bayes_brute(const RVector& prior, const RMatrix& likelihood, int record) {
  RVector post(prior.size());
  double total = 0.0;
  for (Eigen::Index x = 0; x < prior.size(); ++x) {
    post[x] = prior[x] * likelihood(record, x);
    total += post[x];
  }
  for (Eigen::Index x = 0; x < prior.size(); ++x) post[x] /= total;
  return post;
}

// Readout distribution as a weighted sum of per-branch discretized Gaussians,
// each normalized over the grid on its own.
inline RVector pointer_marginal_quadrature(const Lattice& grid, const RVector& weights,
                                           const RVector& centers, double sigma) {
  RVector out = RVector::Zero(grid.n_sites);
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    RVector g(grid.n_sites);
    for (int j = 0; j < grid.n_sites; ++j) {
      const double d = grid.coordinate(j) - centers[k];
      g[j] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    out += weights[k] * (g / g.sum());
  }
  return out;
}

inline double grid_mean(const Lattice& grid, const RVector& probs) {
  double m = 0.0;
  for (int j = 0; j < grid.n_sites; ++j) m += grid.coordinate(j) * probs[j];
  return m;
}

}  // namespace oracle
