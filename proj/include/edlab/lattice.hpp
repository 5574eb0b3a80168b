#pragma once

#include <cmath>

#include "common.hpp"

namespace edlab {

// Uniform one-dimensional configuration lattice. Site j sits at origin + j * spacing.
struct Lattice {
  int n_sites = 2;
  double spacing = 1.0;
  double origin = 0.0;

  Lattice() = default;

  Lattice(int n_sites_, double spacing_, double origin_ = 0.0)
      : n_sites(n_sites_), spacing(spacing_), origin(origin_) {
    if (n_sites < 2) fail("Lattice: n_sites must be at least 2");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
      fail("Lattice: spacing must be positive and finite");
    if (!std::isfinite(origin)) fail("Lattice: origin must be finite");
  }

  double coordinate(int j) const { return origin + j * spacing; }

  RVector coordinates() const {
    RVector x(n_sites);
    for (int j = 0; j < n_sites; ++j) x[j] = coordinate(j);
    return x;
  }

  double length() const { return (n_sites - 1) * spacing; }

  friend bool operator==(const Lattice& a, const Lattice& b) {
    return a.n_sites == b.n_sites && a.spacing == b.spacing && a.origin == b.origin;
  }
};

// Lattice of n_sites symmetric about `center`.
inline Lattice centered_lattice(int n_sites, double spacing, double center = 0.0) {
  return Lattice(n_sites, spacing, center - 0.5 * (n_sites - 1) * spacing);
}

}  // namespace edlab
