// Walkthrough of the measurement chain on a two-branch superposition:
// couple the same state to a sharp pointer and to a blunt one, look at the
// readout distributions, then check both dynamical routes against each other.

#include <cstdio>
#include <string>

#include <edlab/edlab.hpp>

using namespace edlab;

namespace {

void bar_chart(const Lattice& grid, const RVector& probs, int rows) {
  const int width = 56;
  const int stride = (grid.n_sites + rows - 1) / rows;
  RVector binned = RVector::Zero(rows);
  for (int j = 0; j < grid.n_sites; ++j) binned[std::min(j / stride, rows - 1)] += probs[j];
  const double top = binned.maxCoeff();
  for (int r = 0; r < rows; ++r) {
    const double x = grid.coordinate(std::min(r * stride, grid.n_sites - 1));
    const int len = top > 0.0 ? static_cast<int>(width * binned[r] / top + 0.5) : 0;
    std::printf("  %7.2f | %s\n", x, std::string(static_cast<std::size_t>(len), '#').c_str());
  }
}

void show_regime(const Detector& det, const Wavefunction& psi, double sigma) {
  const PointerDevice device(pointer_grid_for(det.eigenvalues, sigma), sigma);
  const RegimeReport regime = classify_regime(device, det.eigenvalues);
  const JointState joint = couple(det, psi, device);

  std::printf("sigma_pi = %.2f  ->  %s regime (gap/sigma = %.1f)\n", sigma,
              regime.regime == Regime::strong ? "strong" : "weak",
              regime.resolution_ratio);
  std::printf("readout distribution:\n");
  bar_chart(device.grid, pointer_marginal(joint), 16);

  const RVector s = schmidt_coefficients(joint);
  std::printf("schmidt coefficients: %.6f, %.6f\n", s[0], s[1]);

  const double reading = det.eigenvalues[1];
  const RVector post = infer_eigenvalue(joint, det.eigenvalues, reading);
  std::printf("posterior after reading X = %.2f:  p(a0) = %.6f, p(a1) = %.6f\n\n",
              reading, post[0], post[1]);
}

}  // namespace

int main() {
  const Lattice lat(2, 1.0, 0.0);
  CVector a(2);
  a << std::sqrt(0.35), std::sqrt(0.65);
  const Wavefunction psi(lat, a);
  RVector alpha(2);
  alpha << 0.0, 2.0;
  const Detector det(lat, CMatrix::Identity(2, 2), alpha, "two-outcome");

  std::printf("state: |c0|^2 = 0.35, |c1|^2 = 0.65, eigenvalues 0 and 2\n\n");
  show_regime(det, psi, 0.2);
  show_regime(det, psi, 2.0);

  // Same free packet pushed through both dynamical charts.
  const Lattice line = centered_lattice(64, 0.25);
  const HamiltonianKernel kernel = build_kernel(line, 1.0, RVector::Zero(64));
  const Wavefunction packet = gaussian_packet(line, 0.0, 1.4, 0.4);
  const RouteComparison routes = compare_routes(packet, kernel, 0.5, 5e-4);
  std::printf("dual-route check, free packet, t = 0.5, dt = 5e-4:\n");
  std::printf("  max density deviation: %.3e (tolerance %.0e)\n", routes.max_rho_diff,
              kRouteRhoTol);
  std::printf("  max phase deviation:   %.3e (tolerance %.0e)\n", routes.max_phi_diff,
              kRoutePhiTol);
  return 0;
}
