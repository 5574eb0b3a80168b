#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynamics.hpp"
#include "ontology.hpp"
#include "random.hpp"

namespace edlab {

// Outcome of running one consistency identity over a batch of random
// instances. `instances` holds one JSON record per instance so reports stay
// inspectable without rerunning.
struct BatchVerifyReport {
  std::string identity;
  int count = 0;
  std::uint64_t seed = 0;
  double max_discrepancy = 0.0;
  bool pass = true;
  nlohmann::json instances = nlohmann::json::array();

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["identity"] = identity;
    j["count"] = count;
    j["seed"] = seed;
    j["max_discrepancy"] = max_discrepancy;
    j["pass"] = pass;
    j["instances"] = instances;
    return j;
  }
};

// Pointer-free identity over random states and random orthonormal detectors.
// Lattice sizes cycle through a few small values so degenerate shapes are hit.
inline BatchVerifyReport verify_born_e_batch(int count, std::uint64_t seed) {
  BatchVerifyReport report;
  report.identity = "born-e";
  report.count = count;
  report.seed = seed;
  const int sizes[] = {4, 8, 16};
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int n = sizes[i % 3];
    const Lattice lat(n, 0.5, -0.25 * (n - 1));
    const Wavefunction psi = random_wavefunction(lat, rng);
    RVector alpha(n);
    for (int k = 0; k < n; ++k) alpha[k] = rng.normal();
    const Detector det(lat, random_unitary(n, rng), std::move(alpha), "random");
    const VerifyReport r = verify_direct(Preparation(psi), det);
    report.max_discrepancy = std::max(report.max_discrepancy, r.max_discrepancy);
    report.pass = report.pass && r.pass;
    report.instances.push_back(
        {{"index", i}, {"discrepancy", r.max_discrepancy}, {"pass", r.pass}});
  }
  return report;
}

// Pointer-inclusive identity over random states, random detectors, and three
// pointer widths two decades apart. Each instance also checks that the
// marginal outcome weights do not move when sigma_pi changes.
inline BatchVerifyReport verify_born_f_batch(int count, std::uint64_t seed) {
  BatchVerifyReport report;
  report.identity = "born-f";
  report.count = count;
  report.seed = seed;
  const double widths[] = {0.01, 0.1, 1.0};
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int n = 8;
    const Lattice lat(n, 0.5, -0.25 * (n - 1));
    const Wavefunction psi = random_wavefunction(lat, rng);
    RVector alpha(n);
    for (int k = 0; k < n; ++k) alpha[k] = 1.5 * rng.normal();
    const Detector det(lat, random_unitary(n, rng), alpha, "random");

    double instance_disc = 0.0;
    bool instance_pass = true;
    std::vector<RVector> marginals;
    for (const double sigma : widths) {
      const PointerDevice device(pointer_grid_for(alpha, sigma), sigma);
      const Preparation prep(psi, device);
      const VerifyReport r = verify_von_neumann(prep, det);
      instance_disc = std::max(instance_disc, r.max_discrepancy);
      instance_pass = instance_pass && r.pass;
      marginals.push_back(ed_outcome_probs(prep, det));
    }
    double drift = 0.0;
    for (std::size_t a = 0; a + 1 < marginals.size(); ++a)
      drift = std::max(drift, (marginals[a] - marginals[a + 1]).cwiseAbs().maxCoeff());
    instance_pass = instance_pass && drift < 1e-8;

    report.max_discrepancy = std::max(report.max_discrepancy, instance_disc);
    report.pass = report.pass && instance_pass;
    report.instances.push_back({{"index", i},
                                {"discrepancy", instance_disc},
                                {"width_drift", drift},
                                {"pass", instance_pass}});
  }
  return report;
}

struct RouteComparison {
  double max_rho_diff = 0.0;
  double max_phi_diff = 0.0;  // compared modulo 2 pi hbar
};

// Propagate the same initial state through both charts and compare site by
// site. Phases are compared modulo the 2 pi hbar gauge period.
inline RouteComparison compare_routes(const Wavefunction& psi,
                                      const HamiltonianKernel& kernel, double t,
                                      double dt) {
  const Wavefunction end_complex = evolve_schrodinger(psi, kernel, t, dt);
  const EpistemicPair end_canonical = hamilton_flow(to_pair(psi), kernel, t, dt);
  const EpistemicPair reference = to_pair(end_complex);
  RouteComparison out;
  out.max_rho_diff = (end_canonical.rho - reference.rho).cwiseAbs().maxCoeff();
  const double period = 2.0 * kPi * psi.hbar;
  for (int k = 0; k < psi.lattice.n_sites; ++k) {
    if (reference.rho[k] <= kRhoFloor) continue;  // phase is interpolated there
    const double d =
        std::abs(wrap_centered(end_canonical.phi[k] - reference.phi[k], period));
    out.max_phi_diff = std::max(out.max_phi_diff, d);
  }
  return out;
}

inline constexpr double kRouteRhoTol = 1e-6;
inline constexpr double kRoutePhiTol = 1e-5;

// Two-route agreement over random free Gaussian packets on a 64-site lattice.
// Packet parameters are kept away from the walls so no site starts under the
// node floor.
inline BatchVerifyReport verify_route_equivalence_batch(int count, std::uint64_t seed,
                                                        double dt = 5e-4) {
  BatchVerifyReport report;
  report.identity = "route-equivalence";
  report.count = count;
  report.seed = seed;
  const Lattice lat = centered_lattice(64, 0.25);
  const HamiltonianKernel kernel = build_kernel(lat, 1.0, RVector::Zero(lat.n_sites));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const double center = -0.5 + 1.0 * rng.u01();
    const double width = 1.3 + 0.3 * rng.u01();
    const double momentum = -0.5 + 1.0 * rng.u01();
    const Wavefunction psi = gaussian_packet(lat, center, width, momentum);
    const RouteComparison c = compare_routes(psi, kernel, 0.5, dt);
    const bool pass = c.max_rho_diff < kRouteRhoTol && c.max_phi_diff < kRoutePhiTol;
    report.max_discrepancy = std::max(report.max_discrepancy, c.max_rho_diff);
    report.pass = report.pass && pass;
    report.instances.push_back({{"index", i},
                                {"rho_diff", c.max_rho_diff},
                                {"phi_diff", c.max_phi_diff},
                                {"pass", pass}});
  }
  return report;
}

// Dispatcher for the three identities the command line knows about.
inline BatchVerifyReport run_verify(const std::string& identity, int count,
                                    std::uint64_t seed) {
  if (identity == "born-e") return verify_born_e_batch(count, seed);
  if (identity == "born-f") return verify_born_f_batch(count, seed);
  if (identity == "route-equivalence") return verify_route_equivalence_batch(count, seed);
  fail("run_verify: unknown identity " + identity);
}

}  // namespace edlab
