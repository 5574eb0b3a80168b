#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "state.hpp"

namespace edlab {

// Classical amplification stage: the conditional law P(record | site) taking a
// microscopic position to a macroscopic record cell. Columns are indexed by
// lattice site and must each be a probability distribution over the record grid.
struct Amplifier {
  Lattice lattice;
  Lattice record_grid;
  RMatrix likelihood;  // likelihood(a, x) = P(record a | site x)

  Amplifier(Lattice lat, Lattice record, RMatrix likelihood_)
      : lattice(lat), record_grid(record), likelihood(std::move(likelihood_)) {
    if (likelihood.rows() != record_grid.n_sites || likelihood.cols() != lattice.n_sites)
      fail("Amplifier: likelihood shape does not match the two grids");
    if (!likelihood.allFinite()) fail("Amplifier: non-finite likelihood entry");
    if (likelihood.minCoeff() < 0.0) fail("Amplifier: negative likelihood entry");
    for (int x = 0; x < lattice.n_sites; ++x) {
      if (std::abs(likelihood.col(x).sum() - 1.0) > 1e-10)
        fail("Amplifier: likelihood column " + std::to_string(x) +
             " is not normalized over the record grid");
    }
  }
};

struct AmplifierBuild {
  Amplifier amplifier;
  std::vector<std::string> warnings;
};

// Gaussian response of width sigma_a about each site, normalized cell by cell
// over the record grid. A record grid too narrow to hold a column's Gaussian
// mass is reported as a warning, not an error; the column is renormalized over
// the cells that exist.
inline AmplifierBuild gaussian_amplifier(const Lattice& lat, const Lattice& record,
                                         double sigma_a) {
  if (!(sigma_a > 0.0) || !std::isfinite(sigma_a))
    fail("gaussian_amplifier: sigma_a must be positive and finite");
  RMatrix likelihood(record.n_sites, lat.n_sites);
  std::vector<std::string> warnings;
  const double cell = record.spacing;
  const double full_mass = std::sqrt(2.0 * kPi) * sigma_a;
  for (int x = 0; x < lat.n_sites; ++x) {
    const double cx = lat.coordinate(x);
    for (int a = 0; a < record.n_sites; ++a) {
      const double d = (record.coordinate(a) - cx) / sigma_a;
      likelihood(a, x) = std::exp(-0.5 * d * d);
    }
    const double raw = likelihood.col(x).sum();
    if (!(raw > 0.0))
      fail("gaussian_amplifier: record grid misses site " + std::to_string(x) +
           " entirely; widen the grid or increase sigma_a");
    if (raw * cell < full_mass * (1.0 - 1e-6))
      warnings.push_back("record grid truncates the response of site " +
                         std::to_string(x) + "; widen it to keep the full mass");
    likelihood.col(x) /= raw;
  }
  return {Amplifier(lat, record, std::move(likelihood)), std::move(warnings)};
}

struct RecordSample {
  int site;    // latent microscopic outcome
  int record;  // observed macroscopic cell
};

// One shot of the full chain: draw a site from |psi|^2, then a record cell
// from that site's likelihood column. Callers hand in a per-trial seed
// (derive_seed of a base seed and the trial index).
inline RecordSample simulate_record(const Amplifier& amp, const Wavefunction& psi,
                                    std::uint64_t seed) {
  if (!(amp.lattice == psi.lattice)) fail("simulate_record: lattice mismatch");
  const RVector rho = born_position(psi);
  Rng rng(seed);
  const int site = static_cast<int>(sample_index(rho, rng.u01()));
  const int record = static_cast<int>(sample_index(amp.likelihood.col(site), rng.u01()));
  return {site, record};
}

// Posterior over sites given one observed record cell: prior times the
// record's likelihood row, renormalized.
inline RVector infer_position(const Amplifier& amp, const RVector& prior, int record) {
  if (prior.size() != amp.lattice.n_sites)
    fail("infer_position: prior size does not match n_sites");
  if (!prior.allFinite() || prior.minCoeff() < 0.0)
    fail("infer_position: prior is not a probability vector");
  if (std::abs(prior.sum() - 1.0) > kNormTol)
    fail("infer_position: prior does not sum to 1");
  if (record < 0 || record >= amp.record_grid.n_sites)
    fail("infer_position: record cell out of range");
  RVector post = prior.cwiseProduct(amp.likelihood.row(record).transpose());
  const double evidence = post.sum();
  if (!(evidence > 0.0))
    fail("infer_position: record has zero evidence under this prior");
  return post / evidence;
}

}  // namespace edlab
