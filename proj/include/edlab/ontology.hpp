#pragma once

#include <optional>
#include <string>
#include <utility>

#include "pointer.hpp"

namespace edlab {

// A preparation procedure in the ontological-model sense: the epistemic state
// it assigns, plus the pointer device when the procedure includes one. The
// ontic sample space is then the lattice alone, or the product
// lattice x pointer grid flattened row-major (site index major).
struct Preparation {
  Wavefunction psi;
  std::optional<PointerDevice> device;
  std::string label;

  explicit Preparation(Wavefunction psi_, std::optional<PointerDevice> device_ = {},
                       std::string label_ = "preparation")
      : psi(std::move(psi_)), device(std::move(device_)), label(std::move(label_)) {
    if (!psi.is_normalized()) fail("Preparation: wavefunction is not normalized");
  }
};

inline Eigen::Index ont_state_count(const Preparation& prep) {
  Eigen::Index n = prep.psi.lattice.n_sites;
  if (prep.device) n *= prep.device->grid.n_sites;
  return n;
}

inline Eigen::Index ont_flatten(const Preparation& prep, int site, int pointer_cell = 0) {
  const Eigen::Index stride = prep.device ? prep.device->grid.n_sites : 1;
  return static_cast<Eigen::Index>(site) * stride + pointer_cell;
}

// Distribution the preparation induces on the ontic states: |psi(x)|^2, times
// |pi(X)|^2 of the ready packet when a pointer is part of the procedure.
inline RVector prep_distribution(const Preparation& prep) {
  const RVector sys = born_position(prep.psi);
  if (!prep.device) return sys;
  const RVector ready = prep.device->ready_state().cwiseAbs2();
  const Eigen::Index nx = sys.size();
  const Eigen::Index ng = ready.size();
  RVector out(nx * ng);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ng; ++j) out[i * ng + j] = sys[i] * ready[j];
  return out;
}

// Outcome probabilities the theory assigns to the preparation as a whole:
// plain Born weights without a pointer, branch masses of the coupled joint
// state with one.
inline RVector ed_outcome_probs(const Preparation& prep, const Detector& det) {
  if (!prep.device) return born_rule(det, prep.psi).probs;
  const JointState joint = couple(det, prep.psi, *prep.device);
  RVector p(joint.coeffs.size());
  for (Eigen::Index k = 0; k < joint.coeffs.size(); ++k)
    p[k] = (joint.coeffs[k] * joint.packets.col(k)).squaredNorm();
  return p;
}

// Response function of an ontological model. Two kinds are representable:
//   ontic        - a stochastic table indexed by (ontic state, outcome), the
//                  classical case where the response depends on lambda alone;
//   ed_epistemic - the response this framework actually uses, which depends on
//                  the whole epistemic state and ignores which lambda occurred.
struct ResponseFunction {
  enum class Kind { ed_epistemic, ontic };

  Kind kind = Kind::ed_epistemic;
  RMatrix table;  // ontic kind only: rows sum to 1
  std::string label;

  static ResponseFunction ed(std::string label_ = "ed-epistemic") {
    ResponseFunction r;
    r.kind = Kind::ed_epistemic;
    r.label = std::move(label_);
    return r;
  }

  static ResponseFunction from_table(RMatrix table_, std::string label_ = "ontic") {
    ResponseFunction r;
    r.kind = Kind::ontic;
    r.table = std::move(table_);
    r.label = std::move(label_);
    if (!r.table.allFinite() || r.table.minCoeff() < 0.0)
      fail("ResponseFunction: table entries must be finite and non-negative");
    for (Eigen::Index i = 0; i < r.table.rows(); ++i)
      if (std::abs(r.table.row(i).sum() - 1.0) > 1e-10)
        fail("ResponseFunction: table row " + std::to_string(i) + " is not normalized");
    return r;
  }
};

// Outcome statistics from an explicit distribution over ontic states. Exposed
// separately from marginalize so tests can reweight lambda and watch whether
// the answer moves: for an ontic table it does, for the ed_epistemic response
// it cannot, because that response never reads lambda.
inline RVector marginalize_over(const RVector& lambda_dist, const Preparation& prep,
                                const ResponseFunction& resp, const Detector& det) {
  if (lambda_dist.size() != ont_state_count(prep))
    fail("marginalize_over: lambda distribution size does not match the ontic space");
  if (!lambda_dist.allFinite() || lambda_dist.minCoeff() < 0.0)
    fail("marginalize_over: lambda distribution is not a probability vector");
  if (std::abs(lambda_dist.sum() - 1.0) > kNormTol)
    fail("marginalize_over: lambda distribution does not sum to 1");
  const Eigen::Index n_out = det.lattice.n_sites;
  RVector out = RVector::Zero(n_out);
  if (resp.kind == ResponseFunction::Kind::ontic) {
    if (resp.table.rows() != lambda_dist.size() || resp.table.cols() != n_out)
      fail("marginalize_over: response table shape does not match space and outcomes");
    for (Eigen::Index l = 0; l < lambda_dist.size(); ++l)
      out += lambda_dist[l] * resp.table.row(l).transpose();
  } else {
    const RVector q = ed_outcome_probs(prep, det);
    for (Eigen::Index l = 0; l < lambda_dist.size(); ++l) out += lambda_dist[l] * q;
  }
  const double total = out.sum();
  if (!(total > 0.0)) fail("marginalize_over: response assigns zero total mass");
  return out / total;
}

// Outcome statistics of the model: response averaged over the preparation's
// own distribution on ontic states.
inline RVector marginalize(const Preparation& prep, const ResponseFunction& resp,
                           const Detector& det) {
  return marginalize_over(prep_distribution(prep), prep, resp, det);
}

struct VerifyReport {
  std::string identity;
  double max_discrepancy = 0.0;
  bool pass = false;
};

// Pointer-free consistency check: averaging the epistemic response over
// p(x|P) = |psi(x)|^2 must reproduce the Born weights |<s_k|psi>|^2 exactly,
// because the response does not depend on x. The sum is spelled out rather
// than simplified away, that is the identity under test.
inline VerifyReport verify_direct(const Preparation& prep, const Detector& det) {
  if (prep.device) fail("verify_direct: preparation must not include a pointer");
  const RVector lambda = prep_distribution(prep);
  const RVector q = born_rule(det, prep.psi).probs;
  const Eigen::Index n = q.size();
  RVector lhs = RVector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < lambda.size(); ++l) acc += lambda[l] * q[k];
    lhs[k] = acc;
  }
  const double d = (lhs - q).cwiseAbs().maxCoeff();
  return {"born-e", d, d < 1e-12};
}

// Pointer-inclusive consistency check: the ontic space is the product of
// system and pointer grids, the preparation distribution carries the ready
// packet, and the response comes from the coupled joint state. Averaging must
// again land on the Born weights.
inline VerifyReport verify_von_neumann(const Preparation& prep, const Detector& det) {
  if (!prep.device) fail("verify_von_neumann: preparation must include a pointer");
  const RVector lambda = prep_distribution(prep);
  const RVector q = ed_outcome_probs(prep, det);
  const RVector born = born_rule(det, prep.psi).probs;
  const Eigen::Index n = q.size();
  RVector lhs = RVector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    double acc = 0.0;
    for (Eigen::Index l = 0; l < lambda.size(); ++l) acc += lambda[l] * q[k];
    lhs[k] = acc;
  }
  const double d = (lhs - born).cwiseAbs().maxCoeff();
  return {"born-f", d, d < 1e-10};
}

}  // namespace edlab
