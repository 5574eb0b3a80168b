#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "checks.hpp"
#include "experiment.hpp"
#include "io.hpp"

namespace edlab {

namespace detail {

// Seed hierarchy: the experiment seed fans out to one base per stage, each
// stage base fans out to one stream per trial. Every artifact is therefore
// independent of job count and of which other stages run.
inline constexpr std::uint64_t kMeasureStage = 1;
inline constexpr std::uint64_t kAmplifyStage = 2;
inline constexpr std::uint64_t kVerifyStage = 3;

template <class Body>
inline void parallel_for(long n, int jobs, const Body& body) {
  jobs = std::max(1, std::min(jobs, 64));
  if (jobs == 1 || n < 4096) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    const long lo = n * w / jobs;
    const long hi = n * (w + 1) / jobs;
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

struct RunOptions {
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the document's seed
  int jobs = 1;
};

struct RunReport {
  struct FileEntry {
    std::string what;
    std::string path;
    std::string format;
    std::uint64_t bytes = 0;
  };
  struct VerifyEntry {
    std::string identity;
    int count = 0;
    double max_discrepancy = 0.0;
    bool pass = true;
  };

  std::string spec_digest;
  std::uint64_t seed = 0;
  long trials = 0;
  std::vector<FileEntry> manifest;
  std::vector<VerifyEntry> verify;
  std::vector<std::string> warnings;
  std::vector<std::pair<std::string, double>> timings_ms;

  bool all_pass() const {
    for (const auto& v : verify)
      if (!v.pass) return false;
    return true;
  }

  // Timings are wall-clock noise, so files on disk never include them; the
  // flag exists for the console report.
  nlohmann::json to_json(bool include_timings) const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["spec_digest"] = spec_digest;
    j["seed"] = seed;
    j["trials"] = trials;
    j["manifest"] = nlohmann::json::array();
    for (const auto& f : manifest)
      j["manifest"].push_back(
          {{"what", f.what}, {"path", f.path}, {"format", f.format}, {"bytes", f.bytes}});
    j["verify"] = nlohmann::json::array();
    for (const auto& v : verify)
      j["verify"].push_back({{"identity", v.identity},
                             {"count", v.count},
                             {"max_discrepancy", v.max_discrepancy},
                             {"pass", v.pass}});
    j["warnings"] = warnings;
    if (include_timings) {
      nlohmann::json t;
      for (const auto& [name, ms] : timings_ms) t[name] = ms;
      j["timings_ms"] = t;
    }
    return j;
  }
};

// Execute a validated spec: build, evolve, measure, amplify, verify, write.
// Every requested artifact lands under opt.out_dir at its declared relative
// path. Rerunning the same spec and seed writes byte-identical files.
inline RunReport run(const ExperimentSpec& spec, const RunOptions& opt = {}) {
  using Clock = std::chrono::steady_clock;
  RunReport report;
  report.spec_digest = spec.digest;
  report.seed = opt.seed.value_or(spec.seed);
  report.trials = spec.trials;
  const std::uint64_t seed = report.seed;

  const auto wants = [&](const char* what) {
    for (const auto& o : spec.outputs)
      if (o.what == what) return true;
    return false;
  };

  auto stage_start = Clock::now();
  const auto lap = [&](const char* name) {
    const auto now = Clock::now();
    report.timings_ms.emplace_back(
        name, std::chrono::duration<double, std::milli>(now - stage_start).count());
    stage_start = now;
  };

  BuiltExperiment built = build_experiment(spec);
  report.warnings = built.warnings;
  lap("build");

  // Evolve, recording trajectory rows while stepping if anyone asked for them.
  Wavefunction psi = built.psi;
  std::string trajectory_csv;
  if (spec.evolution) {
    const EvolutionSpec& evo = *spec.evolution;
    const long steps = evo.dt > 0.0 ? std::lround(evo.t / evo.dt) : 0;
    const bool record = wants("trajectory");
    const Propagator prop(*built.kernel, evo.dt);
    if (record) trajectory_csv = "t,site,re,im,rho,phi\n";
    const auto record_state = [&](double t, const Wavefunction& w) {
      const EpistemicPair pair = to_pair(w);
      for (int k = 0; k < w.lattice.n_sites; ++k) {
        trajectory_csv += fmt17(t);
        trajectory_csv += ',';
        trajectory_csv += std::to_string(k);
        trajectory_csv += ',';
        trajectory_csv += fmt17(w.amps[k].real());
        trajectory_csv += ',';
        trajectory_csv += fmt17(w.amps[k].imag());
        trajectory_csv += ',';
        trajectory_csv += fmt17(pair.rho[k]);
        trajectory_csv += ',';
        trajectory_csv += fmt17(pair.phi[k]);
        trajectory_csv += '\n';
      }
    };
    if (record) record_state(0.0, psi);
    for (long s = 1; s <= steps; ++s) {
      psi = prop.apply(psi);
      const bool due = (evo.record_every > 0 && s % evo.record_every == 0) || s == steps;
      if (record && due) record_state(s * evo.dt, psi);
    }
  }
  lap("evolve");

  // Measurement artifacts. The distribution is exact; samples are one stream
  // per trial off the measurement stage base.
  const std::uint64_t measure_seed = derive_seed(seed, detail::kMeasureStage);
  OutcomeDistribution dist = born_rule(built.detector, psi);
  std::optional<JointState> joint;
  if (built.device) joint = couple(built.detector, psi, *built.device);

  std::string distribution_csv_text;
  nlohmann::json distribution_json_doc;
  {
    OutcomeDistribution reported = dist;
    if (joint) {
      const EigenvalueDistribution grouped =
          eigenvalue_marginal(*joint, built.detector.eigenvalues);
      reported =
          OutcomeDistribution{grouped.probs, grouped.values, built.detector.label};
    }
    distribution_csv_text = distribution_csv(reported);
    distribution_json_doc = distribution_json(reported);
  }

  std::string samples_csv;
  if (wants("samples")) {
    samples_csv = "trial,outcome,value\n";
    std::vector<int> outcome(static_cast<std::size_t>(spec.trials));
    if (joint) {
      const RVector marginal = pointer_marginal(*joint);
      detail::parallel_for(spec.trials, opt.jobs, [&](long t) {
        Rng rng(derive_seed(measure_seed, static_cast<std::uint64_t>(t)));
        outcome[static_cast<std::size_t>(t)] =
            static_cast<int>(sample_index(marginal, rng.u01()));
      });
      for (long t = 0; t < spec.trials; ++t) {
        samples_csv += std::to_string(t);
        samples_csv += ',';
        samples_csv += std::to_string(outcome[static_cast<std::size_t>(t)]);
        samples_csv += ',';
        samples_csv += fmt17(
            built.device->grid.coordinate(outcome[static_cast<std::size_t>(t)]));
        samples_csv += '\n';
      }
    } else {
      detail::parallel_for(spec.trials, opt.jobs, [&](long t) {
        Rng rng(derive_seed(measure_seed, static_cast<std::uint64_t>(t)));
        outcome[static_cast<std::size_t>(t)] =
            static_cast<int>(sample_index(dist.probs, rng.u01()));
      });
      for (long t = 0; t < spec.trials; ++t) {
        samples_csv += std::to_string(t);
        samples_csv += ',';
        samples_csv += std::to_string(outcome[static_cast<std::size_t>(t)]);
        samples_csv += ',';
        samples_csv += fmt17(dist.eigenvalues[outcome[static_cast<std::size_t>(t)]]);
        samples_csv += '\n';
      }
    }
  }

  std::string pointer_histogram_csv;
  if (wants("pointer_histogram")) {
    const RVector marginal = pointer_marginal(*joint);
    pointer_histogram_csv = "X,prob\n";
    for (int i = 0; i < joint->device.grid.n_sites; ++i) {
      pointer_histogram_csv += fmt17(joint->device.grid.coordinate(i));
      pointer_histogram_csv += ',';
      pointer_histogram_csv += fmt17(marginal[i]);
      pointer_histogram_csv += '\n';
    }
  }

  std::string posterior_csv;
  if (wants("posterior")) {
    posterior_csv = "X,k,posterior\n";
    for (int i = 0; i < joint->device.grid.n_sites; ++i) {
      const double x = joint->device.grid.coordinate(i);
      const RVector post = infer_eigenvalue(*joint, built.detector.eigenvalues, x);
      for (Eigen::Index k = 0; k < post.size(); ++k) {
        posterior_csv += fmt17(x);
        posterior_csv += ',';
        posterior_csv += std::to_string(k);
        posterior_csv += ',';
        posterior_csv += fmt17(post[k]);
        posterior_csv += '\n';
      }
    }
  }
  lap("measure");

  // Amplification artifacts, on their own stage base.
  const std::uint64_t amplify_seed = derive_seed(seed, detail::kAmplifyStage);
  std::string amplifier_samples_csv;
  std::string amplifier_posterior_csv;
  if (built.amplifier) {
    const Amplifier& amp = *built.amplifier;
    if (wants("amplifier_samples")) {
      std::vector<RecordSample> recs(static_cast<std::size_t>(spec.trials),
                                     RecordSample{0, 0});
      detail::parallel_for(spec.trials, opt.jobs, [&](long t) {
        recs[static_cast<std::size_t>(t)] =
            simulate_record(amp, psi, derive_seed(amplify_seed, static_cast<std::uint64_t>(t)));
      });
      amplifier_samples_csv = "trial,site,record,record_coordinate\n";
      for (long t = 0; t < spec.trials; ++t) {
        const RecordSample& r = recs[static_cast<std::size_t>(t)];
        amplifier_samples_csv += std::to_string(t);
        amplifier_samples_csv += ',';
        amplifier_samples_csv += std::to_string(r.site);
        amplifier_samples_csv += ',';
        amplifier_samples_csv += std::to_string(r.record);
        amplifier_samples_csv += ',';
        amplifier_samples_csv += fmt17(amp.record_grid.coordinate(r.record));
        amplifier_samples_csv += '\n';
      }
    }
    if (wants("amplifier_posterior")) {
      const RVector prior = born_position(psi);
      amplifier_posterior_csv = "record,site,posterior\n";
      for (int a = 0; a < amp.record_grid.n_sites; ++a) {
        const double evidence = prior.dot(amp.likelihood.row(a).transpose());
        if (!(evidence > 0.0)) continue;  // cell unreachable under this state
        const RVector post = infer_position(amp, prior, a);
        for (int x = 0; x < amp.lattice.n_sites; ++x) {
          amplifier_posterior_csv += std::to_string(a);
          amplifier_posterior_csv += ',';
          amplifier_posterior_csv += std::to_string(x);
          amplifier_posterior_csv += ',';
          amplifier_posterior_csv += fmt17(post[x]);
          amplifier_posterior_csv += '\n';
        }
      }
    }
  }
  lap("amplify");

  // Identity batches, one derived base per block.
  const std::uint64_t verify_seed = derive_seed(seed, detail::kVerifyStage);
  nlohmann::json verify_doc = nlohmann::json::array();
  for (std::size_t b = 0; b < spec.verify.size(); ++b) {
    const VerifySpec& v = spec.verify[b];
    const BatchVerifyReport r =
        run_verify(v.identity, v.instances, derive_seed(verify_seed, b));
    report.verify.push_back({r.identity, r.count, r.max_discrepancy, r.pass});
    verify_doc.push_back(r.to_json());
  }
  lap("verify");

  // Write everything at its declared path; the report lists what landed.
  const std::filesystem::path root(opt.out_dir);
  std::string state_text;
  std::string distribution_text_json;
  std::string verify_text;
  for (const auto& o : spec.outputs) {
    const std::string* content = nullptr;
    if (o.what == "state") {
      if (state_text.empty()) state_text = dump_json(state_to_json(psi));
      content = &state_text;
    } else if (o.what == "trajectory") {
      content = &trajectory_csv;
    } else if (o.what == "distribution") {
      if (o.format == "csv") {
        content = &distribution_csv_text;
      } else {
        if (distribution_text_json.empty())
          distribution_text_json = dump_json(distribution_json_doc);
        content = &distribution_text_json;
      }
    } else if (o.what == "samples") {
      content = &samples_csv;
    } else if (o.what == "pointer_histogram") {
      content = &pointer_histogram_csv;
    } else if (o.what == "posterior") {
      content = &posterior_csv;
    } else if (o.what == "amplifier_samples") {
      content = &amplifier_samples_csv;
    } else if (o.what == "amplifier_posterior") {
      content = &amplifier_posterior_csv;
    } else if (o.what == "verify") {
      if (verify_text.empty())
        verify_text = dump_json(nlohmann::json{{"reports", verify_doc}});
      content = &verify_text;
    } else if (o.what == "report") {
      continue;  // serialized last, after the manifest is complete
    }
    if (content == nullptr) fail("run: unhandled artifact kind " + o.what);
    write_text_file(root / o.path, *content);
    report.manifest.push_back({o.what, o.path, o.format, content->size()});
  }
  std::string report_text;
  for (const auto& o : spec.outputs) {
    if (o.what != "report") continue;
    if (report_text.empty()) report_text = dump_json(report.to_json(false));
    write_text_file(root / o.path, report_text);
  }
  lap("write");
  return report;
}

}  // namespace edlab
