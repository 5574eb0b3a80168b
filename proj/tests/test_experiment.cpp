#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include <edlab/experiment.hpp>
#include <edlab/random.hpp>
#include <edlab/run.hpp>

using namespace edlab;
namespace fs = std::filesystem;

namespace {

// A complete document every mutation test starts from.
const char* kBaseDoc = R"({
  "schema_version": 1,
  "seed": 42,
  "trials": 3,
  "lattice": {"n_sites": 8, "spacing": 0.5, "origin": -2.0},
  "initial_state": {"kind": "gaussian", "center": 0.0, "width": 0.7},
  "measurement": {"kind": "position"},
  "outputs": [{"what": "distribution", "path": "dist.csv", "format": "csv"}]
})";

bool has_error(const std::vector<SpecError>& errors, const std::string& code,
               const std::string& path_part) {
  for (const auto& e : errors)
    if (e.code == code && e.path.find(path_part) != std::string::npos) return true;
  return false;
}

nlohmann::json base_json() { return nlohmann::json::parse(kBaseDoc); }

ParseResult parse_mutated(const nlohmann::json& j) { return parse_spec(j.dump()); }

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("a syntax error reports its source line") {
  const ParseResult r = parse_spec("{\n  \"schema_version\": 1,\n  oops\n}");
  REQUIRE_FALSE(r.ok());
  REQUIRE(r.errors.size() == 1);
  REQUIRE(r.errors[0].code == kErrSyntax);
  REQUIRE(r.errors[0].line == 3);
  REQUIRE_FALSE(r.spec.has_value());
}

TEST_CASE("unknown and missing keys are reported together") {
  nlohmann::json j = base_json();
  j.erase("seed");
  j["wobble"] = 1;
  const ParseResult r = parse_mutated(j);
  REQUIRE(r.errors.size() == 2);
  REQUIRE(has_error(r.errors, kErrSchema, "$.seed"));
  REQUIRE(has_error(r.errors, kErrSchema, "$.wobble"));
}

TEST_CASE("the base document parses completely") {
  const ParseResult r = parse_spec(kBaseDoc);
  REQUIRE(r.ok());
  const ExperimentSpec& s = *r.spec;
  REQUIRE(s.schema_version == 1);
  REQUIRE(s.seed == 42);
  REQUIRE(s.trials == 3);
  REQUIRE(s.hbar == 1.0);
  REQUIRE(s.lattice.n_sites == 8);
  REQUIRE(s.lattice.spacing == 0.5);
  REQUIRE(s.lattice.origin == -2.0);
  REQUIRE(s.initial_state.kind == InitialStateSpec::Kind::gaussian);
  REQUIRE(s.initial_state.momentum == 0.0);
  REQUIRE(s.measurement.kind == MeasurementSpec::Kind::position);
  REQUIRE(s.outputs.size() == 1);
  REQUIRE(s.digest == fnv1a_hex(kBaseDoc));
  REQUIRE_FALSE(s.kernel.has_value());
  REQUIRE_FALSE(s.evolution.has_value());
}

TEST_CASE("the digest tracks the exact source text") {
  const std::string doc(kBaseDoc);
  const ParseResult a = parse_spec(doc);
  const ParseResult b = parse_spec(doc + "\n");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  REQUIRE(a.spec->digest != b.spec->digest);
  REQUIRE(a.spec->digest.size() == 16);
}

TEST_CASE("dimensional problems carry their own error class") {
  nlohmann::json amp = base_json();
  amp["initial_state"] = {{"kind", "amplitudes"},
                          {"re", {1.0, 0.0, 0.0}},
                          {"im", {0.0, 0.0, 0.0}}};
  REQUIRE(has_error(parse_mutated(amp).errors, kErrDimension, "$.initial_state"));

  nlohmann::json site = base_json();
  site["initial_state"] = {{"kind", "basis"}, {"site", 12}};
  REQUIRE(has_error(parse_mutated(site).errors, kErrDimension, "$.initial_state.site"));

  nlohmann::json ragged = base_json();
  ragged["measurement"] = {
      {"kind", "detector"},
      {"detector", {{"kind", "hermitian"}, {"re", {{1.0, 0.0}, {0.0}}}}}};
  REQUIRE(has_error(parse_mutated(ragged).errors, kErrDimension,
                    "$.measurement.detector.re[1]"));

  nlohmann::json pot = base_json();
  pot["kernel"] = {{"mass", 1.0},
                   {"potential", {{"kind", "samples"}, {"values", {1.0, 2.0}}}}};
  REQUIRE(has_error(parse_mutated(pot).errors, kErrDimension,
                    "$.kernel.potential.values"));
}

TEST_CASE("one pass reports every problem") {
  nlohmann::json j = base_json();
  j["trials"] = 0;
  j["hbar"] = -1.0;
  j["kernel"] = {{"mass", 1.0}, {"potential", {{"kind", "quartic"}}}};
  const ParseResult r = parse_mutated(j);
  REQUIRE(r.errors.size() >= 3);
  REQUIRE(has_error(r.errors, kErrSchema, "$.trials"));
  REQUIRE(has_error(r.errors, kErrSchema, "$.hbar"));
  REQUIRE(has_error(r.errors, kErrSchema, "$.kernel.potential.kind"));
  REQUIRE_FALSE(r.spec.has_value());
}

TEST_CASE("output declarations are cross-checked") {
  nlohmann::json dup = base_json();
  dup["outputs"].push_back({{"what", "state"}, {"path", "dist.csv"}, {"format", "json"}});
  REQUIRE(has_error(parse_mutated(dup).errors, kErrSchema, "$.outputs[1].path"));

  nlohmann::json abs = base_json();
  abs["outputs"][0]["path"] = "/tmp/dist.csv";
  REQUIRE(has_error(parse_mutated(abs).errors, kErrSchema, "$.outputs[0].path"));

  nlohmann::json dotdot = base_json();
  dotdot["outputs"][0]["path"] = "../dist.csv";
  REQUIRE(has_error(parse_mutated(dotdot).errors, kErrSchema, "$.outputs[0].path"));

  nlohmann::json what = base_json();
  what["outputs"][0]["what"] = "telemetry";
  REQUIRE(has_error(parse_mutated(what).errors, kErrSchema, "$.outputs[0].what"));

  nlohmann::json combo = base_json();
  combo["outputs"][0] = {{"what", "state"}, {"path", "state.csv"}, {"format", "csv"}};
  REQUIRE(has_error(parse_mutated(combo).errors, kErrSchema, "$.outputs[0].format"));

  nlohmann::json traj = base_json();
  traj["outputs"][0] = {{"what", "trajectory"}, {"path", "t.csv"}, {"format", "csv"}};
  REQUIRE(has_error(parse_mutated(traj).errors, kErrSchema, "$.outputs[0]"));

  nlohmann::json hist = base_json();
  hist["outputs"][0] = {
      {"what", "pointer_histogram"}, {"path", "h.csv"}, {"format", "csv"}};
  REQUIRE(has_error(parse_mutated(hist).errors, kErrSchema, "$.outputs[0]"));

  nlohmann::json ver = base_json();
  ver["outputs"][0] = {{"what", "verify"}, {"path", "v.json"}, {"format", "json"}};
  REQUIRE(has_error(parse_mutated(ver).errors, kErrSchema, "$.outputs[0]"));
}

TEST_CASE("stage dependencies are enforced") {
  nlohmann::json evo = base_json();
  evo["evolution"] = {{"t", 1.0}, {"dt", 0.1}};
  REQUIRE(has_error(parse_mutated(evo).errors, kErrSchema, "$.evolution"));

  nlohmann::json amp = base_json();
  amp["measurement"] = {{"kind", "detector"}, {"detector", {{"kind", "momentum"}}}};
  amp["amplifier"] = {{"kind", "gaussian"},
                      {"record_grid", {{"n_sites", 41}, {"spacing", 0.25}, {"origin", -3.0}}},
                      {"sigma_a", 0.5}};
  REQUIRE(has_error(parse_mutated(amp).errors, kErrSchema, "$.amplifier"));
}

TEST_CASE("seeds cover the full unsigned 64-bit range") {
  nlohmann::json j = base_json();
  j["seed"] = 18446744073709551615ull;
  const ParseResult r = parse_mutated(j);
  REQUIRE(r.ok());
  REQUIRE(r.spec->seed == 0xffffffffffffffffull);

  nlohmann::json neg = base_json();
  neg["seed"] = -1;
  REQUIRE(has_error(parse_mutated(neg).errors, kErrSchema, "$.seed"));
}

TEST_CASE("construction realizes each initial state kind") {
  nlohmann::json basis = base_json();
  basis["initial_state"] = {{"kind", "basis"}, {"site", 5}};
  const BuiltExperiment b1 = build_experiment(*parse_mutated(basis).spec);
  REQUIRE(std::abs(b1.psi.amps[5] - Complex(1.0, 0.0)) == 0.0);

  nlohmann::json amps = base_json();
  amps["initial_state"] = {{"kind", "amplitudes"},
                           {"re", {3.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0}},
                           {"im", {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}}};
  const BuiltExperiment b2 = build_experiment(*parse_mutated(amps).spec);
  REQUIRE(b2.psi.is_normalized());
  REQUIRE(std::abs(b2.psi.amps[0]) == Catch::Approx(0.6));

  const BuiltExperiment b3 = build_experiment(*parse_spec(kBaseDoc).spec);
  REQUIRE(b3.psi.is_normalized());
  REQUIRE_FALSE(b3.kernel.has_value());
  REQUIRE(b3.detector.label == "position");
}

TEST_CASE("construction realizes the potential") {
  nlohmann::json free_doc = base_json();
  free_doc["kernel"] = {{"mass", 2.0}, {"potential", {{"kind", "free"}}}};
  nlohmann::json harm_doc = free_doc;
  harm_doc["kernel"]["potential"] = {{"kind", "harmonic"}, {"omega", 3.0}, {"center", 0.5}};

  const BuiltExperiment free_b = build_experiment(*parse_mutated(free_doc).spec);
  const BuiltExperiment harm_b = build_experiment(*parse_mutated(harm_doc).spec);
  const Lattice lat = free_b.lattice;
  for (int k = 0; k < lat.n_sites; ++k) {
    const double x = lat.coordinate(k) - 0.5;
    const Complex diff = harm_b.kernel->matrix(k, k) - free_b.kernel->matrix(k, k);
    REQUIRE(diff.real() == Catch::Approx(0.5 * 2.0 * 9.0 * x * x).margin(1e-12));
    REQUIRE(diff.imag() == 0.0);
  }
}

TEST_CASE("validation reaches value-level construction failures") {
  REQUIRE(validate_spec(kBaseDoc).empty());

  nlohmann::json skewed = base_json();
  skewed["lattice"] = {{"n_sites", 2}, {"spacing", 1.0}};
  skewed["initial_state"] = {{"kind", "basis"}, {"site", 0}};
  skewed["measurement"] = {
      {"kind", "detector"},
      {"detector",
       {{"kind", "basis"},
        {"re", {{2.0, 0.0}, {0.0, 2.0}}},
        {"im", {{0.0, 0.0}, {0.0, 0.0}}},
        {"eigenvalues", {0.0, 1.0}}}}};
  const auto errors = validate_spec(skewed.dump());
  REQUIRE(errors.size() == 1);
  REQUIRE(errors[0].code == kErrSchema);
  REQUIRE(errors[0].path == "$");

  nlohmann::json tiny_grid = base_json();
  tiny_grid["measurement"] = {
      {"kind", "von_neumann"},
      {"detector", {{"kind", "position"}}},
      {"pointer",
       {{"sigma_pi", 0.3},
        {"grid", {{"n_sites", 5}, {"spacing", 0.25}, {"origin", -0.5}}}}}};
  REQUIRE_FALSE(validate_spec(tiny_grid.dump()).empty());
}

TEST_CASE("float formatting and hashing are pinned") {
  REQUIRE(fmt17(1.0) == "1.0000000000000000e+00");
  REQUIRE(fmt17(-2.5e-3) == "-2.5000000000000001e-03");
  REQUIRE(fmt17(0.5) == "5.0000000000000000e-01");
  REQUIRE(fmt17(0.0) == "0.0000000000000000e+00");
  REQUIRE(fnv1a_hex("") == "cbf29ce484222325");
  REQUIRE(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("state json round trips bit for bit") {
  const Lattice lat(6, 1.0 / 3.0, -0.7);
  Rng rng(2718);
  Wavefunction psi = random_wavefunction(lat, rng, 0.5);
  psi.amps[0] = Complex(0.1, 1.0 / 3.0);
  psi.amps[1] = Complex(1e-300, -2.5e-17);
  psi.amps[2] = Complex(kPi, std::sqrt(2.0));
  const std::string text = dump_json(state_to_json(psi));
  const Wavefunction back = state_from_json(nlohmann::json::parse(text));
  REQUIRE(back.lattice == psi.lattice);
  REQUIRE(back.hbar == psi.hbar);
  for (int k = 0; k < lat.n_sites; ++k) REQUIRE(back.amps[k] == psi.amps[k]);
}

TEST_CASE("state json rejects malformed documents") {
  nlohmann::json j = state_to_json(basis_state(Lattice(4, 1.0), 0));
  j.erase("hbar");
  REQUIRE_THROWS_AS(state_from_json(j), std::invalid_argument);
  nlohmann::json short_arrays = state_to_json(basis_state(Lattice(4, 1.0), 0));
  short_arrays["re"] = {1.0, 0.0};
  REQUIRE_THROWS_AS(state_from_json(short_arrays), std::invalid_argument);
}

TEST_CASE("written text keeps its exact bytes") {
  const fs::path dir = fresh_dir("edlab_io_test");
  const std::string content = "alpha\nbeta\n";
  write_text_file(dir / "sub" / "file.txt", content);
  const std::string back = read_text_file(dir / "sub" / "file.txt");
  REQUIRE(back == content);
  REQUIRE(back.find('\r') == std::string::npos);
}

TEST_CASE("distribution csv layout is exact") {
  OutcomeDistribution d;
  d.probs = RVector(2);
  d.probs << 0.25, 0.75;
  d.eigenvalues = RVector(2);
  d.eigenvalues << -1.0, 2.0;
  d.detector_label = "demo";
  REQUIRE(distribution_csv(d) ==
          "k,alpha_k,prob\n"
          "0,-1.0000000000000000e+00,2.5000000000000000e-01\n"
          "1,2.0000000000000000e+00,7.5000000000000000e-01\n");
}

namespace {

// Full-feature document used by the determinism checks: evolution, position
// measurement, amplification, and a verify block all at once.
nlohmann::json golden_position_doc() {
  nlohmann::json j = base_json();
  j["trials"] = 4096;
  j["kernel"] = {{"mass", 1.0}, {"potential", {{"kind", "free"}}}};
  j["evolution"] = {{"t", 0.05}, {"dt", 0.005}, {"record_every", 4}};
  j["amplifier"] = {{"kind", "gaussian"},
                    {"record_grid", {{"n_sites", 53}, {"spacing", 0.25}, {"origin", -5.0}}},
                    {"sigma_a", 0.5}};
  j["verify"] = {{{"identity", "born-e"}, {"instances", 2}}};
  j["outputs"] = {
      {{"what", "state"}, {"path", "state.json"}, {"format", "json"}},
      {{"what", "trajectory"}, {"path", "trajectory.csv"}, {"format", "csv"}},
      {{"what", "distribution"}, {"path", "dist.csv"}, {"format", "csv"}},
      {{"what", "distribution"}, {"path", "dist.json"}, {"format", "json"}},
      {{"what", "samples"}, {"path", "samples.csv"}, {"format", "csv"}},
      {{"what", "amplifier_samples"}, {"path", "amp/samples.csv"}, {"format", "csv"}},
      {{"what", "amplifier_posterior"}, {"path", "amp/posterior.csv"}, {"format", "csv"}},
      {{"what", "verify"}, {"path", "verify.json"}, {"format", "json"}},
      {{"what", "report"}, {"path", "report.json"}, {"format", "json"}}};
  return j;
}

nlohmann::json golden_pointer_doc() {
  nlohmann::json j = base_json();
  j["trials"] = 64;
  j["lattice"] = {{"n_sites", 4}, {"spacing", 1.0}, {"origin", 0.0}};
  j["initial_state"] = {{"kind", "gaussian"}, {"center", 1.5}, {"width", 0.8}};
  j["measurement"] = {
      {"kind", "von_neumann"},
      {"detector", {{"kind", "position"}}},
      {"pointer",
       {{"sigma_pi", 0.3},
        {"grid", {{"n_sites", 45}, {"spacing", 0.15}, {"origin", -1.8}}}}}};
  j["outputs"] = {
      {{"what", "distribution"}, {"path", "dist.csv"}, {"format", "csv"}},
      {{"what", "samples"}, {"path", "samples.csv"}, {"format", "csv"}},
      {{"what", "pointer_histogram"}, {"path", "hist.csv"}, {"format", "csv"}},
      {{"what", "posterior"}, {"path", "posterior.csv"}, {"format", "csv"}},
      {{"what", "report"}, {"path", "report.json"}, {"format", "json"}}};
  return j;
}

std::vector<std::string> artifact_paths(const ExperimentSpec& spec) {
  std::vector<std::string> out;
  for (const auto& o : spec.outputs) out.push_back(o.path);
  return out;
}

}  // namespace

TEST_CASE("a full run writes every artifact and reruns byte-identically") {
  const ParseResult parsed = parse_mutated(golden_position_doc());
  REQUIRE(parsed.ok());

  const fs::path dir_a = fresh_dir("edlab_golden_a");
  const fs::path dir_b = fresh_dir("edlab_golden_b");
  const RunReport ra = run(*parsed.spec, {dir_a.string(), {}, 1});
  const RunReport rb = run(*parsed.spec, {dir_b.string(), {}, 1});

  REQUIRE(ra.all_pass());
  REQUIRE(ra.warnings.empty());
  REQUIRE(ra.manifest.size() == parsed.spec->outputs.size() - 1);  // report not self-listed
  for (const std::string& rel : artifact_paths(*parsed.spec)) {
    CAPTURE(rel);
    REQUIRE(fs::exists(dir_a / rel));
    REQUIRE(read_text_file(dir_a / rel) == read_text_file(dir_b / rel));
  }

  const std::string traj = read_text_file(dir_a / "trajectory.csv");
  const long rows = std::count(traj.begin(), traj.end(), '\n');
  REQUIRE(rows == 1 + 4 * 8);  // header + snapshots at t=0, s=4, s=8, s=10

  const nlohmann::json report = nlohmann::json::parse(read_text_file(dir_a / "report.json"));
  REQUIRE(report.at("spec_digest") == parsed.spec->digest);
  REQUIRE_FALSE(report.contains("timings_ms"));
  REQUIRE(report.at("verify").size() == 1);
  REQUIRE(report.at("verify")[0].at("pass") == true);
}

TEST_CASE("sampling artifacts do not depend on the job count") {
  const ParseResult parsed = parse_mutated(golden_position_doc());
  REQUIRE(parsed.ok());
  const fs::path serial = fresh_dir("edlab_jobs_1");
  const fs::path threaded = fresh_dir("edlab_jobs_4");
  run(*parsed.spec, {serial.string(), {}, 1});
  run(*parsed.spec, {threaded.string(), {}, 4});
  for (const std::string& rel : artifact_paths(*parsed.spec)) {
    CAPTURE(rel);
    REQUIRE(read_text_file(serial / rel) == read_text_file(threaded / rel));
  }
}

TEST_CASE("pointer runs write their artifacts deterministically") {
  const ParseResult parsed = parse_mutated(golden_pointer_doc());
  REQUIRE(parsed.ok());
  const fs::path dir_a = fresh_dir("edlab_pointer_a");
  const fs::path dir_b = fresh_dir("edlab_pointer_b");
  run(*parsed.spec, {dir_a.string(), {}, 1});
  run(*parsed.spec, {dir_b.string(), {}, 1});
  for (const std::string& rel : artifact_paths(*parsed.spec)) {
    CAPTURE(rel);
    REQUIRE(read_text_file(dir_a / rel) == read_text_file(dir_b / rel));
  }
  const std::string hist = read_text_file(dir_a / "hist.csv");
  REQUIRE(hist.rfind("X,prob\n", 0) == 0);
  const std::string post = read_text_file(dir_a / "posterior.csv");
  REQUIRE(std::count(post.begin(), post.end(), '\n') == 1 + 45 * 4);
}

TEST_CASE("a seed override changes the draws and is reported") {
  const ParseResult parsed = parse_mutated(golden_pointer_doc());
  REQUIRE(parsed.ok());
  const fs::path dir_a = fresh_dir("edlab_seed_a");
  const fs::path dir_b = fresh_dir("edlab_seed_b");
  const RunReport ra = run(*parsed.spec, {dir_a.string(), {}, 1});
  const RunReport rb = run(*parsed.spec, {dir_b.string(), 777, 1});
  REQUIRE(ra.seed == 42);
  REQUIRE(rb.seed == 777);
  REQUIRE(read_text_file(dir_a / "samples.csv") != read_text_file(dir_b / "samples.csv"));
  REQUIRE(read_text_file(dir_a / "dist.csv") == read_text_file(dir_b / "dist.csv"));
}

TEST_CASE("amplifier clipping warnings surface in the run report") {
  nlohmann::json j = base_json();
  j["amplifier"] = {{"kind", "gaussian"},
                    {"record_grid", {{"n_sites", 33}, {"spacing", 0.25}, {"origin", -2.5}}},
                    {"sigma_a", 0.5}};
  const ParseResult parsed = parse_mutated(j);
  REQUIRE(parsed.ok());
  const fs::path dir = fresh_dir("edlab_warn");
  const RunReport r = run(*parsed.spec, {dir.string(), {}, 1});
  REQUIRE_FALSE(r.warnings.empty());
}
