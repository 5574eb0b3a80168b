#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "amplification.hpp"
#include "detectors.hpp"
#include "dynamics.hpp"
#include "io.hpp"
#include "pointer.hpp"

namespace edlab {

// Machine-readable error classes reported by the experiment-file front end.
inline constexpr const char* kErrSyntax = "syntax-error";
inline constexpr const char* kErrSchema = "schema-violation";
inline constexpr const char* kErrDimension = "dimensional-inconsistency";

struct SpecError {
  std::string code;     // one of the three classes above
  std::string path;     // JSON-pointer-ish location, $ rooted
  std::string message;  // human summary
  int line = 0;         // source line for syntax errors, 0 otherwise
};

struct LatticeSpec {
  int n_sites = 0;
  double spacing = 0.0;
  double origin = 0.0;

  Lattice build() const { return Lattice(n_sites, spacing, origin); }
};

struct InitialStateSpec {
  enum class Kind { gaussian, basis, amplitudes };
  Kind kind = Kind::gaussian;
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;
  int site = 0;
  RVector re;
  RVector im;
};

struct PotentialSpec {
  enum class Kind { free_space, harmonic, samples };
  Kind kind = Kind::free_space;
  double omega = 0.0;
  double center = 0.0;
  RVector values;
};

struct KernelSpec {
  double mass = 1.0;
  PotentialSpec potential;
  Boundary boundary = Boundary::hard_wall;
};

struct EvolutionSpec {
  double t = 0.0;
  double dt = 0.0;
  long record_every = 0;  // 0 records endpoints only
};

struct DetectorSpec {
  enum class Kind { position, momentum, energy, hermitian, basis };
  Kind kind = Kind::position;
  CMatrix matrix;       // hermitian: the observable; basis: columns are |s_k>
  RVector eigenvalues;  // basis kind only
};

struct PointerSpec {
  double sigma_pi = 0.0;
  double ready_center = 0.0;
  LatticeSpec grid;
};

struct MeasurementSpec {
  enum class Kind { position, detector, von_neumann };
  Kind kind = Kind::position;
  std::optional<DetectorSpec> detector;
  std::optional<PointerSpec> pointer;
};

struct AmplifierSpec {
  enum class Kind { gaussian, matrix };
  Kind kind = Kind::gaussian;
  LatticeSpec record_grid;
  double sigma_a = 0.0;
  RMatrix rows;  // matrix kind: one row per record cell
};

struct VerifySpec {
  std::string identity;  // born-e | born-f | route-equivalence
  int instances = 20;
};

struct OutputSpec {
  std::string what;
  std::string path;    // relative to the run's output directory
  std::string format;  // csv | json
};

struct ExperimentSpec {
  int schema_version = 1;
  std::uint64_t seed = 0;
  long trials = 1;
  double hbar = 1.0;
  LatticeSpec lattice;
  InitialStateSpec initial_state;
  std::optional<KernelSpec> kernel;
  std::optional<EvolutionSpec> evolution;
  MeasurementSpec measurement;
  std::optional<AmplifierSpec> amplifier;
  std::vector<VerifySpec> verify;
  std::vector<OutputSpec> outputs;
  std::string digest;  // content hash of the source text, set by parse_spec
};

struct ParseResult {
  std::optional<ExperimentSpec> spec;
  std::vector<SpecError> errors;

  bool ok() const { return errors.empty() && spec.has_value(); }
};

namespace spec_detail {

inline bool name_in(const std::string& name, std::initializer_list<const char*> list) {
  for (const char* c : list)
    if (name == c) return true;
  return false;
}

// Accumulates errors while walking the document; every getter records a
// schema violation instead of throwing, so one pass reports everything wrong.
struct Parser {
  std::vector<SpecError>* errors;

  void err(const char* code, const std::string& path, const std::string& message) {
    errors->push_back({code, path, message, 0});
  }

  // Unknown keys are hard schema violations; missing required keys likewise.
  bool keys(const nlohmann::json& j, const std::string& path,
            std::initializer_list<const char*> required,
            std::initializer_list<const char*> optional_keys) {
    if (!j.is_object()) {
      err(kErrSchema, path, "expected an object");
      return false;
    }
    bool ok = true;
    for (const auto& item : j.items()) {
      if (!name_in(item.key(), required) && !name_in(item.key(), optional_keys)) {
        err(kErrSchema, path + "." + item.key(), "unknown key");
        ok = false;
      }
    }
    for (const char* k : required) {
      if (!j.contains(k)) {
        err(kErrSchema, path + "." + k, "missing required key");
        ok = false;
      }
    }
    return ok;
  }

  std::optional<double> number(const nlohmann::json& j, const std::string& path,
                               const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_number()) {
      err(kErrSchema, path + "." + key, "expected a number");
      return {};
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      err(kErrSchema, path + "." + key, "expected a finite number");
      return {};
    }
    return x;
  }

  std::optional<long> integer(const nlohmann::json& j, const std::string& path,
                              const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_number_integer()) {
      err(kErrSchema, path + "." + key, "expected an integer");
      return {};
    }
    return v.get<long>();
  }

  std::optional<std::uint64_t> unsigned_integer(const nlohmann::json& j,
                                                const std::string& path,
                                                const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      err(kErrSchema, path + "." + key, "expected a non-negative integer");
      return {};
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string(const nlohmann::json& j, const std::string& path,
                                    const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_string()) {
      err(kErrSchema, path + "." + key, "expected a string");
      return {};
    }
    return v.get<std::string>();
  }

  std::optional<RVector> real_array(const nlohmann::json& j, const std::string& path,
                                    const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_array()) {
      err(kErrSchema, path + "." + key, "expected an array of numbers");
      return {};
    }
    RVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        err(kErrSchema, path + "." + key + "[" + std::to_string(i) + "]",
            "expected a finite number");
        return {};
      }
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  std::optional<RMatrix> real_matrix(const nlohmann::json& j, const std::string& path,
                                     const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_array() || v.empty()) {
      err(kErrSchema, path + "." + key, "expected a non-empty array of rows");
      return {};
    }
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    RMatrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
      const std::string row_path = path + "." + key + "[" + std::to_string(r) + "]";
      if (!v[r].is_array()) {
        err(kErrSchema, row_path, "expected an array of numbers");
        return {};
      }
      if (v[r].size() != cols) {
        err(kErrDimension, row_path, "rows have unequal lengths");
        return {};
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (!v[r][c].is_number() || !std::isfinite(v[r][c].get<double>())) {
          err(kErrSchema, row_path + "[" + std::to_string(c) + "]",
              "expected a finite number");
          return {};
        }
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            v[r][c].get<double>();
      }
    }
    return out;
  }

  std::optional<LatticeSpec> lattice(const nlohmann::json& j, const std::string& path) {
    if (!keys(j, path, {"n_sites", "spacing"}, {"origin"})) return {};
    LatticeSpec out;
    bool ok = true;
    if (const auto n = integer(j, path, "n_sites")) {
      if (*n < 2) {
        err(kErrSchema, path + ".n_sites", "must be at least 2");
        ok = false;
      } else {
        out.n_sites = static_cast<int>(*n);
      }
    } else {
      ok = false;
    }
    if (const auto s = number(j, path, "spacing")) {
      if (!(*s > 0.0)) {
        err(kErrSchema, path + ".spacing", "must be positive");
        ok = false;
      } else {
        out.spacing = *s;
      }
    } else {
      ok = false;
    }
    out.origin = number(j, path, "origin").value_or(0.0);
    if (!ok) return {};
    return out;
  }
};

}  // namespace spec_detail

// Parse and fully validate an experiment document. All problems found in one
// pass are reported together; `spec` is populated only when the list is empty.
inline ParseResult parse_spec(const std::string& text) {
  ParseResult result;
  spec_detail::Parser p{&result.errors};

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1;
    const std::size_t stop = std::min(e.byte, text.size());
    for (std::size_t i = 0; i < stop; ++i)
      if (text[i] == '\n') ++line;
    result.errors.push_back({kErrSyntax, "$", e.what(), line});
    return result;
  }

  ExperimentSpec spec;
  spec.digest = fnv1a_hex(text);

  if (!p.keys(j, "$", {"schema_version", "seed", "trials", "lattice", "initial_state",
                       "measurement", "outputs"},
              {"hbar", "kernel", "evolution", "amplifier", "verify"}))
    return result;

  if (const auto v = p.integer(j, "$", "schema_version")) {
    if (*v != 1) p.err(kErrSchema, "$.schema_version", "unsupported version, expected 1");
    spec.schema_version = static_cast<int>(*v);
  }
  if (const auto v = p.unsigned_integer(j, "$", "seed")) spec.seed = *v;
  if (const auto v = p.integer(j, "$", "trials")) {
    if (*v < 1) p.err(kErrSchema, "$.trials", "must be at least 1");
    spec.trials = *v;
  }
  if (const auto v = p.number(j, "$", "hbar")) {
    if (!(*v > 0.0)) p.err(kErrSchema, "$.hbar", "must be positive");
    spec.hbar = *v;
  }

  if (j.contains("lattice")) {
    if (const auto lat = p.lattice(j.at("lattice"), "$.lattice")) spec.lattice = *lat;
  }
  const int n_sites = spec.lattice.n_sites;

  if (j.contains("initial_state")) {
    const auto& js = j.at("initial_state");
    const std::string path = "$.initial_state";
    if (js.is_object() && js.contains("kind") && js.at("kind").is_string()) {
      const std::string kind = js.at("kind").get<std::string>();
      auto& init = spec.initial_state;
      if (kind == "gaussian") {
        init.kind = InitialStateSpec::Kind::gaussian;
        if (p.keys(js, path, {"kind", "center", "width"}, {"momentum"})) {
          init.center = p.number(js, path, "center").value_or(0.0);
          if (const auto w = p.number(js, path, "width")) {
            if (!(*w > 0.0)) p.err(kErrSchema, path + ".width", "must be positive");
            init.width = *w;
          }
          init.momentum = p.number(js, path, "momentum").value_or(0.0);
        }
      } else if (kind == "basis") {
        init.kind = InitialStateSpec::Kind::basis;
        if (p.keys(js, path, {"kind", "site"}, {})) {
          if (const auto s = p.integer(js, path, "site")) {
            init.site = static_cast<int>(*s);
            if (init.site < 0 || init.site >= n_sites)
              p.err(kErrDimension, path + ".site", "site index outside the lattice");
          }
        }
      } else if (kind == "amplitudes") {
        init.kind = InitialStateSpec::Kind::amplitudes;
        if (p.keys(js, path, {"kind", "re", "im"}, {})) {
          const auto re = p.real_array(js, path, "re");
          const auto im = p.real_array(js, path, "im");
          if (re && im) {
            if (re->size() != n_sites || im->size() != n_sites)
              p.err(kErrDimension, path, "re/im length does not match lattice.n_sites");
            init.re = *re;
            init.im = *im;
          }
        }
      } else {
        p.err(kErrSchema, path + ".kind",
              "expected one of gaussian | basis | amplitudes");
      }
    } else {
      p.err(kErrSchema, path, "expected an object with a string kind");
    }
  }

  if (j.contains("kernel")) {
    const auto& jk = j.at("kernel");
    const std::string path = "$.kernel";
    KernelSpec kernel;
    if (p.keys(jk, path, {"mass", "potential"}, {"boundary"})) {
      if (const auto m = p.number(jk, path, "mass")) {
        if (!(*m > 0.0)) p.err(kErrSchema, path + ".mass", "must be positive");
        kernel.mass = *m;
      }
      if (const auto b = p.string(jk, path, "boundary")) {
        if (*b == "hard_wall") kernel.boundary = Boundary::hard_wall;
        else if (*b == "periodic") kernel.boundary = Boundary::periodic;
        else p.err(kErrSchema, path + ".boundary", "expected hard_wall | periodic");
      }
      if (jk.contains("potential")) {
        const auto& jp = jk.at("potential");
        const std::string ppath = path + ".potential";
        if (jp.is_object() && jp.contains("kind") && jp.at("kind").is_string()) {
          const std::string kind = jp.at("kind").get<std::string>();
          if (kind == "free") {
            kernel.potential.kind = PotentialSpec::Kind::free_space;
            p.keys(jp, ppath, {"kind"}, {});
          } else if (kind == "harmonic") {
            kernel.potential.kind = PotentialSpec::Kind::harmonic;
            if (p.keys(jp, ppath, {"kind", "omega"}, {"center"})) {
              if (const auto w = p.number(jp, ppath, "omega")) {
                if (!(*w > 0.0)) p.err(kErrSchema, ppath + ".omega", "must be positive");
                kernel.potential.omega = *w;
              }
              kernel.potential.center = p.number(jp, ppath, "center").value_or(0.0);
            }
          } else if (kind == "samples") {
            kernel.potential.kind = PotentialSpec::Kind::samples;
            if (p.keys(jp, ppath, {"kind", "values"}, {})) {
              if (const auto v = p.real_array(jp, ppath, "values")) {
                if (v->size() != n_sites)
                  p.err(kErrDimension, ppath + ".values",
                        "sample count does not match lattice.n_sites");
                kernel.potential.values = *v;
              }
            }
          } else {
            p.err(kErrSchema, ppath + ".kind", "expected one of free | harmonic | samples");
          }
        } else {
          p.err(kErrSchema, ppath, "expected an object with a string kind");
        }
      }
    }
    spec.kernel = kernel;
  }

  if (j.contains("evolution")) {
    const auto& je = j.at("evolution");
    const std::string path = "$.evolution";
    EvolutionSpec evo;
    if (p.keys(je, path, {"t", "dt"}, {"record_every"})) {
      if (const auto t = p.number(je, path, "t")) {
        if (!(*t >= 0.0)) p.err(kErrSchema, path + ".t", "must be non-negative");
        evo.t = *t;
      }
      if (const auto dt = p.number(je, path, "dt")) {
        if (!(*dt > 0.0)) p.err(kErrSchema, path + ".dt", "must be positive");
        evo.dt = *dt;
      }
      if (const auto r = p.integer(je, path, "record_every")) {
        if (*r < 0) p.err(kErrSchema, path + ".record_every", "must be non-negative");
        evo.record_every = *r;
      }
    }
    if (!spec.kernel.has_value())
      p.err(kErrSchema, path, "evolution requires a kernel");
    spec.evolution = evo;
  }

  const auto parse_detector = [&](const nlohmann::json& jd,
                                  const std::string& path) -> std::optional<DetectorSpec> {
    DetectorSpec det;
    if (!jd.is_object() || !jd.contains("kind") || !jd.at("kind").is_string()) {
      p.err(kErrSchema, path, "expected an object with a string kind");
      return {};
    }
    const std::string kind = jd.at("kind").get<std::string>();
    if (kind == "position") {
      det.kind = DetectorSpec::Kind::position;
      p.keys(jd, path, {"kind"}, {});
    } else if (kind == "momentum") {
      det.kind = DetectorSpec::Kind::momentum;
      p.keys(jd, path, {"kind"}, {});
    } else if (kind == "energy") {
      det.kind = DetectorSpec::Kind::energy;
      p.keys(jd, path, {"kind"}, {});
      if (!spec.kernel.has_value())
        p.err(kErrSchema, path, "energy detector requires a kernel");
    } else if (kind == "hermitian") {
      det.kind = DetectorSpec::Kind::hermitian;
      if (p.keys(jd, path, {"kind", "re"}, {"im"})) {
        const auto re = p.real_matrix(jd, path, "re");
        std::optional<RMatrix> im = p.real_matrix(jd, path, "im");
        if (re) {
          if (re->rows() != n_sites || re->cols() != n_sites)
            p.err(kErrDimension, path + ".re", "matrix shape does not match n_sites");
          det.matrix = re->cast<Complex>();
          if (im) {
            if (im->rows() != re->rows() || im->cols() != re->cols())
              p.err(kErrDimension, path + ".im", "im shape does not match re");
            else
              det.matrix += Complex(0.0, 1.0) * im->cast<Complex>();
          }
        }
      }
    } else if (kind == "basis") {
      det.kind = DetectorSpec::Kind::basis;
      if (p.keys(jd, path, {"kind", "re", "im", "eigenvalues"}, {})) {
        const auto re = p.real_matrix(jd, path, "re");
        const auto im = p.real_matrix(jd, path, "im");
        const auto ev = p.real_array(jd, path, "eigenvalues");
        if (re && im && ev) {
          if (re->rows() != n_sites || re->cols() != n_sites)
            p.err(kErrDimension, path + ".re", "matrix shape does not match n_sites");
          else if (im->rows() != re->rows() || im->cols() != re->cols())
            p.err(kErrDimension, path + ".im", "im shape does not match re");
          else
            det.matrix = re->cast<Complex>() + Complex(0.0, 1.0) * im->cast<Complex>();
          if (ev->size() != n_sites)
            p.err(kErrDimension, path + ".eigenvalues",
                  "eigenvalue count does not match n_sites");
          det.eigenvalues = *ev;
        }
      }
    } else {
      p.err(kErrSchema, path + ".kind",
            "expected one of position | momentum | energy | hermitian | basis");
      return {};
    }
    return det;
  };

  if (j.contains("measurement")) {
    const auto& jm = j.at("measurement");
    const std::string path = "$.measurement";
    if (jm.is_object() && jm.contains("kind") && jm.at("kind").is_string()) {
      const std::string kind = jm.at("kind").get<std::string>();
      auto& meas = spec.measurement;
      if (kind == "position") {
        meas.kind = MeasurementSpec::Kind::position;
        p.keys(jm, path, {"kind"}, {});
      } else if (kind == "detector") {
        meas.kind = MeasurementSpec::Kind::detector;
        if (p.keys(jm, path, {"kind", "detector"}, {}) && jm.contains("detector"))
          meas.detector = parse_detector(jm.at("detector"), path + ".detector");
      } else if (kind == "von_neumann") {
        meas.kind = MeasurementSpec::Kind::von_neumann;
        if (p.keys(jm, path, {"kind", "detector", "pointer"}, {})) {
          if (jm.contains("detector"))
            meas.detector = parse_detector(jm.at("detector"), path + ".detector");
          if (jm.contains("pointer")) {
            const auto& jp = jm.at("pointer");
            const std::string ppath = path + ".pointer";
            PointerSpec ptr;
            if (p.keys(jp, ppath, {"sigma_pi", "grid"}, {"ready_center"})) {
              if (const auto s = p.number(jp, ppath, "sigma_pi")) {
                if (!(*s > 0.0)) p.err(kErrSchema, ppath + ".sigma_pi", "must be positive");
                ptr.sigma_pi = *s;
              }
              ptr.ready_center = p.number(jp, ppath, "ready_center").value_or(0.0);
              if (jp.contains("grid")) {
                if (const auto g = p.lattice(jp.at("grid"), ppath + ".grid"))
                  ptr.grid = *g;
              }
            }
            meas.pointer = ptr;
          }
        }
      } else {
        p.err(kErrSchema, path + ".kind",
              "expected one of position | detector | von_neumann");
      }
    } else {
      p.err(kErrSchema, path, "expected an object with a string kind");
    }
  }

  if (j.contains("amplifier")) {
    const auto& ja = j.at("amplifier");
    const std::string path = "$.amplifier";
    AmplifierSpec amp;
    if (ja.is_object() && ja.contains("kind") && ja.at("kind").is_string()) {
      const std::string kind = ja.at("kind").get<std::string>();
      if (kind == "gaussian") {
        amp.kind = AmplifierSpec::Kind::gaussian;
        if (p.keys(ja, path, {"kind", "record_grid", "sigma_a"}, {})) {
          if (const auto s = p.number(ja, path, "sigma_a")) {
            if (!(*s > 0.0)) p.err(kErrSchema, path + ".sigma_a", "must be positive");
            amp.sigma_a = *s;
          }
          if (ja.contains("record_grid")) {
            if (const auto g = p.lattice(ja.at("record_grid"), path + ".record_grid"))
              amp.record_grid = *g;
          }
        }
      } else if (kind == "matrix") {
        amp.kind = AmplifierSpec::Kind::matrix;
        if (p.keys(ja, path, {"kind", "record_grid", "rows"}, {})) {
          if (ja.contains("record_grid")) {
            if (const auto g = p.lattice(ja.at("record_grid"), path + ".record_grid"))
              amp.record_grid = *g;
          }
          if (const auto rows = p.real_matrix(ja, path, "rows")) {
            amp.rows = *rows;
            if (amp.rows.cols() != n_sites)
              p.err(kErrDimension, path + ".rows",
                    "row length does not match lattice.n_sites");
            if (amp.record_grid.n_sites > 0 && amp.rows.rows() != amp.record_grid.n_sites)
              p.err(kErrDimension, path + ".rows",
                    "row count does not match record_grid.n_sites");
          }
        }
      } else {
        p.err(kErrSchema, path + ".kind", "expected one of gaussian | matrix");
      }
      if (spec.measurement.kind != MeasurementSpec::Kind::position)
        p.err(kErrSchema, path, "amplifier requires a position measurement");
    } else {
      p.err(kErrSchema, path, "expected an object with a string kind");
    }
    spec.amplifier = amp;
  }

  if (j.contains("verify")) {
    const auto& jv = j.at("verify");
    if (!jv.is_array()) {
      p.err(kErrSchema, "$.verify", "expected an array");
    } else {
      for (std::size_t i = 0; i < jv.size(); ++i) {
        const std::string path = "$.verify[" + std::to_string(i) + "]";
        VerifySpec v;
        if (p.keys(jv[i], path, {"identity"}, {"instances"})) {
          if (const auto id = p.string(jv[i], path, "identity")) {
            if (*id != "born-e" && *id != "born-f" && *id != "route-equivalence")
              p.err(kErrSchema, path + ".identity",
                    "expected one of born-e | born-f | route-equivalence");
            v.identity = *id;
          }
          if (const auto n = p.integer(jv[i], path, "instances")) {
            if (*n < 1) p.err(kErrSchema, path + ".instances", "must be at least 1");
            v.instances = static_cast<int>(*n);
          }
        }
        spec.verify.push_back(v);
      }
    }
  }

  if (j.contains("outputs")) {
    const auto& jo = j.at("outputs");
    if (!jo.is_array()) {
      p.err(kErrSchema, "$.outputs", "expected an array");
    } else {
      std::set<std::string> seen_paths;
      for (std::size_t i = 0; i < jo.size(); ++i) {
        const std::string path = "$.outputs[" + std::to_string(i) + "]";
        OutputSpec out;
        if (p.keys(jo[i], path, {"what", "path", "format"}, {})) {
          out.what = p.string(jo[i], path, "what").value_or("");
          out.path = p.string(jo[i], path, "path").value_or("");
          out.format = p.string(jo[i], path, "format").value_or("");

          static const std::vector<std::pair<std::string, std::string>> kAllowed = {
              {"state", "json"},
              {"trajectory", "csv"},
              {"distribution", "csv"},
              {"distribution", "json"},
              {"samples", "csv"},
              {"pointer_histogram", "csv"},
              {"posterior", "csv"},
              {"amplifier_samples", "csv"},
              {"amplifier_posterior", "csv"},
              {"verify", "json"},
              {"report", "json"}};
          bool what_known = false;
          bool combo_ok = false;
          for (const auto& [w, f] : kAllowed) {
            if (w == out.what) what_known = true;
            if (w == out.what && f == out.format) combo_ok = true;
          }
          if (!what_known)
            p.err(kErrSchema, path + ".what", "unknown artifact kind");
          else if (!combo_ok)
            p.err(kErrSchema, path + ".format",
                  "format not available for this artifact kind");

          if (out.path.empty() || out.path.front() == '/' ||
              out.path.find("..") != std::string::npos)
            p.err(kErrSchema, path + ".path",
                  "path must be relative and must not contain ..");
          else if (!seen_paths.insert(out.path).second)
            p.err(kErrSchema, path + ".path", "duplicate output path");

          if (out.what == "trajectory" && !spec.evolution.has_value())
            p.err(kErrSchema, path, "trajectory output requires evolution");
          const bool von_neumann =
              spec.measurement.kind == MeasurementSpec::Kind::von_neumann;
          if ((out.what == "pointer_histogram" || out.what == "posterior") && !von_neumann)
            p.err(kErrSchema, path,
                  out.what + " output requires a von_neumann measurement");
          if ((out.what == "amplifier_samples" || out.what == "amplifier_posterior") &&
              !spec.amplifier.has_value())
            p.err(kErrSchema, path, out.what + " output requires an amplifier");
          if (out.what == "verify" && spec.verify.empty())
            p.err(kErrSchema, path, "verify output requires at least one verify block");
        }
        spec.outputs.push_back(out);
      }
    }
  }

  if (!result.errors.empty()) return result;
  result.spec = std::move(spec);
  return result;
}

// Concrete objects assembled from a parsed spec. Value-level problems that
// only surface on construction (a non-orthonormal basis, a pointer grid that
// cannot hold its packets) are reported through the same error channel.
struct BuiltExperiment {
  Lattice lattice;
  Wavefunction psi;
  std::optional<HamiltonianKernel> kernel;
  Detector detector;  // position detector when the measurement is positional
  std::optional<PointerDevice> device;
  std::optional<Amplifier> amplifier;
  std::vector<std::string> warnings;
};

inline BuiltExperiment build_experiment(const ExperimentSpec& spec) {
  const Lattice lattice = spec.lattice.build();

  const auto make_psi = [&]() -> Wavefunction {
    const auto& init = spec.initial_state;
    switch (init.kind) {
      case InitialStateSpec::Kind::gaussian:
        return gaussian_packet(lattice, init.center, init.width, init.momentum, spec.hbar);
      case InitialStateSpec::Kind::basis:
        return basis_state(lattice, init.site, spec.hbar);
      case InitialStateSpec::Kind::amplitudes: {
        CVector a(lattice.n_sites);
        for (int k = 0; k < lattice.n_sites; ++k) a[k] = Complex(init.re[k], init.im[k]);
        return Wavefunction(lattice, std::move(a), spec.hbar).normalized();
      }
    }
    fail("build_experiment: unreachable initial state kind");
  };

  std::optional<HamiltonianKernel> kernel;
  if (spec.kernel) {
    RVector v = RVector::Zero(lattice.n_sites);
    switch (spec.kernel->potential.kind) {
      case PotentialSpec::Kind::free_space:
        break;
      case PotentialSpec::Kind::harmonic: {
        const double w = spec.kernel->potential.omega;
        const double c = spec.kernel->potential.center;
        for (int k = 0; k < lattice.n_sites; ++k) {
          const double x = lattice.coordinate(k) - c;
          v[k] = 0.5 * spec.kernel->mass * w * w * x * x;
        }
        break;
      }
      case PotentialSpec::Kind::samples:
        v = spec.kernel->potential.values;
        break;
    }
    kernel = build_kernel(lattice, spec.kernel->mass, v, spec.hbar, spec.kernel->boundary);
  }

  const auto make_detector = [&]() -> Detector {
    if (spec.measurement.kind == MeasurementSpec::Kind::position)
      return position_detector(lattice);
    const DetectorSpec& d = *spec.measurement.detector;
    switch (d.kind) {
      case DetectorSpec::Kind::position:
        return position_detector(lattice);
      case DetectorSpec::Kind::momentum:
        return momentum_detector(lattice, spec.hbar);
      case DetectorSpec::Kind::energy:
        return energy_detector(*kernel);
      case DetectorSpec::Kind::hermitian:
        return detector_from_hermitian(lattice, d.matrix);
      case DetectorSpec::Kind::basis:
        return Detector(lattice, d.matrix, d.eigenvalues, "basis");
    }
    fail("build_experiment: unreachable detector kind");
  };

  BuiltExperiment built{lattice, make_psi(), std::move(kernel), make_detector(), {}, {}, {}};

  if (spec.measurement.pointer) {
    const PointerSpec& ps = *spec.measurement.pointer;
    built.device = PointerDevice(ps.grid.build(), ps.sigma_pi, ps.ready_center);
  }

  if (spec.amplifier) {
    const AmplifierSpec& as = *spec.amplifier;
    if (as.kind == AmplifierSpec::Kind::gaussian) {
      AmplifierBuild b = gaussian_amplifier(lattice, as.record_grid.build(), as.sigma_a);
      built.amplifier = std::move(b.amplifier);
      built.warnings.insert(built.warnings.end(), b.warnings.begin(), b.warnings.end());
    } else {
      built.amplifier = Amplifier(lattice, as.record_grid.build(), as.rows);
    }
  }
  return built;
}

// Full document check: parse, then attempt construction so value-level
// problems are caught before any run starts.
inline std::vector<SpecError> validate_spec(const std::string& text) {
  ParseResult parsed = parse_spec(text);
  if (!parsed.ok()) return parsed.errors;
  try {
    (void)build_experiment(*parsed.spec);
  } catch (const std::exception& e) {
    return {{kErrSchema, "$", e.what(), 0}};
  }
  return {};
}

}  // namespace edlab
