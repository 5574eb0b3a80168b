#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "detectors.hpp"
#include "state.hpp"

namespace edlab {

// The one float format used in every text artifact: scientific, 17 significant
// digits, enough to round-trip a double bit for bit.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

// FNV-1a over a byte string, reported as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Binary mode keeps line endings exactly as written.
inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write_text_file: short write to " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

inline nlohmann::json state_to_json(const Wavefunction& psi) {
  nlohmann::json j;
  j["n_sites"] = psi.lattice.n_sites;
  j["spacing"] = psi.lattice.spacing;
  j["origin"] = psi.lattice.origin;
  j["hbar"] = psi.hbar;
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  for (int k = 0; k < psi.lattice.n_sites; ++k) {
    re.push_back(psi.amps[k].real());
    im.push_back(psi.amps[k].imag());
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

inline Wavefunction state_from_json(const nlohmann::json& j) {
  for (const char* key : {"n_sites", "spacing", "origin", "hbar", "re", "im"})
    if (!j.contains(key)) fail(std::string("state_from_json: missing key ") + key);
  const int n = j.at("n_sites").get<int>();
  const Lattice lat(n, j.at("spacing").get<double>(), j.at("origin").get<double>());
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (!re.is_array() || !im.is_array() || static_cast<int>(re.size()) != n ||
      static_cast<int>(im.size()) != n)
    fail("state_from_json: re/im must be arrays of length n_sites");
  CVector a(n);
  for (int k = 0; k < n; ++k)
    a[k] = Complex(re[k].get<double>(), im[k].get<double>());
  return Wavefunction(lat, std::move(a), j.at("hbar").get<double>());
}

// Stable serialization: sorted keys, no whitespace surprises, LF terminated.
inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string distribution_csv(const OutcomeDistribution& dist) {
  std::string out = "k,alpha_k,prob\n";
  for (Eigen::Index k = 0; k < dist.probs.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    out += fmt17(dist.eigenvalues[k]);
    out += ',';
    out += fmt17(dist.probs[k]);
    out += '\n';
  }
  return out;
}

inline std::string distribution_csv(const EigenvalueDistribution& dist) {
  std::string out = "k,alpha_k,prob\n";
  for (Eigen::Index k = 0; k < dist.probs.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    out += fmt17(dist.values[k]);
    out += ',';
    out += fmt17(dist.probs[k]);
    out += '\n';
  }
  return out;
}

inline nlohmann::json distribution_json(const OutcomeDistribution& dist) {
  nlohmann::json j;
  j["detector"] = dist.detector_label;
  j["alpha"] = nlohmann::json::array();
  j["prob"] = nlohmann::json::array();
  for (Eigen::Index k = 0; k < dist.probs.size(); ++k) {
    j["alpha"].push_back(dist.eigenvalues[k]);
    j["prob"].push_back(dist.probs[k]);
  }
  return j;
}

}  // namespace edlab
