// Command-line front end: run experiment files, validate them, or exercise
// the built-in consistency identities.
//
// Exit codes: 0 success, 2 validation failure, 3 verification failure.
// EDLAB_OUT_DIR, when set, overrides the default output directory of `run`.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <edlab/edlab.hpp>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitVerification = 3;

void print_errors(const std::vector<edlab::SpecError>& errors) {
  nlohmann::json doc;
  doc["errors"] = nlohmann::json::array();
  for (const auto& e : errors) {
    nlohmann::json je{{"code", e.code}, {"path", e.path}, {"message", e.message}};
    if (e.line > 0) je["line"] = e.line;
    doc["errors"].push_back(je);
  }
  std::cerr << doc.dump(2) << "\n";
}

std::string default_out_dir() {
  const char* env = std::getenv("EDLAB_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entropic-dynamics laboratory"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir = default_out_dir();
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int jobs = 1;

  CLI::App* cmd_run = app.add_subcommand("run", "execute an experiment file");
  cmd_run->add_option("spec", spec_path, "experiment JSON file")->required();
  cmd_run->add_option("--out-dir", out_dir, "directory artifacts are written under");
  cmd_run->add_option("--seed", seed_override, "override the document's seed")
      ->each([&](const std::string&) { seed_given = true; });
  cmd_run->add_option("--jobs", jobs, "worker threads for sampling loops")
      ->check(CLI::Range(1, 64));

  std::string validate_path;
  CLI::App* cmd_validate = app.add_subcommand("validate", "check an experiment file");
  cmd_validate->add_option("spec", validate_path, "experiment JSON file")->required();

  std::string identity;
  int instances = 20;
  std::uint64_t verify_seed = 0;
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "run one consistency identity on random instances");
  cmd_verify->add_option("identity", identity, "born-e | born-f | route-equivalence")
      ->required()
      ->check(CLI::IsMember({"born-e", "born-f", "route-equivalence"}));
  cmd_verify->add_option("--instances", instances, "number of random instances")
      ->check(CLI::PositiveNumber);
  cmd_verify->add_option("--seed", verify_seed, "base seed for the batch");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      std::string text;
      try {
        text = edlab::read_text_file(spec_path);
      } catch (const std::exception& e) {
        print_errors({{edlab::kErrSyntax, "$", e.what(), 0}});
        return kExitValidation;
      }
      edlab::ParseResult parsed = edlab::parse_spec(text);
      if (!parsed.ok()) {
        print_errors(parsed.errors);
        return kExitValidation;
      }
      edlab::RunOptions opt;
      opt.out_dir = out_dir;
      if (seed_given) opt.seed = seed_override;
      opt.jobs = jobs;
      edlab::RunReport report;
      try {
        report = edlab::run(*parsed.spec, opt);
      } catch (const std::invalid_argument& e) {
        print_errors({{edlab::kErrSchema, "$", e.what(), 0}});
        return kExitValidation;
      }
      std::cout << report.to_json(true).dump(2) << "\n";
      return report.all_pass() ? 0 : kExitVerification;
    }

    if (cmd_validate->parsed()) {
      std::string text;
      try {
        text = edlab::read_text_file(validate_path);
      } catch (const std::exception& e) {
        print_errors({{edlab::kErrSyntax, "$", e.what(), 0}});
        return kExitValidation;
      }
      const std::vector<edlab::SpecError> errors = edlab::validate_spec(text);
      if (!errors.empty()) {
        print_errors(errors);
        return kExitValidation;
      }
      edlab::ParseResult parsed = edlab::parse_spec(text);
      std::cout << nlohmann::json{{"valid", true}, {"spec_digest", parsed.spec->digest}}
                       .dump(2)
                << "\n";
      return 0;
    }

    if (cmd_verify->parsed()) {
      const edlab::BatchVerifyReport report =
          edlab::run_verify(identity, instances, verify_seed);
      std::cout << report.to_json().dump(2) << "\n";
      return report.pass ? 0 : kExitVerification;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
