// Command-line front end: single runs, studies, verification suites and the
// batch-mean histogram tool.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedzero/harness.hpp"
#include "fedzero/trace.hpp"
#include "fedzero/verify.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

fedzero::ExperimentManifest load_manifest(const CommonOptions& opts) {
  fedzero::ExperimentManifest manifest = fedzero::load_config(opts.config_path);
  if (opts.seed_set) {
    manifest.seeds = {opts.seed};
  }
  return manifest;
}

int cmd_run(const CommonOptions& opts) {
  fedzero::ExperimentManifest manifest = load_manifest(opts);
  fedzero::RunConfig cfg = manifest.base;
  cfg.seed = manifest.seeds[0];
  const fedzero::RunTrace trace = fedzero::run(cfg);
  const std::string out = opts.out_dir.empty() ? manifest.out_dir : opts.out_dir;
  if (out.empty()) {
    std::cerr << "run: no output directory (use --out or \"out\" in the config)\n";
    return 2;
  }
  fedzero::write_trace_files(trace, out);
  std::cout << "final value " << trace.final_value_mean << " +- "
            << trace.final_value_stderr << " after "
            << trace.records.size() << " iterations ("
            << trace.ledger.traj_optimizer << " optimizer trajectories, "
            << trace.ledger.bits_total << " bits)\n";
  if (trace.aborted) {
    std::cerr << "run aborted: " << trace.abort_reason << "\n";
    return 1;
  }
  return 0;
}

int cmd_study(const CommonOptions& opts, int jobs) {
  const fedzero::ExperimentManifest manifest = load_manifest(opts);
  const auto result = fedzero::run_study(manifest, opts.out_dir, jobs);
  for (const auto& err : result.errors) std::cerr << "error: " << err << "\n";
  return result.exit_code;
}

int cmd_verify(const std::string& out_dir, std::uint64_t seed,
               const std::string& only_check) {
  std::vector<fedzero::CheckReport> reports;
  if (only_check.empty()) {
    reports = fedzero::run_all_checks(seed);
  } else {
    try {
      reports.push_back(fedzero::run_named_check(only_check, seed));
    } catch (const std::invalid_argument& e) {
      std::cerr << "verify: " << e.what() << "\n";
      return 2;
    }
  }
  bool all_pass = true;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : reports) {
    checks.push_back(fedzero::report_to_json(r));
    all_pass = all_pass && r.pass;
  }
  nlohmann::json report;
  report["seed"] = seed;
  report["checks"] = checks;
  report["all_pass"] = all_pass;
  fedzero::write_text_file(out_dir + "/verify_report.json",
                           report.dump(2) + "\n");
  std::cout << fedzero::report_table(reports);
  return all_pass ? 0 : 1;
}

int cmd_histogram(const CommonOptions& opts) {
  const fedzero::ExperimentManifest manifest = load_manifest(opts);
  const auto result = fedzero::run_histogram(manifest, opts.out_dir);
  for (const auto& err : result.errors) std::cerr << "error: " << err << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated sign-based zeroth-order policy optimization"};
  app.require_subcommand(1);

  CommonOptions run_opts, study_opts, hist_opts;
  int jobs = 1;
  std::string verify_out = ".";
  std::uint64_t verify_seed = 1;
  std::string verify_check;

  auto add_common = [](CLI::App* cmd, CommonOptions& opts, bool need_config) {
    auto* config = cmd->add_option("--config", opts.config_path,
                                   "experiment config (JSON)");
    if (need_config) config->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the seed list with one seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
  };

  auto* run_cmd = app.add_subcommand("run", "execute a single run");
  add_common(run_cmd, run_opts, true);

  auto* study_cmd = app.add_subcommand("study", "execute a study manifest");
  add_common(study_cmd, study_opts, true);
  study_cmd->add_option("--jobs", jobs, "worker count (result-invariant)");

  auto* verify_cmd = app.add_subcommand("verify", "run the verification suite");
  verify_cmd->add_option("--out", verify_out, "report directory");
  verify_cmd->add_option("--seed", verify_seed, "verification seed");
  verify_cmd->add_option("--check", verify_check, "run one named check only");

  auto* hist_cmd =
      app.add_subcommand("histogram", "batch-mean separation histograms");
  add_common(hist_cmd, hist_opts, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_opts);
    if (study_cmd->parsed()) return cmd_study(study_opts, jobs);
    if (verify_cmd->parsed()) return cmd_verify(verify_out, verify_seed, verify_check);
    if (hist_cmd->parsed()) return cmd_histogram(hist_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
