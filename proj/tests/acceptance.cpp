// Acceptance suite: every criterion runs at its stated tolerance and prints
// one pass/fail line. Exit status is non-zero when any criterion fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedzero/harness.hpp"
#include "fedzero/trace.hpp"
#include "fedzero/util.hpp"
#include "fedzero/verify.hpp"

using namespace fedzero;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 1;
int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("criterion %2d %-28s %s  (%s)\n", criterion, name.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string stat_line(const CheckReport& r) {
  return "measured " + fmt_double(r.measured) + " vs bound " +
         fmt_double(r.bound) + ", " + std::to_string(r.samples) + " samples";
}

void from_check(int criterion, const std::string& name, const CheckReport& r) {
  report(criterion, name, r.pass, stat_line(r));
}

PolicySpec flat_spec(int dim) {
  PolicySpec spec;
  spec.kind = PolicyKind::Linear;
  spec.input_dim = dim - 1;
  spec.output_dim = 1;
  return spec;
}

// Criteria 3-5 share a small suite of runs over both algorithms, both update
// modes and all three environments.
void ledger_criteria() {
  bool aggregation_ok = true;
  bool bits_ok = true;
  bool samples_ok = true;
  std::string aggregation_note = "exact on every iteration of every run";
  std::string bits_note;
  std::string samples_note;
  long iterations_checked = 0;

  std::vector<RunConfig> par_runs;
  {
    RunConfig cfg;  // analytic, plain sgd
    cfg.env = make_analytic_env(20, 4, 20.0, 0.1);
    cfg.policy = flat_spec(20);
    cfg.agents = 5;
    cfg.mu = 0.05;
    cfg.alpha = AlphaSchedule{AlphaMode::Constant, 0.02, 1.0};
    cfg.panel.panelists = 9;
    cfg.panel.link = LinkFunction{LinkKind::Linear, 0.5, 0.0};
    cfg.panel.pairs = 3;
    cfg.panel.batch_size = 2;
    cfg.iterations = 8;
    cfg.update = UpdateMode::PlainSgd;
    cfg.seed = kSeed;
    par_runs.push_back(cfg);

    RunConfig ara = cfg;  // accept-reject-adam variant
    ara.update = UpdateMode::AcceptRejectAdam;
    ara.alpha = AlphaSchedule{AlphaMode::Constant, 0.01, 1.0};
    par_runs.push_back(ara);

    RunConfig control = cfg;  // linear-control environment
    control.env = make_linear_control_env(4, 2, 10, 0.05);
    control.policy = PolicySpec{PolicyKind::Linear, 4, 2, {}, ActionMode::Deterministic, 0.0};
    control.agents = 3;
    par_runs.push_back(control);

    RunConfig grid = cfg;  // gridworld environment, reshuffled partitions
    grid.env = make_gridworld_env(4, 6, 2, 1, 2, 4, 0.1);
    grid.policy = PolicySpec{PolicyKind::Linear, 2, 4, {}, ActionMode::GaussianExploration, 0.3};
    grid.agents = 4;
    grid.partition_mode = PartitionMode::Shuffled;
    grid.reshuffle_each_iteration = true;
    par_runs.push_back(grid);
  }

  for (const RunConfig& cfg : par_runs) {
    const RunTrace trace = run(cfg);  // throws if the identity ever breaks
    const int d = param_count(cfg.policy);
    const std::int64_t per_iter =
        2ll * cfg.panel.pairs * cfg.panel.batch_size * cfg.agents;
    for (const auto& rec : trace.records) {
      ++iterations_checked;
      if (rec.g_sqnorm != rec.active_mass) {
        aggregation_ok = false;
        aggregation_note = "|g|^2 != active block mass at t=" + std::to_string(rec.t);
      }
      bool all_nonzero = true;
      for (int v : rec.feedback) all_nonzero = all_nonzero && v != 0;
      if (all_nonzero && rec.g_sqnorm != static_cast<double>(d)) {
        aggregation_ok = false;
        aggregation_note = "full participation but |g|^2 != d";
      }
      if (rec.bits != d + cfg.agents) {
        bits_ok = false;
        bits_note = "par bits != d + K";
      }
      if (rec.traj_optimizer != per_iter * rec.t) {
        samples_ok = false;
        samples_note = "cumulative optimizer trajectories != 2NDKt";
      }
    }
    if (trace.ledger.traj_optimizer != per_iter * cfg.iterations) {
      samples_ok = false;
      samples_note = "ledger M != 2NDKT";
    }
  }

  // FedAvg ledger and the factor-of-K ratio at K = 5.
  RunConfig fed = par_runs[0];
  fed.algorithm = Algorithm::FedAvg;
  const RunTrace fed_trace = run(fed);
  const int d = param_count(fed.policy);
  for (const auto& rec : fed_trace.records) {
    if (rec.bits != 5ll * d + 5) {
      bits_ok = false;
      bits_note = "fedavg bits != Kd + K";
    }
  }
  const std::int64_t fed_pert = fed_trace.records[0].bits - 5;
  const RunTrace par_trace = run(par_runs[0]);
  const std::int64_t par_pert = par_trace.records[0].bits - 5;
  if (fed_pert != 5 * par_pert) {
    bits_ok = false;
    bits_note = "perturbation traffic ratio != K";
  }
  if (fed_trace.ledger.traj_optimizer != par_trace.ledger.traj_optimizer) {
    samples_ok = false;
    samples_note = "matched budgets diverged";
  }
  if (bits_ok) {
    bits_note = "par d+K, fedavg Kd+K, ratio K at K=5, zero tolerance";
  }
  if (samples_ok) {
    samples_note = "2NDKT exact over " + std::to_string(iterations_checked) +
                   " iterations";
  }

  report(3, "aggregation-identity", aggregation_ok,
         aggregation_note + ", " + std::to_string(iterations_checked) +
             " iterations");
  report(4, "communication-ledger", bits_ok, bits_note);
  report(5, "sample-ledger", samples_ok, samples_note);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<missing:" + path.string() + ">";
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void determinism_criterion() {
  nlohmann::json j;
  j["study"] = "baseline-compare";
  j["seeds"] = {11, 12, 13};
  j["run"] = {
      {"env", {{"kind", "analytic-quadratic"}, {"dim", 12}, {"noise", 0.1}}},
      {"agents", 3},
      {"iterations", 6},
      {"update", "plain-sgd"},
      {"alpha", {{"mode", "constant"}, {"value", 0.02}}},
      {"panel", {{"panelists", 5}, {"link", {{"kind", "linear"}, {"slope", 0.5}}}}},
  };
  const ExperimentManifest manifest = manifest_from_json(j);
  const fs::path base = fs::temp_directory_path() / "fedzero_acceptance";
  const fs::path out_a = base / "a";
  const fs::path out_b = base / "b";
  fs::remove_all(base);

  const StudyResult ra = run_study(manifest, out_a.string(), 1);
  const StudyResult rb = run_study(manifest, out_b.string(), 4);

  bool pass = ra.exit_code == 0 && rb.exit_code == 0;
  int files = 0;
  for (const char* top : {"summary.csv", "curves.csv", "manifest.json"}) {
    ++files;
    pass = pass && slurp(out_a / top) == slurp(out_b / top);
  }
  for (const char* variant : {"par", "fedavg"}) {
    for (const char* seed : {"11", "12", "13"}) {
      const fs::path rel = fs::path("baseline-compare") / variant / seed;
      for (const char* file : {"trace.csv", "run.json"}) {
        ++files;
        pass = pass && slurp(out_a / rel / file) == slurp(out_b / rel / file);
      }
    }
  }
  fs::remove_all(base);
  report(13, "determinism", pass,
         "two study executions (1 vs 4 workers), " + std::to_string(files) +
             " files byte-identical");
}

}  // namespace

int main() {
  std::printf("acceptance suite, seed %llu\n",
              static_cast<unsigned long long>(kSeed));

  from_check(1, "khintchine-bounds", check_khintchine(kSeed));
  from_check(2, "norm-properties", check_norm_axioms(kSeed));
  ledger_criteria();
  from_check(6, "sign-alignment", check_sign_alignment(kSeed));
  from_check(7, "panel-sharpening-decay", check_panel_sharpening(kSeed));
  from_check(8, "convergence-trend", check_convergence_trend(kSeed));
  from_check(9, "k-independence", check_k_independence(kSeed));
  from_check(10, "par-vs-fedavg", check_par_vs_fedavg(kSeed));
  from_check(11, "binary-vs-gaussian", check_binary_vs_gaussian(kSeed));
  from_check(12, "d-tradeoff", check_d_tradeoff(kSeed));
  determinism_criterion();

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all 13 criteria passed\n");
  return 0;
}
