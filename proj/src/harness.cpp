#include "fedzero/harness.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

#include "fedzero/trace.hpp"
#include "fedzero/util.hpp"
#include "fedzero/verify.hpp"

namespace fedzero {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw std::runtime_error("config: " + (path.empty() ? "<root>" : path) +
                           ": " + message);
}

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.find(it.key()) == allowed.end()) {
      fail(join_path(path, it.key()), "unknown key");
    }
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number_or(const json& obj, const char* key, const std::string& path,
                 double def) {
  const json* j = find(obj, key);
  if (j == nullptr) return def;
  if (!j->is_number()) fail(join_path(path, key), "expected a number");
  return j->get<double>();
}

std::int64_t integer_or(const json& obj, const char* key,
                        const std::string& path, std::int64_t def) {
  const json* j = find(obj, key);
  if (j == nullptr) return def;
  if (!j->is_number_integer()) fail(join_path(path, key), "expected an integer");
  return j->get<std::int64_t>();
}

std::int64_t require_integer(const json& obj, const char* key,
                             const std::string& path) {
  if (find(obj, key) == nullptr) fail(join_path(path, key), "missing key");
  return integer_or(obj, key, path, 0);
}

std::string string_or(const json& obj, const char* key,
                      const std::string& path, const std::string& def) {
  const json* j = find(obj, key);
  if (j == nullptr) return def;
  if (!j->is_string()) fail(join_path(path, key), "expected a string");
  return j->get<std::string>();
}

bool bool_or(const json& obj, const char* key, const std::string& path,
             bool def) {
  const json* j = find(obj, key);
  if (j == nullptr) return def;
  if (!j->is_boolean()) fail(join_path(path, key), "expected a boolean");
  return j->get<bool>();
}

EnvSpec parse_env(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::string kind = string_or(j, "kind", path, "");
  EnvSpec env;
  if (kind == "analytic-quadratic") {
    check_keys(j, path, {"kind", "horizon", "noise", "dim", "width",
                         "target_value", "theta_star"});
    env.kind = EnvKind::AnalyticQuadratic;
    env.dim = static_cast<int>(require_integer(j, "dim", path));
    env.horizon = static_cast<int>(integer_or(j, "horizon", path, 4));
    env.width = number_or(j, "width", path, 0.0);
    env.target_value = number_or(j, "target_value", path, 1.0);
    if (const json* ts = find(j, "theta_star")) {
      if (!ts->is_array()) fail(join_path(path, "theta_star"), "expected an array");
      env.theta_star = ts->get<std::vector<double>>();
    }
  } else if (kind == "linear-control") {
    check_keys(j, path, {"kind", "horizon", "noise", "state_dim", "action_dim",
                         "dynamics_decay", "action_cost", "cost_scale"});
    env.kind = EnvKind::LinearControl;
    env.state_dim = static_cast<int>(require_integer(j, "state_dim", path));
    env.action_dim = static_cast<int>(require_integer(j, "action_dim", path));
    env.horizon = static_cast<int>(integer_or(j, "horizon", path, 10));
    env.dynamics_decay = number_or(j, "dynamics_decay", path, 0.9);
    env.action_cost = number_or(j, "action_cost", path, 0.1);
    env.cost_scale = number_or(j, "cost_scale", path, 0.0);
  } else if (kind == "gridworld") {
    check_keys(j, path, {"kind", "horizon", "noise", "grid", "start", "goal"});
    env.kind = EnvKind::Gridworld;
    env.grid = static_cast<int>(require_integer(j, "grid", path));
    env.horizon = static_cast<int>(integer_or(j, "horizon", path, 2 * env.grid));
    auto parse_cell = [&](const char* key, int def_row, int def_col) {
      const json* cell = find(j, key);
      if (cell == nullptr) return std::pair<int, int>{def_row, def_col};
      if (!cell->is_array() || cell->size() != 2) {
        fail(join_path(path, key), "expected [row, col]");
      }
      return std::pair<int, int>{(*cell)[0].get<int>(), (*cell)[1].get<int>()};
    };
    std::tie(env.start_row, env.start_col) = parse_cell("start", 1, 1);
    std::tie(env.goal_row, env.goal_col) = parse_cell("goal", env.grid, env.grid);
  } else {
    fail(join_path(path, "kind"),
         "expected analytic-quadratic, linear-control or gridworld");
  }
  env.noise = number_or(j, "noise", path, 0.0);
  validate_env(env);
  return env;
}

PolicySpec default_policy_for(const EnvSpec& env) {
  PolicySpec spec;
  spec.kind = PolicyKind::Linear;
  switch (env.kind) {
    case EnvKind::AnalyticQuadratic:
      spec.input_dim = std::max(1, env.dim - 1);
      spec.output_dim = env.dim / (spec.input_dim + 1);
      break;
    case EnvKind::LinearControl:
      spec.input_dim = env.state_dim;
      spec.output_dim = env.action_dim;
      break;
    case EnvKind::Gridworld:
      spec.input_dim = 2;
      spec.output_dim = 4;
      break;
  }
  return spec;
}

PolicySpec parse_policy(const json* j, const std::string& path,
                        const EnvSpec& env) {
  PolicySpec spec = default_policy_for(env);
  if (j == nullptr) return spec;
  if (!j->is_object()) fail(path, "expected an object");
  check_keys(*j, path, {"kind", "input_dim", "output_dim", "hidden",
                        "action_mode", "action_noise"});
  const std::string kind = string_or(*j, "kind", path, "linear");
  if (kind == "linear") {
    spec.kind = PolicyKind::Linear;
  } else if (kind == "mlp") {
    spec.kind = PolicyKind::Mlp;
  } else {
    fail(join_path(path, "kind"), "expected linear or mlp");
  }
  spec.input_dim = static_cast<int>(integer_or(*j, "input_dim", path, spec.input_dim));
  spec.output_dim =
      static_cast<int>(integer_or(*j, "output_dim", path, spec.output_dim));
  if (const json* hidden = find(*j, "hidden")) {
    if (!hidden->is_array()) fail(join_path(path, "hidden"), "expected an array");
    spec.hidden = hidden->get<std::vector<int>>();
  }
  const std::string mode = string_or(*j, "action_mode", path, "deterministic");
  if (mode == "deterministic") {
    spec.action_mode = ActionMode::Deterministic;
  } else if (mode == "gaussian-exploration") {
    spec.action_mode = ActionMode::GaussianExploration;
  } else {
    fail(join_path(path, "action_mode"),
         "expected deterministic or gaussian-exploration");
  }
  spec.action_noise = number_or(*j, "action_noise", path, 0.0);
  return spec;
}

AlphaSchedule parse_alpha(const json* j, const std::string& path) {
  AlphaSchedule alpha;  // constant 0.01
  if (j == nullptr) return alpha;
  if (!j->is_object()) fail(path, "expected an object");
  check_keys(*j, path, {"mode", "value", "c"});
  const std::string mode = string_or(*j, "mode", path, "constant");
  if (mode == "constant") {
    alpha.mode = AlphaMode::Constant;
    alpha.value = number_or(*j, "value", path, 0.01);
  } else if (mode == "theory") {
    alpha.mode = AlphaMode::Theory;
    alpha.c = number_or(*j, "c", path, 1.0);
  } else {
    fail(join_path(path, "mode"), "expected constant or theory");
  }
  return alpha;
}

PanelSpec parse_panel(const json* j, const std::string& path) {
  PanelSpec panel;  // P=100, N=1, D=1, linear link a=0.01
  if (j == nullptr) return panel;
  if (!j->is_object()) fail(path, "expected an object");
  check_keys(*j, path, {"panelists", "pairs", "batch_size", "link"});
  panel.panelists = static_cast<int>(integer_or(*j, "panelists", path, 100));
  panel.pairs = static_cast<int>(integer_or(*j, "pairs", path, 1));
  panel.batch_size = static_cast<int>(integer_or(*j, "batch_size", path, 1));
  if (const json* link = find(*j, "link")) {
    const std::string link_path = join_path(path, "link");
    if (!link->is_object()) fail(link_path, "expected an object");
    check_keys(*link, link_path, {"kind", "slope", "beta"});
    const std::string kind = string_or(*link, "kind", link_path, "linear");
    if (kind == "linear") {
      panel.link.kind = LinkKind::Linear;
      panel.link.slope = number_or(*link, "slope", link_path, 0.01);
    } else if (kind == "logistic") {
      panel.link.kind = LinkKind::Logistic;
      panel.link.beta = number_or(*link, "beta", link_path, 1.0);
    } else if (kind == "step") {
      panel.link.kind = LinkKind::Step;
    } else {
      fail(join_path(link_path, "kind"), "expected linear, logistic or step");
    }
  }
  return panel;
}

AdamConfig parse_adam(const json* j, const std::string& path) {
  AdamConfig adam;
  if (j == nullptr) return adam;
  if (!j->is_object()) fail(path, "expected an object");
  check_keys(*j, path, {"beta1", "beta2", "epsilon", "clip_norm"});
  adam.beta1 = number_or(*j, "beta1", path, adam.beta1);
  adam.beta2 = number_or(*j, "beta2", path, adam.beta2);
  adam.epsilon = number_or(*j, "epsilon", path, adam.epsilon);
  adam.clip_norm = number_or(*j, "clip_norm", path, adam.clip_norm);
  return adam;
}

RunConfig parse_run(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  check_keys(j, path,
             {"env", "policy", "algorithm", "agents", "partition",
              "reshuffle_each_iteration", "perturbation", "mu", "alpha",
              "panel", "iterations", "update", "adam", "eval_episodes",
              "checkpoint_every", "seed"});
  RunConfig cfg;
  const json* env = find(j, "env");
  if (env == nullptr) fail(join_path(path, "env"), "missing key");
  cfg.env = parse_env(*env, join_path(path, "env"));
  cfg.policy = parse_policy(find(j, "policy"), join_path(path, "policy"), cfg.env);

  const std::string algorithm = string_or(j, "algorithm", path, "par");
  if (algorithm == "par") {
    cfg.algorithm = Algorithm::Par;
  } else if (algorithm == "fedavg") {
    cfg.algorithm = Algorithm::FedAvg;
  } else {
    fail(join_path(path, "algorithm"), "expected par or fedavg");
  }
  cfg.agents = static_cast<int>(integer_or(j, "agents", path, 1));

  const std::string partition = string_or(j, "partition", path, "contiguous");
  if (partition == "contiguous") {
    cfg.partition_mode = PartitionMode::Contiguous;
  } else if (partition == "shuffled") {
    cfg.partition_mode = PartitionMode::Shuffled;
  } else {
    fail(join_path(path, "partition"), "expected contiguous or shuffled");
  }
  cfg.reshuffle_each_iteration =
      bool_or(j, "reshuffle_each_iteration", path, false);

  const std::string perturbation = string_or(j, "perturbation", path, "binary");
  if (perturbation == "binary") {
    cfg.perturbation = PerturbationKind::Binary;
  } else if (perturbation == "gaussian") {
    cfg.perturbation = PerturbationKind::Gaussian;
  } else {
    fail(join_path(path, "perturbation"), "expected binary or gaussian");
  }

  cfg.mu = number_or(j, "mu", path, 0.05);
  cfg.alpha = parse_alpha(find(j, "alpha"), join_path(path, "alpha"));
  cfg.panel = parse_panel(find(j, "panel"), join_path(path, "panel"));
  cfg.iterations = static_cast<int>(require_integer(j, "iterations", path));

  const std::string update = string_or(j, "update", path, "accept-reject-adam");
  if (update == "plain-sgd") {
    cfg.update = UpdateMode::PlainSgd;
  } else if (update == "accept-reject-adam") {
    cfg.update = UpdateMode::AcceptRejectAdam;
  } else {
    fail(join_path(path, "update"), "expected plain-sgd or accept-reject-adam");
  }
  cfg.adam = parse_adam(find(j, "adam"), join_path(path, "adam"));
  cfg.eval_episodes = static_cast<int>(integer_or(j, "eval_episodes", path, 20));
  cfg.checkpoint_every =
      static_cast<int>(integer_or(j, "checkpoint_every", path, 0));
  cfg.seed = static_cast<std::uint64_t>(integer_or(j, "seed", path, 1));
  return cfg;
}

StudyKind parse_study_kind(const std::string& name) {
  if (name == "single-run") return StudyKind::SingleRun;
  if (name == "k-study") return StudyKind::KStudy;
  if (name == "d-study") return StudyKind::DStudy;
  if (name == "perturbation-compare") return StudyKind::PerturbationCompare;
  if (name == "baseline-compare") return StudyKind::BaselineCompare;
  if (name == "verify-all") return StudyKind::VerifyAll;
  fail("study", "unknown study kind '" + name + "'");
}

}  // namespace

std::string study_kind_name(StudyKind kind) {
  switch (kind) {
    case StudyKind::SingleRun: return "single-run";
    case StudyKind::KStudy: return "k-study";
    case StudyKind::DStudy: return "d-study";
    case StudyKind::PerturbationCompare: return "perturbation-compare";
    case StudyKind::BaselineCompare: return "baseline-compare";
    case StudyKind::VerifyAll: return "verify-all";
  }
  return "?";
}

ExperimentManifest manifest_from_json(const json& j) {
  if (!j.is_object()) fail("", "expected a JSON object");
  check_keys(j, "", {"study", "seeds", "sweep", "sample_budget", "out",
                     "histogram", "run"});
  ExperimentManifest manifest;
  manifest.study = parse_study_kind(string_or(j, "study", "", "single-run"));

  const json* run = find(j, "run");
  if (run == nullptr) {
    if (manifest.study != StudyKind::VerifyAll) fail("run", "missing key");
  } else {
    manifest.base = parse_run(*run, "run");
  }

  if (const json* seeds = find(j, "seeds")) {
    if (!seeds->is_array() || seeds->empty()) {
      fail("seeds", "expected a non-empty array");
    }
    manifest.seeds.clear();
    std::set<std::uint64_t> seen;
    for (const auto& s : *seeds) {
      if (!s.is_number_integer()) fail("seeds", "expected integers");
      const auto value = s.get<std::uint64_t>();
      if (!seen.insert(value).second) fail("seeds", "duplicate seeds");
      manifest.seeds.push_back(value);
    }
  } else {
    manifest.seeds = {manifest.base.seed};
  }

  if (const json* sweep = find(j, "sweep")) {
    if (!sweep->is_array() || sweep->empty()) {
      fail("sweep", "expected a non-empty array");
    }
    manifest.sweep = sweep->get<std::vector<int>>();
    for (int v : manifest.sweep) {
      if (v < 1) fail("sweep", "values must be >= 1");
    }
  }
  if ((manifest.study == StudyKind::KStudy ||
       manifest.study == StudyKind::DStudy) &&
      manifest.sweep.empty()) {
    fail("sweep", "required for k-study and d-study");
  }

  manifest.sample_budget = integer_or(j, "sample_budget", "", 0);
  if (manifest.sample_budget < 0) fail("sample_budget", "must be >= 0");
  manifest.out_dir = string_or(j, "out", "", "");

  if (const json* hist = find(j, "histogram")) {
    if (!hist->is_object()) fail("histogram", "expected an object");
    check_keys(*hist, "histogram", {"batches", "batch_sizes"});
    manifest.histogram_batches =
        static_cast<int>(integer_or(*hist, "batches", "histogram", 500));
    if (manifest.histogram_batches < 1) fail("histogram.batches", "must be >= 1");
    if (const json* sizes = find(*hist, "batch_sizes")) {
      if (!sizes->is_array() || sizes->empty()) {
        fail("histogram.batch_sizes", "expected a non-empty array");
      }
      manifest.histogram_batch_sizes = sizes->get<std::vector<int>>();
      for (int v : manifest.histogram_batch_sizes) {
        if (v < 1) fail("histogram.batch_sizes", "values must be >= 1");
      }
    }
  }

  // Surface invalid base configs at load time, with the study sweep applied
  // so k-study K values are range-checked too.
  if (manifest.study != StudyKind::VerifyAll) {
    study_variants(manifest);
  }
  return manifest;
}

ExperimentManifest load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config: " + path + ": " + e.what());
  }
  return manifest_from_json(j);
}

nlohmann::json manifest_to_json(const ExperimentManifest& manifest) {
  json j;
  j["study"] = study_kind_name(manifest.study);
  j["seeds"] = manifest.seeds;
  if (!manifest.sweep.empty()) j["sweep"] = manifest.sweep;
  if (manifest.sample_budget > 0) j["sample_budget"] = manifest.sample_budget;
  if (!manifest.out_dir.empty()) j["out"] = manifest.out_dir;
  j["histogram"] = {{"batches", manifest.histogram_batches},
                    {"batch_sizes", manifest.histogram_batch_sizes}};
  if (manifest.study != StudyKind::VerifyAll) {
    j["run"] = config_to_json(manifest.base);
  }
  return j;
}

std::vector<std::pair<std::string, RunConfig>> study_variants(
    const ExperimentManifest& manifest) {
  std::vector<std::pair<std::string, RunConfig>> variants;
  switch (manifest.study) {
    case StudyKind::SingleRun:
      variants.emplace_back("run", manifest.base);
      break;
    case StudyKind::KStudy:
      for (int k : manifest.sweep) {
        RunConfig cfg = manifest.base;
        cfg.agents = k;
        variants.emplace_back("K" + std::to_string(k), cfg);
      }
      break;
    case StudyKind::DStudy:
      for (int d : manifest.sweep) {
        RunConfig cfg = manifest.base;
        cfg.panel.batch_size = d;
        variants.emplace_back("D" + std::to_string(d), cfg);
      }
      break;
    case StudyKind::PerturbationCompare: {
      RunConfig binary = manifest.base;
      binary.perturbation = PerturbationKind::Binary;
      RunConfig gaussian = manifest.base;
      gaussian.perturbation = PerturbationKind::Gaussian;
      variants.emplace_back("binary", binary);
      variants.emplace_back("gaussian", gaussian);
      break;
    }
    case StudyKind::BaselineCompare: {
      RunConfig par = manifest.base;
      par.algorithm = Algorithm::Par;
      RunConfig fedavg = manifest.base;
      fedavg.algorithm = Algorithm::FedAvg;
      variants.emplace_back("par", par);
      variants.emplace_back("fedavg", fedavg);
      break;
    }
    case StudyKind::VerifyAll:
      break;
  }
  for (auto& [name, cfg] : variants) {
    if (manifest.sample_budget > 0) {
      const std::int64_t per_iter = 2ll * cfg.panel.pairs *
                                    cfg.panel.batch_size * cfg.agents;
      const std::int64_t iters = manifest.sample_budget / per_iter;
      if (iters < 1) {
        fail("sample_budget",
             "budget below one iteration for variant " + name);
      }
      cfg.iterations = static_cast<int>(iters);
    }
    validate_run_config(cfg);
  }
  return variants;
}

std::string emit_plotdata(
    const std::vector<std::pair<std::string, std::vector<RunTrace>>>& variants,
    std::vector<std::string>& warnings) {
  if (variants.empty()) {
    throw std::invalid_argument("emit_plotdata: empty trace set");
  }
  std::string csv = "variant,t,value_mean,value_stderr\n";
  for (const auto& [name, traces] : variants) {
    if (traces.empty()) {
      throw std::invalid_argument("emit_plotdata: variant without traces");
    }
    std::size_t common = traces[0].records.size();
    for (const auto& trace : traces) {
      common = std::min(common, trace.records.size());
    }
    for (const auto& trace : traces) {
      if (trace.records.size() != common) {
        warnings.push_back("variant " + name +
                           ": unequal trace lengths, truncated to t=" +
                           std::to_string(common));
        break;
      }
    }
    for (std::size_t i = 0; i < common; ++i) {
      std::vector<double> values;
      values.reserve(traces.size());
      for (const auto& trace : traces) {
        values.push_back(trace.records[i].value_mean);
      }
      csv += name;
      csv += ',';
      csv += std::to_string(traces[0].records[i].t);
      csv += ',';
      csv += fmt_double(mean_of(values));
      csv += ',';
      csv += fmt_double(standard_error(values));
      csv += '\n';
    }
  }
  return csv;
}

StudyResult run_study(const ExperimentManifest& manifest,
                      const std::string& out_dir, int jobs) {
  StudyResult result;
  const std::string out = out_dir.empty() ? manifest.out_dir : out_dir;
  if (out.empty()) {
    throw std::invalid_argument("run_study: no output directory given");
  }
  std::filesystem::create_directories(out);
  write_text_file(out + "/manifest.json", manifest_to_json(manifest).dump(2) + "\n");

  if (manifest.study == StudyKind::VerifyAll) {
    const auto reports = run_all_checks(manifest.seeds[0]);
    json report_json;
    report_json["seed"] = manifest.seeds[0];
    json checks = json::array();
    bool all_pass = true;
    for (const auto& r : reports) {
      checks.push_back(report_to_json(r));
      all_pass = all_pass && r.pass;
    }
    report_json["checks"] = checks;
    report_json["all_pass"] = all_pass;
    write_text_file(out + "/verify_report.json", report_json.dump(2) + "\n");
    std::cout << report_table(reports);
    result.exit_code = all_pass ? 0 : 1;
    if (!all_pass) result.errors.push_back("one or more checks failed");
    return result;
  }

  const auto variants = study_variants(manifest);
  const std::string study_name = study_kind_name(manifest.study);
  struct Job {
    std::size_t variant;
    std::size_t seed;
  };
  std::vector<Job> job_list;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t s = 0; s < manifest.seeds.size(); ++s) {
      job_list.push_back({v, s});
    }
  }

  std::vector<std::vector<std::optional<RunTrace>>> traces(
      variants.size(),
      std::vector<std::optional<RunTrace>>(manifest.seeds.size()));
  std::mutex error_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= job_list.size()) break;
      const Job job = job_list[idx];
      RunConfig cfg = variants[job.variant].second;
      cfg.seed = manifest.seeds[job.seed];
      const std::string run_dir = out + "/" + study_name + "/" +
                                  variants[job.variant].first + "/" +
                                  std::to_string(cfg.seed);
      try {
        RunTrace trace = run(cfg);
        write_trace_files(trace, run_dir);
        if (trace.aborted) {
          std::lock_guard<std::mutex> lock(error_mutex);
          result.errors.push_back(run_dir + ": " + trace.abort_reason);
        }
        traces[job.variant][job.seed] = std::move(trace);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        result.errors.push_back(run_dir + ": " + e.what());
      }
    }
  };

  const int worker_count = std::max(
      1, std::min<int>(jobs, static_cast<int>(job_list.size())));
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // summary.csv: one row per run plus an aggregate (mean +- std) per variant.
  std::string summary =
      "study,variant,seed,final_value_mean,final_value_stderr,iterations,"
      "traj_total,bits_total\n";
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<double> finals;
    std::int64_t iters = 0, traj = 0, bits = 0;
    int completed = 0;
    for (std::size_t s = 0; s < manifest.seeds.size(); ++s) {
      if (!traces[v][s].has_value()) continue;
      const RunTrace& trace = *traces[v][s];
      const std::int64_t traj_total = trace.ledger.traj_optimizer +
                                      trace.ledger.traj_eval +
                                      trace.ledger.traj_server_panel;
      summary += study_name + "," + variants[v].first + "," +
                 std::to_string(manifest.seeds[s]) + "," +
                 fmt_double(trace.final_value_mean) + "," +
                 fmt_double(trace.final_value_stderr) + "," +
                 std::to_string(trace.records.size()) + "," +
                 std::to_string(traj_total) + "," +
                 std::to_string(trace.ledger.bits_total) + "\n";
      finals.push_back(trace.final_value_mean);
      iters += static_cast<std::int64_t>(trace.records.size());
      traj += traj_total;
      bits += trace.ledger.bits_total;
      ++completed;
    }
    if (completed > 0) {
      summary += study_name + "," + variants[v].first + ",aggregate," +
                 fmt_double(mean_of(finals)) + "," +
                 fmt_double(sample_std(finals)) + "," +
                 std::to_string(iters / completed) + "," +
                 std::to_string(traj / completed) + "," +
                 std::to_string(bits / completed) + "\n";
    }
  }
  write_text_file(out + "/summary.csv", summary);

  std::vector<std::pair<std::string, std::vector<RunTrace>>> curve_input;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    std::vector<RunTrace> complete;
    for (const auto& t : traces[v]) {
      if (t.has_value()) complete.push_back(*t);
    }
    if (!complete.empty()) {
      curve_input.emplace_back(variants[v].first, std::move(complete));
    }
  }
  if (!curve_input.empty()) {
    std::vector<std::string> warnings;
    write_text_file(out + "/curves.csv", emit_plotdata(curve_input, warnings));
    if (!warnings.empty()) {
      std::string text;
      for (const auto& w : warnings) text += w + "\n";
      write_text_file(out + "/warnings.txt", text);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }
  }

  if (!result.errors.empty()) result.exit_code = 1;
  return result;
}

StudyResult run_histogram(const ExperimentManifest& manifest,
                          const std::string& out_dir) {
  StudyResult result;
  const std::string out = out_dir.empty() ? manifest.out_dir : out_dir;
  if (out.empty()) {
    throw std::invalid_argument("run_histogram: no output directory given");
  }
  std::filesystem::create_directories(out);
  write_text_file(out + "/manifest.json", manifest_to_json(manifest).dump(2) + "\n");

  RunConfig cfg = manifest.base;
  cfg.seed = manifest.seeds[0];
  validate_run_config(cfg);

  RngStream init_rng(cfg.seed, StreamRole::Init);
  const PolicyInstance base = init_policy(cfg.policy, init_rng);
  RngStream perturb_rng(cfg.seed, StreamRole::Perturb, 0, 0);
  const int d = param_count(cfg.policy);
  const PerturbationVector v = cfg.perturbation == PerturbationKind::Binary
                                   ? sample_rademacher(d, perturb_rng)
                                   : sample_gaussian(d, perturb_rng);
  ParamVector shifted = base.params;
  axpy(cfg.mu, v.values, shifted);
  const PolicyInstance perturbed{cfg.policy, std::move(shifted)};

  json overlaps = json::array();
  for (int batch_size : manifest.histogram_batch_sizes) {
    RngStream rng(cfg.seed, StreamRole::Check,
                  static_cast<std::uint64_t>(batch_size));
    const auto hist = separation_histogram(cfg.env, base, perturbed, batch_size,
                                           manifest.histogram_batches, rng);
    std::string csv = "policy,batch_index,batch_mean\n";
    for (std::size_t i = 0; i < hist.base_means.size(); ++i) {
      csv += "base," + std::to_string(i + 1) + "," +
             fmt_double(hist.base_means[i]) + "\n";
    }
    for (std::size_t i = 0; i < hist.perturbed_means.size(); ++i) {
      csv += "perturbed," + std::to_string(i + 1) + "," +
             fmt_double(hist.perturbed_means[i]) + "\n";
    }
    write_text_file(out + "/histogram_D" + std::to_string(batch_size) + ".csv",
                    csv);
    overlaps.push_back({{"batch_size", batch_size}, {"overlap", hist.overlap}});
  }
  json summary;
  summary["seed"] = cfg.seed;
  summary["mu"] = cfg.mu;
  summary["batches"] = manifest.histogram_batches;
  summary["entries"] = overlaps;
  write_text_file(out + "/overlap.json", summary.dump(2) + "\n");
  return result;
}

}  // namespace fedzero
