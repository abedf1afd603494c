#include "fedzero/trace.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "fedzero/util.hpp"

namespace fedzero {

namespace {

std::string env_kind_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::AnalyticQuadratic: return "analytic-quadratic";
    case EnvKind::LinearControl: return "linear-control";
    case EnvKind::Gridworld: return "gridworld";
  }
  return "?";
}

std::string link_kind_name(LinkKind kind) {
  switch (kind) {
    case LinkKind::Linear: return "linear";
    case LinkKind::Logistic: return "logistic";
    case LinkKind::Step: return "step";
  }
  return "?";
}

nlohmann::json env_to_json(const EnvSpec& env) {
  nlohmann::json j;
  j["kind"] = env_kind_name(env.kind);
  j["horizon"] = env.horizon;
  j["noise"] = env.noise;
  switch (env.kind) {
    case EnvKind::AnalyticQuadratic:
      j["dim"] = env.dim;
      j["width"] = env_width(env);
      if (env.theta_star.empty()) {
        j["target_value"] = env.target_value;
      } else {
        j["theta_star"] = env.theta_star;
      }
      break;
    case EnvKind::LinearControl:
      j["state_dim"] = env.state_dim;
      j["action_dim"] = env.action_dim;
      j["dynamics_decay"] = env.dynamics_decay;
      j["action_cost"] = env.action_cost;
      j["cost_scale"] = env_cost_scale(env);
      break;
    case EnvKind::Gridworld:
      j["grid"] = env.grid;
      j["start"] = {env.start_row, env.start_col};
      j["goal"] = {env.goal_row, env.goal_col};
      break;
  }
  return j;
}

nlohmann::json policy_to_json(const PolicySpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind == PolicyKind::Linear ? "linear" : "mlp";
  j["input_dim"] = spec.input_dim;
  j["output_dim"] = spec.output_dim;
  if (spec.kind == PolicyKind::Mlp) j["hidden"] = spec.hidden;
  j["action_mode"] = spec.action_mode == ActionMode::Deterministic
                         ? "deterministic"
                         : "gaussian-exploration";
  if (spec.action_mode == ActionMode::GaussianExploration) {
    j["action_noise"] = spec.action_noise;
  }
  return j;
}

nlohmann::json panel_to_json(const PanelSpec& panel) {
  nlohmann::json link;
  link["kind"] = link_kind_name(panel.link.kind);
  if (panel.link.kind == LinkKind::Linear) link["slope"] = panel.link.slope;
  if (panel.link.kind == LinkKind::Logistic) link["beta"] = panel.link.beta;
  return nlohmann::json{{"panelists", panel.panelists},
                        {"pairs", panel.pairs},
                        {"batch_size", panel.batch_size},
                        {"link", link}};
}

// Empty cell when the value is undefined for this run kind.
std::string csv_cell(double x) {
  return std::isnan(x) ? std::string{} : fmt_double(x);
}

}  // namespace

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["env"] = env_to_json(config.env);
  j["policy"] = policy_to_json(config.policy);
  j["algorithm"] = config.algorithm == Algorithm::Par ? "par" : "fedavg";
  j["agents"] = config.agents;
  j["partition"] = config.partition_mode == PartitionMode::Contiguous
                       ? "contiguous"
                       : "shuffled";
  j["reshuffle_each_iteration"] = config.reshuffle_each_iteration;
  j["perturbation"] =
      config.perturbation == PerturbationKind::Binary ? "binary" : "gaussian";
  j["mu"] = config.mu;
  if (config.alpha.mode == AlphaMode::Constant) {
    j["alpha"] = {{"mode", "constant"}, {"value", config.alpha.value}};
  } else {
    j["alpha"] = {{"mode", "theory"}, {"c", config.alpha.c}};
  }
  j["panel"] = panel_to_json(config.panel);
  j["iterations"] = config.iterations;
  j["update"] = config.update == UpdateMode::PlainSgd ? "plain-sgd"
                                                      : "accept-reject-adam";
  if (config.update == UpdateMode::AcceptRejectAdam) {
    j["adam"] = {{"beta1", config.adam.beta1},
                 {"beta2", config.adam.beta2},
                 {"epsilon", config.adam.epsilon},
                 {"clip_norm", config.adam.clip_norm}};
  }
  j["eval_episodes"] = config.eval_episodes;
  j["checkpoint_every"] = config.checkpoint_every;
  j["seed"] = config.seed;
  return j;
}

std::string trace_csv_string(const RunTrace& trace) {
  std::string out =
      "t,value_mean,value_stderr,accepted,alpha,mu,bits,traj_optimizer,"
      "traj_eval,grad_l2,grad_blocksum\n";
  for (const auto& rec : trace.records) {
    out += std::to_string(rec.t);
    out += ',';
    out += fmt_double(rec.value_mean);
    out += ',';
    out += fmt_double(rec.value_stderr);
    out += ',';
    if (rec.accepted >= 0) out += std::to_string(rec.accepted);
    out += ',';
    out += fmt_double(rec.alpha);
    out += ',';
    out += fmt_double(rec.mu);
    out += ',';
    out += std::to_string(rec.bits);
    out += ',';
    out += std::to_string(rec.traj_optimizer);
    out += ',';
    out += std::to_string(rec.traj_eval);
    out += ',';
    out += csv_cell(rec.grad_l2);
    out += ',';
    out += csv_cell(rec.grad_blocksum);
    out += '\n';
  }
  return out;
}

nlohmann::json run_json(const RunTrace& trace) {
  nlohmann::json j;
  j["version"] = trace.version;
  j["generator"] = trace.generator_id;
  j["config"] = config_to_json(trace.config);
  j["iterations_completed"] = trace.records.size();
  j["aborted"] = trace.aborted;
  if (trace.aborted) j["abort_reason"] = trace.abort_reason;
  if (!trace.warnings.empty()) j["warnings"] = trace.warnings;
  j["ledger"] = {{"bits_total", trace.ledger.bits_total},
                 {"traj_optimizer", trace.ledger.traj_optimizer},
                 {"traj_eval", trace.ledger.traj_eval},
                 {"traj_server_panel", trace.ledger.traj_server_panel},
                 {"server_memory_scalars", trace.ledger.server_memory_scalars},
                 {"agent_memory_scalars", trace.ledger.agent_memory_scalars}};
  j["final"] = {{"value_mean", trace.final_value_mean},
                {"value_stderr", trace.final_value_stderr},
                {"params_b64", encode_params_b64(trace.final_params)}};
  nlohmann::json checkpoints = nlohmann::json::array();
  for (const auto& [t, params] : trace.checkpoints) {
    checkpoints.push_back({{"t", t}, {"params_b64", encode_params_b64(params)}});
  }
  j["checkpoints"] = checkpoints;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_trace_files(const RunTrace& trace, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/trace.csv", trace_csv_string(trace));
  write_text_file(dir + "/run.json", run_json(trace).dump(2) + "\n");
}

}  // namespace fedzero
