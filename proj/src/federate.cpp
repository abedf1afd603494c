#include "fedzero/federate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedzero {

namespace {

constexpr int kHalvingRejections = 3;

std::int64_t perturbation_bits(PerturbationKind kind, int d) {
  // Binary entries cost one bit each; the Gaussian baseline ships doubles.
  return kind == PerturbationKind::Binary ? d : 64ll * d;
}

std::int64_t feedback_bits_per_agent(int pairs) {
  // Odd N keeps the vote in {-1,+1}; even N admits 0 and needs a second bit.
  return pairs % 2 == 1 ? 1 : 2;
}

double schedule_alpha(const RunState& state, const RunConfig& config, int t) {
  if (config.update == UpdateMode::AcceptRejectAdam) return state.alpha_current;
  if (config.alpha.mode == AlphaMode::Theory) {
    return lr_theory(t, config.env.horizon, static_cast<int>(state.theta.size()),
                     config.alpha.c);
  }
  return config.alpha.value;
}

// Shared tail of both iteration flavors: apply the update rule to direction g
// and fill the bookkeeping fields.
void apply_update(RunState& state, const RunConfig& config, int t,
                  const ParamVector& g, IterationRecord& rec) {
  rec.alpha = schedule_alpha(state, config, t);
  rec.mu = state.mu_current;
  switch (config.update) {
    case UpdateMode::PlainSgd:
      axpy(rec.alpha, g, state.theta);
      rec.accepted = -1;
      break;
    case UpdateMode::AcceptRejectAdam: {
      const ParamVector step = adam_step(state.adam, g, rec.alpha, config.adam);
      ParamVector candidate = state.theta;
      axpy(1.0, step, candidate);
      RngStream server_rng(config.seed, StreamRole::ServerPanel, t);
      const auto server = preference_oracle(
          config.panel, PolicyInstance{config.policy, state.theta},
          PolicyInstance{config.policy, candidate}, config.env, server_rng);
      state.ledger.traj_server_panel += server.trajectories;
      if (server.vote == 1) {
        state.theta = std::move(candidate);
        state.reject_streak = 0;
        rec.accepted = 1;
      } else {
        rec.accepted = 0;
        if (++state.reject_streak == kHalvingRejections) {
          state.alpha_current *= 0.5;
          state.mu_current *= 0.5;
          state.reject_streak = 0;
        }
      }
      break;
    }
  }
}

}  // namespace

double lr_theory(int t, int horizon, int dim, double c) {
  if (t < 1) throw std::invalid_argument("lr_theory: t must be >= 1");
  if (horizon < 1 || dim < 1) {
    throw std::invalid_argument("lr_theory: horizon and dim must be >= 1");
  }
  return c * std::sqrt(static_cast<double>(horizon) /
                       (static_cast<double>(dim) * static_cast<double>(t)));
}

ParamVector adam_step(AdamState& state, const ParamVector& grad, double alpha,
                      const AdamConfig& cfg) {
  if (state.m.empty()) {
    state.m.assign(grad.size(), 0.0);
    state.v.assign(grad.size(), 0.0);
  }
  if (state.m.size() != grad.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  ++state.steps;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps));
  ParamVector step(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    step[i] = alpha * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
  const double norm = l2_norm(step);
  if (norm > cfg.clip_norm && norm > 0.0) {
    const double scale = cfg.clip_norm / norm;
    for (double& s : step) s *= scale;
  }
  return step;
}

std::vector<std::string> validate_run_config(const RunConfig& config) {
  std::vector<std::string> warnings;
  validate_env(config.env);
  check_policy_env(config.env, config.policy);
  validate_panel(config.panel);
  const int d = param_count(config.policy);
  if (config.agents < 1 || config.agents > d) {
    throw std::invalid_argument(
        "config: K (agents) must satisfy 1 <= K <= parameter dimension");
  }
  if (config.mu <= 0.0) throw std::invalid_argument("config: mu must be > 0");
  if (config.iterations < 0) {
    throw std::invalid_argument("config: iterations must be >= 0");
  }
  if (config.eval_episodes < 1) {
    throw std::invalid_argument("config: eval_episodes must be >= 1");
  }
  if (config.checkpoint_every < 0) {
    throw std::invalid_argument("config: checkpoint_every must be >= 0");
  }
  if (config.alpha.mode == AlphaMode::Constant && config.alpha.value <= 0.0) {
    throw std::invalid_argument("config: alpha value must be > 0");
  }
  if (config.alpha.mode == AlphaMode::Theory && config.alpha.c <= 0.0) {
    throw std::invalid_argument("config: alpha c must be > 0");
  }
  if (config.update == UpdateMode::AcceptRejectAdam &&
      config.alpha.mode != AlphaMode::Constant) {
    throw std::invalid_argument(
        "config: accept-reject-adam requires the constant alpha schedule");
  }
  if (config.reshuffle_each_iteration &&
      config.partition_mode != PartitionMode::Shuffled) {
    throw std::invalid_argument(
        "config: reshuffle_each_iteration requires partition mode 'shuffled'");
  }
  if (config.adam.beta1 < 0.0 || config.adam.beta1 >= 1.0 ||
      config.adam.beta2 < 0.0 || config.adam.beta2 >= 1.0) {
    throw std::invalid_argument("config: adam betas must lie in [0, 1)");
  }
  if (config.adam.epsilon <= 0.0 || config.adam.clip_norm <= 0.0) {
    throw std::invalid_argument("config: adam epsilon and clip_norm must be > 0");
  }
  if (config.panel.pairs % 2 == 0) {
    warnings.push_back(
        "panel pairs (N) is even: zero votes are possible and feedback costs "
        "2 bits per agent");
  }
  return warnings;
}

RunState init_run_state(const RunConfig& config) {
  RunState state;
  RngStream init_rng(config.seed, StreamRole::Init);
  state.theta = init_policy(config.policy, init_rng).params;
  const int d = static_cast<int>(state.theta.size());
  if (config.partition_mode == PartitionMode::Shuffled) {
    RngStream part_rng(config.seed, StreamRole::Partition, 0);
    state.partition = make_partition(d, config.agents, PartitionMode::Shuffled,
                                     &part_rng);
  } else {
    state.partition = make_partition(d, config.agents, PartitionMode::Contiguous);
  }
  state.alpha_current = config.alpha.value;
  state.mu_current = config.mu;

  // Storage ledger, by construction: a Par agent holds the d-dim policy plus
  // its own perturbed block; a FedAvg agent holds the policy plus a full
  // perturbation.
  std::int64_t worst_block = 0;
  for (const auto& b : state.partition.blocks) {
    worst_block = std::max<std::int64_t>(worst_block,
                                         static_cast<std::int64_t>(b.size()));
  }
  state.ledger.agent_memory_scalars =
      config.algorithm == Algorithm::Par ? d + worst_block : 2ll * d;
  state.ledger.server_memory_scalars = 2ll * d;
  return state;
}

IterationRecord par_iteration(RunState& state, const RunConfig& config, int t) {
  const int d = static_cast<int>(state.theta.size());
  const int K = config.agents;
  IterationRecord rec;
  rec.t = t;

  RngStream perturb_rng(config.seed, StreamRole::Perturb, t, 0);
  const PerturbationVector v =
      config.perturbation == PerturbationKind::Binary
          ? sample_rademacher(d, perturb_rng)
          : sample_gaussian(d, perturb_rng);

  ParamVector g(d, 0.0);
  std::vector<std::uint8_t> active(d, 0);
  rec.feedback.resize(K);
  const PolicyInstance base{config.policy, state.theta};
  for (int k = 0; k < K; ++k) {
    const PerturbationVector vk = mask_perturbation(v, state.partition, k);
    ParamVector theta_p = state.theta;
    axpy(state.mu_current, vk.values, theta_p);
    RngStream oracle_rng(config.seed, StreamRole::Oracle, t, k);
    const auto result =
        preference_oracle(config.panel, base,
                          PolicyInstance{config.policy, theta_p}, config.env,
                          oracle_rng);
    rec.feedback[k] = result.vote;
    state.ledger.traj_optimizer += result.trajectories;
    if (result.vote != 0) {
      axpy(static_cast<double>(result.vote), vk.values, g);
      for (int i : state.partition.blocks[k]) active[i] = 1;
    }
  }

  // |g|^2 must equal the perturbation mass of the voting blocks; both sums
  // run over coordinates in ascending order so the comparison is exact.
  double g_sq = 0.0;
  double mass = 0.0;
  for (int i = 0; i < d; ++i) {
    g_sq += g[i] * g[i];
    if (active[i]) mass += v.values[i] * v.values[i];
  }
  if (g_sq != mass) {
    throw std::logic_error("par_iteration: aggregation identity violated");
  }
  rec.g_sqnorm = g_sq;
  rec.active_mass = mass;
  rec.bits = perturbation_bits(config.perturbation, d) +
             K * feedback_bits_per_agent(config.panel.pairs);
  state.ledger.bits_total += rec.bits;

  apply_update(state, config, t, g, rec);
  rec.traj_optimizer = state.ledger.traj_optimizer;
  rec.traj_eval = state.ledger.traj_eval;
  return rec;
}

IterationRecord fedavg_iteration(RunState& state, const RunConfig& config,
                                 int t) {
  const int d = static_cast<int>(state.theta.size());
  const int K = config.agents;
  IterationRecord rec;
  rec.t = t;
  rec.feedback.resize(K);

  ParamVector g(d, 0.0);
  const PolicyInstance base{config.policy, state.theta};
  for (int k = 0; k < K; ++k) {
    RngStream perturb_rng(config.seed, StreamRole::Perturb, t, k);
    const PerturbationVector w =
        config.perturbation == PerturbationKind::Binary
            ? sample_rademacher(d, perturb_rng)
            : sample_gaussian(d, perturb_rng);
    ParamVector theta_p = state.theta;
    axpy(state.mu_current, w.values, theta_p);
    RngStream oracle_rng(config.seed, StreamRole::Oracle, t, k);
    const auto result =
        preference_oracle(config.panel, base,
                          PolicyInstance{config.policy, theta_p}, config.env,
                          oracle_rng);
    rec.feedback[k] = result.vote;
    state.ledger.traj_optimizer += result.trajectories;
    if (result.vote != 0) {
      axpy(static_cast<double>(result.vote), w.values, g);
    }
  }
  for (double& x : g) x /= static_cast<double>(K);

  double g_sq = 0.0;
  for (double x : g) g_sq += x * x;
  rec.g_sqnorm = g_sq;
  rec.active_mass = std::numeric_limits<double>::quiet_NaN();
  rec.bits = K * perturbation_bits(config.perturbation, d) +
             K * feedback_bits_per_agent(config.panel.pairs);
  state.ledger.bits_total += rec.bits;

  apply_update(state, config, t, g, rec);
  rec.traj_optimizer = state.ledger.traj_optimizer;
  rec.traj_eval = state.ledger.traj_eval;
  return rec;
}

RunTrace run(const RunConfig& config) {
  RunTrace trace;
  trace.config = config;
  trace.generator_id = RngStream::kGeneratorId;
  trace.version = kVersion;
  trace.warnings = validate_run_config(config);

  RunState state = init_run_state(config);
  const bool analytic = config.env.kind == EnvKind::AnalyticQuadratic;
  trace.records.reserve(config.iterations);

  for (int t = 1; t <= config.iterations; ++t) {
    if (config.reshuffle_each_iteration) {
      RngStream part_rng(config.seed, StreamRole::Partition, t);
      state.partition =
          make_partition(static_cast<int>(state.theta.size()), config.agents,
                         PartitionMode::Shuffled, &part_rng);
    }

    // theta_t is evaluated before the update so the row describes the policy
    // the iteration started from.
    RngStream eval_rng(config.seed, StreamRole::Eval, t);
    const auto value = evaluate_policy(config.env,
                                       PolicyInstance{config.policy, state.theta},
                                       config.eval_episodes, eval_rng);
    state.ledger.traj_eval += value.episodes;

    double grad_l2 = std::numeric_limits<double>::quiet_NaN();
    double grad_blocksum = std::numeric_limits<double>::quiet_NaN();
    if (analytic) {
      const ParamVector grad = true_gradient(config.env, state.theta);
      grad_l2 = l2_norm(grad);
      grad_blocksum = block_sum_norm(grad, state.partition);
    }

    IterationRecord rec = config.algorithm == Algorithm::Par
                              ? par_iteration(state, config, t)
                              : fedavg_iteration(state, config, t);
    rec.value_mean = value.mean;
    rec.value_stderr = value.stderr_;
    rec.grad_l2 = grad_l2;
    rec.grad_blocksum = grad_blocksum;
    trace.records.push_back(std::move(rec));

    if (!all_finite(state.theta)) {
      trace.aborted = true;
      trace.abort_reason = "non-finite parameters after iteration " +
                           std::to_string(t);
      break;
    }
    if (config.checkpoint_every > 0 && t % config.checkpoint_every == 0) {
      trace.checkpoints.emplace_back(t, state.theta);
    }
  }

  RngStream final_rng(config.seed, StreamRole::Eval,
                      static_cast<std::uint64_t>(config.iterations) + 1);
  const auto final_value = evaluate_policy(
      config.env, PolicyInstance{config.policy, state.theta},
      config.eval_episodes, final_rng);
  state.ledger.traj_eval += final_value.episodes;
  trace.final_value_mean = final_value.mean;
  trace.final_value_stderr = final_value.stderr_;
  trace.final_params = state.theta;
  trace.ledger = state.ledger;
  return trace;
}

int sample_theta_index(const std::vector<IterationRecord>& records,
                       RngStream& rng) {
  if (records.empty()) {
    throw std::invalid_argument("sample_theta_index: empty trace");
  }
  double total = 0.0;
  for (const auto& rec : records) total += rec.alpha;
  if (total <= 0.0) {
    throw std::invalid_argument("sample_theta_index: nonpositive alpha mass");
  }
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (const auto& rec : records) {
    acc += rec.alpha;
    if (u < acc) return rec.t;
  }
  return records.back().t;
}

}  // namespace fedzero
