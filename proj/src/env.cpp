#include "fedzero/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedzero {

namespace {

double clip_reward(double r, int horizon) {
  return std::clamp(r, 0.0, static_cast<double>(horizon));
}

ParamVector resolved_theta_star(const EnvSpec& env) {
  if (!env.theta_star.empty()) return env.theta_star;
  return ParamVector(env.dim, env.target_value);
}

int argmax_index(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

Trajectory rollout_analytic(const EnvSpec& env, const PolicyInstance& policy,
                            RngStream& rng) {
  double r = true_value(env, policy.params);
  if (env.noise > 0.0) r += env.noise * rng.normal();
  Trajectory traj;
  traj.reward = clip_reward(r, env.horizon);
  traj.steps.assign(env.horizon, {{0.0}, {0.0}});
  return traj;
}

Trajectory rollout_linear_control(const EnvSpec& env,
                                  const PolicyInstance& policy,
                                  RngStream& rng) {
  const int n = env.state_dim;
  const int m = env.action_dim;
  std::vector<double> state(n);
  for (double& s : state) s = rng.normal();

  Trajectory traj;
  traj.steps.reserve(env.horizon);
  double cost = 0.0;
  for (int h = 1; h <= env.horizon; ++h) {
    const auto action = act(policy, h, state, rng);
    for (double s : state) cost += s * s;
    for (double a : action) cost += env.action_cost * a * a;
    traj.steps.emplace_back(state, action);
    std::vector<double> next(n);
    for (int i = 0; i < n; ++i) {
      next[i] = env.dynamics_decay * state[i];
      if (i < m) next[i] += action[i];
      if (env.noise > 0.0) next[i] += env.noise * rng.normal();
    }
    state = std::move(next);
  }
  const double scaled = env.horizon * (1.0 - cost / env_cost_scale(env));
  traj.reward = clip_reward(scaled, env.horizon);
  return traj;
}

Trajectory rollout_gridworld(const EnvSpec& env, const PolicyInstance& policy,
                             RngStream& rng) {
  int row = env.start_row;
  int col = env.start_col;
  int arrival = 0;  // 0 = never reached
  Trajectory traj;
  traj.steps.reserve(env.horizon);
  for (int h = 1; h <= env.horizon; ++h) {
    const std::vector<double> state{static_cast<double>(row),
                                    static_cast<double>(col)};
    const auto logits = act(policy, h, state, rng);
    traj.steps.emplace_back(state, logits);
    const bool at_goal = (row == env.goal_row && col == env.goal_col);
    if (at_goal) continue;
    int a = argmax_index(logits);
    if (env.noise > 0.0 && rng.uniform01() < std::min(env.noise, 1.0)) {
      a = static_cast<int>(rng.uniform_below(4));
    }
    switch (a) {
      case 0: row = std::max(1, row - 1); break;             // up
      case 1: row = std::min(env.grid, row + 1); break;      // down
      case 2: col = std::max(1, col - 1); break;             // left
      default: col = std::min(env.grid, col + 1); break;     // right
    }
    if (row == env.goal_row && col == env.goal_col && arrival == 0) {
      arrival = h;
    }
  }
  traj.reward = arrival > 0 ? clip_reward(env.horizon - arrival, env.horizon) : 0.0;
  return traj;
}

}  // namespace

EnvSpec make_analytic_env(int dim, int horizon, double width, double noise) {
  EnvSpec env;
  env.kind = EnvKind::AnalyticQuadratic;
  env.dim = dim;
  env.horizon = horizon;
  env.width = width;
  env.noise = noise;
  validate_env(env);
  return env;
}

EnvSpec make_linear_control_env(int state_dim, int action_dim, int horizon,
                                double noise) {
  EnvSpec env;
  env.kind = EnvKind::LinearControl;
  env.state_dim = state_dim;
  env.action_dim = action_dim;
  env.horizon = horizon;
  env.noise = noise;
  validate_env(env);
  return env;
}

EnvSpec make_gridworld_env(int grid, int horizon, int start_row, int start_col,
                           int goal_row, int goal_col, double noise) {
  EnvSpec env;
  env.kind = EnvKind::Gridworld;
  env.grid = grid;
  env.horizon = horizon;
  env.start_row = start_row;
  env.start_col = start_col;
  env.goal_row = goal_row;
  env.goal_col = goal_col;
  env.noise = noise;
  validate_env(env);
  return env;
}

double env_width(const EnvSpec& env) {
  return env.width > 0.0 ? env.width : static_cast<double>(env.dim);
}

double env_cost_scale(const EnvSpec& env) {
  return env.cost_scale > 0.0 ? env.cost_scale
                              : 4.0 * env.state_dim * env.horizon;
}

void validate_env(const EnvSpec& env) {
  if (env.horizon < 1) throw std::invalid_argument("env: horizon must be >= 1");
  if (env.noise < 0.0) throw std::invalid_argument("env: noise must be >= 0");
  switch (env.kind) {
    case EnvKind::AnalyticQuadratic:
      if (env.dim < 1) throw std::invalid_argument("env: dim must be >= 1");
      if (!env.theta_star.empty() &&
          static_cast<int>(env.theta_star.size()) != env.dim) {
        throw std::invalid_argument("env: theta_star length must equal dim");
      }
      if (env.width < 0.0) throw std::invalid_argument("env: width must be >= 0");
      break;
    case EnvKind::LinearControl:
      if (env.state_dim < 1 || env.action_dim < 1) {
        throw std::invalid_argument("env: state/action dims must be >= 1");
      }
      if (env.action_dim > env.state_dim) {
        throw std::invalid_argument("env: action_dim must not exceed state_dim");
      }
      break;
    case EnvKind::Gridworld:
      if (env.grid < 2) throw std::invalid_argument("env: grid must be >= 2");
      for (int v : {env.start_row, env.start_col, env.goal_row, env.goal_col}) {
        if (v < 1 || v > env.grid) {
          throw std::invalid_argument("env: cells must lie on the grid");
        }
      }
      if (env.start_row == env.goal_row && env.start_col == env.goal_col) {
        throw std::invalid_argument("env: start and goal must differ");
      }
      break;
  }
}

void check_policy_env(const EnvSpec& env, const PolicySpec& policy) {
  switch (env.kind) {
    case EnvKind::AnalyticQuadratic:
      if (param_count(policy) != env.dim) {
        throw std::invalid_argument(
            "policy parameter count must equal the analytic env dimension");
      }
      break;
    case EnvKind::LinearControl:
      if (policy.input_dim != env.state_dim || policy.output_dim != env.action_dim) {
        throw std::invalid_argument("policy dims must match the control env");
      }
      break;
    case EnvKind::Gridworld:
      if (policy.input_dim != 2 || policy.output_dim != 4) {
        throw std::invalid_argument("gridworld policies take (row, col) and emit 4 logits");
      }
      break;
  }
}

Trajectory rollout(const EnvSpec& env, const PolicyInstance& policy,
                   RngStream& rng) {
  check_policy_env(env, policy.spec);
  switch (env.kind) {
    case EnvKind::AnalyticQuadratic: return rollout_analytic(env, policy, rng);
    case EnvKind::LinearControl: return rollout_linear_control(env, policy, rng);
    case EnvKind::Gridworld: return rollout_gridworld(env, policy, rng);
  }
  throw std::logic_error("rollout: unknown environment kind");
}

double true_value(const EnvSpec& env, const ParamVector& theta) {
  if (env.kind != EnvKind::AnalyticQuadratic) {
    throw std::logic_error("true_value: analytic environment only");
  }
  if (static_cast<int>(theta.size()) != env.dim) {
    throw std::invalid_argument("true_value: dimension mismatch");
  }
  const auto target = resolved_theta_star(env);
  double r2 = 0.0;
  for (int i = 0; i < env.dim; ++i) {
    const double diff = theta[i] - target[i];
    r2 += diff * diff;
  }
  return env.horizon / (1.0 + r2 / env_width(env));
}

ParamVector true_gradient(const EnvSpec& env, const ParamVector& theta) {
  if (env.kind != EnvKind::AnalyticQuadratic) {
    throw std::logic_error("true_gradient: analytic environment only");
  }
  if (static_cast<int>(theta.size()) != env.dim) {
    throw std::invalid_argument("true_gradient: dimension mismatch");
  }
  const auto target = resolved_theta_star(env);
  const double w = env_width(env);
  double r2 = 0.0;
  for (int i = 0; i < env.dim; ++i) {
    const double diff = theta[i] - target[i];
    r2 += diff * diff;
  }
  const double denom = 1.0 + r2 / w;
  const double scale = 2.0 * env.horizon / (w * denom * denom);
  ParamVector grad(env.dim);
  for (int i = 0; i < env.dim; ++i) {
    grad[i] = scale * (target[i] - theta[i]);
  }
  return grad;
}

double curvature_bound(const EnvSpec& env) {
  if (env.kind != EnvKind::AnalyticQuadratic) {
    throw std::logic_error("curvature_bound: analytic environment only");
  }
  return 2.0 * env.horizon / env_width(env);
}

double batch_mean_reward(const std::vector<Trajectory>& batch) {
  if (batch.empty()) {
    throw std::invalid_argument("batch_mean_reward: empty batch");
  }
  double sum = 0.0;
  for (const auto& t : batch) sum += t.reward;
  return sum / static_cast<double>(batch.size());
}

ValueEstimate evaluate_policy(const EnvSpec& env, const PolicyInstance& policy,
                              int episodes, RngStream& rng) {
  if (episodes < 1) {
    throw std::invalid_argument("evaluate_policy: episodes must be >= 1");
  }
  std::vector<double> rewards(episodes);
  for (int i = 0; i < episodes; ++i) {
    rewards[i] = rollout(env, policy, rng).reward;
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= episodes;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  ValueEstimate est;
  est.mean = mean;
  est.stderr_ = episodes > 1 ? std::sqrt(var / (episodes - 1) / episodes) : 0.0;
  est.episodes = episodes;
  return est;
}

}  // namespace fedzero
