#pragma once

#include <utility>
#include <vector>

#include "fedzero/core.hpp"
#include "fedzero/policy.hpp"
#include "fedzero/rng.hpp"

namespace fedzero {

// One episode: H (state, action) pairs and a trajectory-level reward in
// [0, H]. Rewards are deliberately not per-step decomposable.
struct Trajectory {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> steps;
  double reward = 0.0;
};

enum class EnvKind { AnalyticQuadratic, LinearControl, Gridworld };

struct EnvSpec {
  EnvKind kind = EnvKind::AnalyticQuadratic;
  int horizon = 1;
  double noise = 0.0;  // reward noise sigma (analytic), process noise sigma
                       // (linear control), slip probability (gridworld)

  // analytic-quadratic: value H / (1 + |theta - theta*|^2 / width); the
  // policy parameters feed the closed form directly and the trajectory is a
  // dummy H-step record.
  int dim = 0;
  double width = 0.0;                // 0 -> defaults to dim
  double target_value = 1.0;         // theta* entries when theta_star empty
  std::vector<double> theta_star;

  // linear-control: s' = decay * s + B a + noise * xi with B the leading
  // identity block; trajectory cost sum |s|^2 + action_cost |a|^2 mapped
  // affinely onto [0, H] via cost_scale.
  int state_dim = 0;
  int action_dim = 0;
  double dynamics_decay = 0.9;
  double action_cost = 0.1;
  double cost_scale = 0.0;  // 0 -> defaults to 4 * state_dim * horizon

  // gridworld: grid x grid board, 1-based cells, absorbing goal; reward is
  // H minus the first-arrival step, 0 if the goal is never reached. Action
  // logits map argmax -> {up, down, left, right}.
  int grid = 0;
  int start_row = 1, start_col = 1;
  int goal_row = 1, goal_col = 1;
};

EnvSpec make_analytic_env(int dim, int horizon, double width = 0.0,
                          double noise = 0.0);
EnvSpec make_linear_control_env(int state_dim, int action_dim, int horizon,
                                double noise = 0.0);
EnvSpec make_gridworld_env(int grid, int horizon, int start_row, int start_col,
                           int goal_row, int goal_col, double noise = 0.0);

// Resolved defaults (width, cost_scale).
double env_width(const EnvSpec& env);
double env_cost_scale(const EnvSpec& env);

void validate_env(const EnvSpec& env);

// Throws invalid_argument when the policy shape cannot drive this
// environment.
void check_policy_env(const EnvSpec& env, const PolicySpec& policy);

Trajectory rollout(const EnvSpec& env, const PolicyInstance& policy,
                   RngStream& rng);

// Closed-form value / gradient of the analytic environment; the
// verification oracle. Throws logic_error for other kinds.
double true_value(const EnvSpec& env, const ParamVector& theta);
ParamVector true_gradient(const EnvSpec& env, const ParamVector& theta);

// Smoothness constant of the analytic value function (2H / width).
double curvature_bound(const EnvSpec& env);

double batch_mean_reward(const std::vector<Trajectory>& batch);

struct ValueEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int episodes = 0;
};

ValueEstimate evaluate_policy(const EnvSpec& env, const PolicyInstance& policy,
                              int episodes, RngStream& rng);

}  // namespace fedzero
