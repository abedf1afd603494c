#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fedzero/env.hpp"

using namespace fedzero;

namespace {

PolicySpec linear_spec(int in, int out) {
  PolicySpec spec;
  spec.kind = PolicyKind::Linear;
  spec.input_dim = in;
  spec.output_dim = out;
  return spec;
}

PolicyInstance flat_policy_for(const EnvSpec& env, const ParamVector& theta) {
  return make_policy(linear_spec(env.dim - 1, 1), theta);
}

}  // namespace

TEST_CASE("gridworld walk with first-arrival reward") {
  const EnvSpec env = make_gridworld_env(3, 4, 1, 1, 1, 3, 0.0);
  // Logit bias picks "right" everywhere; weights zero.
  PolicyInstance right = make_policy(linear_spec(2, 4),
                                     {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1});
  RngStream rng(1, StreamRole::Test, 1);
  const Trajectory traj = rollout(env, right, rng);
  CHECK(traj.steps.size() == 4);
  CHECK(traj.reward == 2.0);  // reached at step 2, H - 2
  // Absorbing: position stays at the goal after arrival.
  CHECK(traj.steps[2].first == std::vector<double>{1.0, 3.0});
  CHECK(traj.steps[3].first == std::vector<double>{1.0, 3.0});

  // Never reaching the goal scores zero.
  PolicyInstance left = make_policy(linear_spec(2, 4),
                                    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0});
  const Trajectory stuck = rollout(env, left, rng);
  CHECK(stuck.reward == 0.0);

  CHECK_THROWS_AS(make_gridworld_env(3, 4, 1, 1, 1, 1, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(rollout(env, flat_policy_for(make_analytic_env(8, 4), ParamVector(8, 0.0)), rng),
                  std::invalid_argument);
}

TEST_CASE("analytic environment value and gradient") {
  const EnvSpec env = make_analytic_env(6, 4, 3.0);
  const ParamVector at_target(6, 1.0);
  CHECK(true_value(env, at_target) == doctest::Approx(4.0));

  // |theta - theta*|^2 = width gives H/2.
  ParamVector halfway(6, 1.0);
  halfway[0] += std::sqrt(3.0);
  CHECK(true_value(env, halfway) == doctest::Approx(2.0));

  CHECK(true_gradient(env, at_target) == ParamVector(6, 0.0));

  RngStream rng(2, StreamRole::Test, 2);
  for (int trial = 0; trial < 100; ++trial) {
    ParamVector theta(6);
    for (double& x : theta) x = 1.0 + 2.0 * rng.normal();
    const ParamVector grad = true_gradient(env, theta);
    // Gradient points from theta toward theta*.
    double toward = 0.0;
    for (int i = 0; i < 6; ++i) toward += grad[i] * (1.0 - theta[i]);
    CHECK(toward >= 0.0);
    // Central differences, step 1e-6, relative tolerance 1e-5.
    const double h = 1e-6;
    for (int i = 0; i < 6; ++i) {
      ParamVector plus = theta, minus = theta;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (true_value(env, plus) - true_value(env, minus)) / (2 * h);
      CHECK(fd == doctest::Approx(grad[i]).epsilon(1e-5).scale(1e-6));
    }
  }

  const EnvSpec grid = make_gridworld_env(3, 4, 1, 1, 1, 3, 0.0);
  CHECK_THROWS_AS(true_value(grid, at_target), std::logic_error);
  CHECK_THROWS_AS(true_gradient(grid, at_target), std::logic_error);
}

TEST_CASE("noiseless analytic rollouts are deterministic") {
  const EnvSpec env = make_analytic_env(5, 6, 5.0, 0.0);
  const PolicyInstance policy = flat_policy_for(env, {0.5, 1.5, 0.2, 0.9, 1.1});
  RngStream a(3, StreamRole::Test, 3), b(4, StreamRole::Test, 4);
  const Trajectory ta = rollout(env, policy, a);
  const Trajectory tb = rollout(env, policy, b);
  CHECK(ta.reward == tb.reward);
  CHECK(ta.reward == doctest::Approx(true_value(env, policy.params)));
  CHECK(ta.steps.size() == 6);
}

TEST_CASE("monte-carlo value matches the closed form") {
  const EnvSpec env = make_analytic_env(4, 4, 4.0, 0.3);
  const PolicyInstance policy = flat_policy_for(env, {0.0, 0.5, 1.2, 2.0});
  RngStream rng(5, StreamRole::Test, 5);
  const int n = 10000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rollout(env, policy, rng).reward;
  const double mc = sum / n;
  const double se = env.noise / std::sqrt(static_cast<double>(n));
  CHECK(std::fabs(mc - true_value(env, policy.params)) < 4.0 * se);
}

TEST_CASE("rewards stay in range on every environment") {
  RngStream rng(6, StreamRole::Test, 6);
  const EnvSpec analytic = make_analytic_env(4, 4, 4.0, 2.0);
  const EnvSpec control = make_linear_control_env(3, 2, 8, 0.3);
  const EnvSpec grid = make_gridworld_env(4, 7, 1, 1, 4, 4, 0.4);
  PolicySpec grid_policy = linear_spec(2, 4);
  grid_policy.action_mode = ActionMode::GaussianExploration;
  grid_policy.action_noise = 0.5;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto pa = init_policy(linear_spec(3, 1), rng);
    CHECK(rollout(analytic, pa, rng).reward >= 0.0);
    CHECK(rollout(analytic, pa, rng).reward <= 4.0);
    const auto pc = init_policy(linear_spec(3, 2), rng);
    const Trajectory tc = rollout(control, pc, rng);
    CHECK(tc.reward >= 0.0);
    CHECK(tc.reward <= 8.0);
    const auto pg = init_policy(grid_policy, rng);
    const Trajectory tg = rollout(grid, pg, rng);
    CHECK(tg.reward >= 0.0);
    CHECK(tg.reward <= 7.0);
  }
}

TEST_CASE("identical streams give identical trajectories") {
  const EnvSpec control = make_linear_control_env(3, 2, 5, 0.2);
  RngStream init(7, StreamRole::Test, 7);
  const PolicyInstance policy = init_policy(linear_spec(3, 2), init);
  RngStream a(8, StreamRole::Oracle, 2, 1), b(8, StreamRole::Oracle, 2, 1);
  const Trajectory ta = rollout(control, policy, a);
  const Trajectory tb = rollout(control, policy, b);
  CHECK(ta.reward == tb.reward);
  CHECK(ta.steps == tb.steps);
}

TEST_CASE("value function is Lipschitz at the documented rate") {
  // Max slope of H / (1 + r^2/w) in r is (9/8) H / sqrt(3 w); any sampled
  // pair must respect it.
  const EnvSpec env = make_analytic_env(8, 4, 8.0);
  const double lipschitz = 1.125 * env.horizon / std::sqrt(3.0 * env_width(env));
  RngStream rng(9, StreamRole::Test, 8);
  for (int trial = 0; trial < 2000; ++trial) {
    ParamVector a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = 1.0 + 3.0 * rng.normal();
      b[i] = 1.0 + 3.0 * rng.normal();
    }
    ParamVector diff(8);
    for (int i = 0; i < 8; ++i) diff[i] = a[i] - b[i];
    const double gap = std::fabs(true_value(env, a) - true_value(env, b));
    CHECK(gap <= lipschitz * l2_norm(diff) * (1.0 + 1e-9));
  }
}

TEST_CASE("batch mean reward") {
  auto with_reward = [](double r) {
    Trajectory t;
    t.reward = r;
    return t;
  };
  CHECK(batch_mean_reward({with_reward(1), with_reward(2), with_reward(3)}) ==
        doctest::Approx(2.0));
  CHECK(batch_mean_reward({with_reward(0.75)}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(batch_mean_reward({}), std::invalid_argument);
}

TEST_CASE("linear control reward scale") {
  const EnvSpec env = make_linear_control_env(3, 2, 8, 0.0);
  CHECK(env_cost_scale(env) == doctest::Approx(4.0 * 3 * 8));
  RngStream rng(10, StreamRole::Test, 9);
  // The zero policy under zero process noise still pays state cost only.
  const PolicyInstance zero = make_policy(linear_spec(3, 2), ParamVector(8, 0.0));
  const Trajectory t = rollout(env, zero, rng);
  CHECK(t.reward > 0.0);
  CHECK(t.reward < 8.0);
}
