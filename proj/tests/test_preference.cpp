#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fedzero/preference.hpp"

using namespace fedzero;

namespace {

// Independent oracle: P(X > k) for X ~ Binomial(n, p) by direct summation.
double binomial_tail_above(int n, double p, int k) {
  double tail = 0.0;
  for (int j = k + 1; j <= n; ++j) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) -
                            std::lgamma(n - j + 1.0) + j * std::log(p) +
                            (n - j) * std::log1p(-p);
    tail += std::exp(log_term);
  }
  return tail;
}

PolicySpec flat_spec(int dim) {
  PolicySpec spec;
  spec.kind = PolicyKind::Linear;
  spec.input_dim = dim - 1;
  spec.output_dim = 1;
  return spec;
}

}  // namespace

TEST_CASE("link function examples and invariants") {
  const LinkFunction linear{LinkKind::Linear, 0.01, 0.0};
  CHECK(link_eval(linear, 0.0) == doctest::Approx(0.5));
  CHECK(link_eval(linear, 100.0) == doctest::Approx(1.0));
  CHECK(link_eval(linear, -100.0) == doctest::Approx(0.0));

  const LinkFunction logistic{LinkKind::Logistic, 0.0, 1.0};
  CHECK(link_eval(logistic, 0.0) == doctest::Approx(0.5));

  const LinkFunction step{LinkKind::Step, 0.0, 0.0};
  CHECK(link_eval(step, 1e-12) == 1.0);
  CHECK(link_eval(step, -1e-12) == 0.0);
  CHECK(link_eval(step, 0.0) == 0.5);

  for (const LinkFunction& link : {linear, logistic, step}) {
    double prev = -1.0;
    for (double x = -200.0; x <= 200.0; x += 0.5) {
      const double y = link_eval(link, x);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
      CHECK(y + 1e-12 >= prev);  // monotone
      CHECK(y + link_eval(link, -x) == doctest::Approx(1.0));  // symmetry
      prev = y;
    }
  }
  CHECK_THROWS_AS(link_eval(linear, std::nan("")), std::invalid_argument);
}

TEST_CASE("panelist votes") {
  RngStream rng(1, StreamRole::Test, 1);
  const LinkFunction step{LinkKind::Step, 0.0, 0.0};
  for (int i = 0; i < 100; ++i) {
    CHECK(panelist_vote(step, 2.0, 1.0, rng) == 1);
    CHECK(panelist_vote(step, 1.0, 2.0, rng) == 0);
  }
  // Linear link at zero difference: Bernoulli(1/2).
  const LinkFunction linear{LinkKind::Linear, 0.01, 0.0};
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ones += panelist_vote(linear, 3.0, 3.0, rng);
  CHECK(std::fabs(static_cast<double>(ones) / n - 0.5) < 0.005);
}

TEST_CASE("panel majority vote against exact binomial tails") {
  RngStream rng(2, StreamRole::Test, 2);

  // P = 1 is the single panelist.
  PanelSpec one;
  one.panelists = 1;
  one.link = LinkFunction{LinkKind::Step, 0.0, 0.0};
  CHECK(panel_vote(one, 5.0, 0.0, rng) == 1);
  CHECK(panel_vote(one, 0.0, 5.0, rng) == 0);

  // P = 100 at exactly p = 1/2: ties count as 0, so
  // P(o=1) = P(Bin(100, 1/2) > 50) ~ 0.4602.
  const double exact = binomial_tail_above(100, 0.5, 50);
  CHECK(exact == doctest::Approx(0.4602054).epsilon(1e-5));
  // Closed form by symmetry: (1 - P(X=50)) / 2 with the central term from a
  // running product, C(100,50)/2^100 = prod (50+j)/(4j).
  double central = 1.0;
  for (int j = 1; j <= 50; ++j) central *= (50.0 + j) / (4.0 * j);
  CHECK(std::fabs(exact - (1.0 - central) / 2.0) < 1e-12);
  PanelSpec hundred;
  hundred.panelists = 100;
  hundred.link = LinkFunction{LinkKind::Linear, 0.01, 0.0};
  int ones = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) ones += panel_vote(hundred, 0.0, 0.0, rng);
  const double freq = static_cast<double>(ones) / n;
  const double se = std::sqrt(exact * (1 - exact) / n);
  CHECK(std::fabs(freq - exact) < 4.0 * se);

  // Even P = 2 at p = 1/2: strict majority requires both votes.
  PanelSpec two;
  two.panelists = 2;
  two.link = LinkFunction{LinkKind::Linear, 0.01, 0.0};
  ones = 0;
  for (int i = 0; i < n; ++i) ones += panel_vote(two, 0.0, 0.0, rng);
  CHECK(std::fabs(static_cast<double>(ones) / n - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("panel sharpening and hoeffding decay") {
  RngStream rng(3, StreamRole::Test, 3);
  const LinkFunction linear{LinkKind::Linear, 0.01, 0.0};
  const double x = 10.0;  // sigma(x) = 0.6
  const int trials = 10000;
  std::vector<double> freq;
  for (int P : {1, 9, 25, 100}) {
    PanelSpec panel;
    panel.panelists = P;
    panel.link = linear;
    int ones = 0;
    for (int i = 0; i < trials; ++i) ones += panel_vote(panel, x, 0.0, rng);
    freq.push_back(static_cast<double>(ones) / trials);
  }
  for (std::size_t i = 0; i + 1 < freq.size(); ++i) {
    CHECK(freq[i + 1] >= freq[i] - 0.02);
  }
  // Hoeffding envelope at odd P, delta = 0.1.
  for (int P : {9, 25, 101}) {
    PanelSpec panel;
    panel.panelists = P;
    panel.link = linear;
    int zeros = 0;
    for (int i = 0; i < trials; ++i) zeros += 1 - panel_vote(panel, x, 0.0, rng);
    const double err = static_cast<double>(zeros) / trials;
    CHECK(err <= std::exp(-2.0 * 0.01 * P) + 0.02);
  }
}

TEST_CASE("preference oracle votes and accounting") {
  // Noiseless analytic environment, step link, P = 1: the oracle returns the
  // exact sign of the value difference.
  const EnvSpec env = make_analytic_env(4, 4, 4.0, 0.0);
  const PolicySpec spec = flat_spec(4);
  const PolicyInstance near = make_policy(spec, {0.9, 1.0, 1.0, 1.1});
  const PolicyInstance far = make_policy(spec, {0.0, 2.0, 0.0, 2.0});
  PanelSpec panel;
  panel.panelists = 1;
  panel.link = LinkFunction{LinkKind::Step, 0.0, 0.0};
  panel.pairs = 1;
  panel.batch_size = 1;

  RngStream rng(4, StreamRole::Test, 4);
  CHECK(true_value(env, near.params) > true_value(env, far.params));
  const OracleResult better = preference_oracle(panel, far, near, env, rng);
  CHECK(better.vote == 1);
  CHECK(better.trajectories == 2);
  const OracleResult worse = preference_oracle(panel, near, far, env, rng);
  CHECK(worse.vote == -1);

  PanelSpec batched = panel;
  batched.pairs = 3;
  batched.batch_size = 5;
  const OracleResult acc = preference_oracle(batched, far, near, env, rng);
  CHECK(acc.vote == 1);  // every round prefers the better policy
  CHECK(acc.trajectories == 2 * 3 * 5);

  // Identical policies with even N: sign(sum(o_n - 1/2)) is 0 whenever the
  // two rounds split, probability 1/2.
  PanelSpec even = panel;
  even.pairs = 2;
  int zeros = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    const OracleResult r = preference_oracle(even, near, near, env, rng);
    zeros += r.vote == 0;
  }
  CHECK(std::fabs(static_cast<double>(zeros) / n - 0.5) <
        4.0 * std::sqrt(0.25 / n));

  CHECK_THROWS_AS(
      preference_oracle(panel, near, make_policy(flat_spec(3), {1, 1, 1}), env, rng),
      std::invalid_argument);
}

TEST_CASE("separation histograms and overlap") {
  const EnvSpec noiseless = make_analytic_env(4, 4, 4.0, 0.0);
  const PolicySpec spec = flat_spec(4);
  const PolicyInstance policy = make_policy(spec, {1.0, 0.5, 1.0, 1.5});
  RngStream rng(5, StreamRole::Test, 5);

  const auto same = separation_histogram(noiseless, policy, policy, 1, 50, rng);
  CHECK(same.overlap == 1.0);
  CHECK(same.base_means == same.perturbed_means);

  // Large value gap over small noise at a large batch size: near-zero overlap.
  const EnvSpec noisy = make_analytic_env(4, 4, 4.0, 0.05);
  const PolicyInstance low = make_policy(spec, {3.0, 3.0, 3.0, 3.0});
  const auto split = separation_histogram(noisy, policy, low, 16, 50, rng);
  CHECK(split.overlap < 0.05);

  // Doubling D does not increase expected overlap (checked over seeds).
  const EnvSpec medium = make_analytic_env(4, 4, 4.0, 0.4);
  const PolicyInstance mid = make_policy(spec, {0.4, 0.6, 1.2, 1.6});
  double diff_sum = 0.0;
  const int seeds = 50;
  for (int s = 0; s < seeds; ++s) {
    RngStream ra(100 + s, StreamRole::Test, 6);
    RngStream rb(100 + s, StreamRole::Test, 7);
    const auto d1 = separation_histogram(medium, policy, mid, 1, 60, ra);
    const auto d2 = separation_histogram(medium, policy, mid, 2, 60, rb);
    diff_sum += d2.overlap - d1.overlap;
  }
  CHECK(diff_sum / seeds <= 0.02);  // one-sided slack

  CHECK_THROWS_AS(histogram_overlap({}, {1.0}), std::invalid_argument);
}
