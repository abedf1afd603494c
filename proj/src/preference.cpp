#include "fedzero/preference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedzero {

double link_eval(const LinkFunction& link, double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("link_eval: argument must be finite");
  }
  switch (link.kind) {
    case LinkKind::Linear:
      return std::clamp(link.slope * x + 0.5, 0.0, 1.0);
    case LinkKind::Logistic:
      return 1.0 / (1.0 + std::exp(-link.beta * x));
    case LinkKind::Step:
      if (x > 0.0) return 1.0;
      if (x < 0.0) return 0.0;
      return 0.5;
  }
  throw std::logic_error("link_eval: unknown link kind");
}

void validate_panel(const PanelSpec& panel) {
  if (panel.panelists < 1) throw std::invalid_argument("panel: P must be >= 1");
  if (panel.pairs < 1) throw std::invalid_argument("panel: N must be >= 1");
  if (panel.batch_size < 1) throw std::invalid_argument("panel: D must be >= 1");
  if (panel.link.kind == LinkKind::Linear && panel.link.slope < 0.0) {
    throw std::invalid_argument("panel: linear link slope must be >= 0");
  }
  if (panel.link.kind == LinkKind::Logistic && panel.link.beta < 0.0) {
    throw std::invalid_argument("panel: logistic link beta must be >= 0");
  }
}

int panelist_vote(const LinkFunction& link, double r1, double r0,
                  RngStream& rng) {
  const double p = link_eval(link, r1 - r0);
  return rng.uniform01() < p ? 1 : 0;
}

int panel_vote(const PanelSpec& panel, double r1, double r0, RngStream& rng) {
  validate_panel(panel);
  int ones = 0;
  for (int p = 0; p < panel.panelists; ++p) {
    ones += panelist_vote(panel.link, r1, r0, rng);
  }
  // Strict majority: 2 * ones > P. Ties (even P) fall through to 0.
  return 2 * ones > panel.panelists ? 1 : 0;
}

OracleResult preference_oracle(const PanelSpec& panel,
                               const PolicyInstance& base,
                               const PolicyInstance& perturbed,
                               const EnvSpec& env, RngStream& rng) {
  validate_panel(panel);
  if (base.spec.input_dim != perturbed.spec.input_dim ||
      base.spec.output_dim != perturbed.spec.output_dim ||
      base.params.size() != perturbed.params.size()) {
    throw std::invalid_argument("preference_oracle: policies must share a spec");
  }
  check_policy_env(env, base.spec);

  int vote_sum = 0;  // 2 * sum(o_n - 1/2)
  for (int n = 0; n < panel.pairs; ++n) {
    std::vector<Trajectory> batch0(panel.batch_size);
    std::vector<Trajectory> batch1(panel.batch_size);
    for (int i = 0; i < panel.batch_size; ++i) {
      batch0[i] = rollout(env, base, rng);
    }
    for (int i = 0; i < panel.batch_size; ++i) {
      batch1[i] = rollout(env, perturbed, rng);
    }
    const double r0 = batch_mean_reward(batch0);
    const double r1 = batch_mean_reward(batch1);
    const int o = panel_vote(panel, r1, r0, rng);
    vote_sum += 2 * o - 1;
  }
  OracleResult result;
  result.vote = sign_scalar(static_cast<double>(vote_sum));
  result.trajectories =
      2ll * panel.pairs * static_cast<std::int64_t>(panel.batch_size);
  return result;
}

double histogram_overlap(const std::vector<double>& a,
                         const std::vector<double>& b, int bins) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("histogram_overlap: empty sample");
  }
  if (bins < 1) throw std::invalid_argument("histogram_overlap: bins must be >= 1");
  double lo = a[0], hi = a[0];
  for (double x : a) { lo = std::min(lo, x); hi = std::max(hi, x); }
  for (double x : b) { lo = std::min(lo, x); hi = std::max(hi, x); }
  if (hi <= lo) return 1.0;  // all mass in one shared bin
  std::vector<double> ha(bins, 0.0), hb(bins, 0.0);
  const double inv_width = bins / (hi - lo);
  auto bin_of = [&](double x) {
    int idx = static_cast<int>((x - lo) * inv_width);
    return std::min(idx, bins - 1);
  };
  for (double x : a) ha[bin_of(x)] += 1.0 / a.size();
  for (double x : b) hb[bin_of(x)] += 1.0 / b.size();
  double overlap = 0.0;
  for (int i = 0; i < bins; ++i) overlap += std::min(ha[i], hb[i]);
  return overlap;
}

SeparationHistogram separation_histogram(const EnvSpec& env,
                                         const PolicyInstance& base,
                                         const PolicyInstance& perturbed,
                                         int batch_size, int batches,
                                         RngStream& rng) {
  if (batch_size < 1 || batches < 1) {
    throw std::invalid_argument("separation_histogram: sizes must be >= 1");
  }
  SeparationHistogram out;
  out.base_means.reserve(batches);
  out.perturbed_means.reserve(batches);
  for (int b = 0; b < batches; ++b) {
    std::vector<Trajectory> batch(batch_size);
    for (int i = 0; i < batch_size; ++i) batch[i] = rollout(env, base, rng);
    out.base_means.push_back(batch_mean_reward(batch));
  }
  for (int b = 0; b < batches; ++b) {
    std::vector<Trajectory> batch(batch_size);
    for (int i = 0; i < batch_size; ++i) batch[i] = rollout(env, perturbed, rng);
    out.perturbed_means.push_back(batch_mean_reward(batch));
  }
  out.overlap = histogram_overlap(out.base_means, out.perturbed_means);
  return out;
}

}  // namespace fedzero
