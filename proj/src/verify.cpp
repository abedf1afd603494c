#include "fedzero/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "fedzero/trace.hpp"
#include "fedzero/util.hpp"

namespace fedzero {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double exact_binomial_tail_above(int n, double p, int k) {
  // P(X > k) for X ~ Binomial(n, p), summed via log coefficients.
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return k < n ? 1.0 : 0.0;
  double tail = 0.0;
  for (int j = k + 1; j <= n; ++j) {
    const double log_term = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) -
                            std::lgamma(n - j + 1.0) + j * std::log(p) +
                            (n - j) * std::log1p(-p);
    tail += std::exp(log_term);
  }
  return std::min(tail, 1.0);
}

struct MeanVar {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double se() const { return n > 0 ? std::sqrt(variance() / n) : 0.0; }
};

double paired_t_stat(const std::vector<double>& diffs) {
  const double se = standard_error(diffs);
  if (se == 0.0) return mean_of(diffs) == 0.0 ? 0.0 : kInf * sign_scalar(mean_of(diffs));
  return mean_of(diffs) / se;
}

// Two-sample equality margin: |mean_a - mean_b| / sqrt(se_a^2 + se_b^2).
double overlap_z(const std::vector<double>& a, const std::vector<double>& b) {
  const double pooled = std::sqrt(standard_error(a) * standard_error(a) +
                                  standard_error(b) * standard_error(b));
  const double gap = std::fabs(mean_of(a) - mean_of(b));
  if (pooled == 0.0) return gap == 0.0 ? 0.0 : kInf;
  return gap / pooled;
}

// Linear policy whose flat dimension equals `dim`.
PolicySpec flat_policy(int dim) {
  PolicySpec spec;
  spec.kind = PolicyKind::Linear;
  spec.input_dim = dim - 1;
  spec.output_dim = 1;
  return spec;
}

PanelSpec exact_sign_panel() {
  PanelSpec panel;
  panel.panelists = 1;
  panel.link = LinkFunction{LinkKind::Step, 0.0, 0.0};
  panel.pairs = 1;
  panel.batch_size = 1;
  return panel;
}

// Noiseless analytic environment in the exact-sign regime, theory schedule.
RunConfig theory_mode_config(int dim, int agents, int iterations,
                             double c = 1.0) {
  RunConfig cfg;
  cfg.env = make_analytic_env(dim, 4, static_cast<double>(dim), 0.0);
  cfg.policy = flat_policy(dim);
  cfg.algorithm = Algorithm::Par;
  cfg.agents = agents;
  cfg.perturbation = PerturbationKind::Binary;
  cfg.mu = 0.01;
  cfg.alpha = AlphaSchedule{AlphaMode::Theory, 0.0, c};
  cfg.panel = exact_sign_panel();
  cfg.iterations = iterations;
  cfg.update = UpdateMode::PlainSgd;
  return cfg;
}

}  // namespace

CheckReport check_khintchine(std::uint64_t seed) {
  CheckReport report;
  report.name = "khintchine";
  report.seed = seed;
  RngStream rng(seed, StreamRole::Check, 1);

  const double lower_const = 1.0 / std::sqrt(3.0);
  double worst_margin = kInf;  // relative distance to the nearer bound
  bool pass = true;
  long samples = 0;
  int violations = 0;

  // Exact enumeration: 500 vectors at d = 12 plus 500 at random d <= 12.
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = trial < 500
                      ? 12
                      : 1 + static_cast<int>(rng.uniform_below(12));
    std::vector<double> a(d);
    for (double& x : a) x = rng.normal();
    const double norm = l2_norm(a);
    double expectation = 0.0;
    const std::uint64_t patterns = 1ull << d;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) {
        s += (mask >> i) & 1 ? a[i] : -a[i];
      }
      expectation += std::fabs(s);
    }
    expectation /= static_cast<double>(patterns);
    samples += static_cast<long>(patterns);
    const double margin =
        std::min(expectation - lower_const * norm, norm - expectation) / norm;
    worst_margin = std::min(worst_margin, margin);
    if (margin < -1e-12) {
      pass = false;
      ++violations;
    }
  }

  // Two pinned exact cases: a = e1 makes the upper bound tight, a = (1,1)
  // gives E = 1 and ratio 1/sqrt(2).
  {
    std::vector<double> e1{1.0};
    double e = 0.0;
    for (int s : {-1, 1}) e += std::fabs(s * e1[0]);
    e /= 2.0;
    if (std::fabs(e - 1.0) > 1e-15) pass = false;
    double e11 = 0.0;
    for (int s0 : {-1, 1}) {
      for (int s1 : {-1, 1}) e11 += std::fabs(s0 + s1);
    }
    e11 /= 4.0;
    if (std::fabs(e11 - 1.0) > 1e-15) pass = false;
    report.data["a_e1_expectation"] = e;
    report.data["a_11_expectation"] = e11;
    report.data["a_11_ratio"] = e11 / std::sqrt(2.0);
  }

  // Monte-Carlo at d in {64, 512}, five coefficient vectors each.
  const int mc_draws = 100000;
  for (int d : {64, 512}) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> a(d);
      for (double& x : a) x = rng.normal();
      const double norm = l2_norm(a);
      MeanVar acc;
      for (int i = 0; i < mc_draws; ++i) {
        const PerturbationVector v = sample_rademacher(d, rng);
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += v.values[j] * a[j];
        acc.add(std::fabs(s));
      }
      samples += mc_draws;
      const double slack = kSigmaSlack * acc.se();
      const double margin = std::min(acc.mean - (lower_const * norm - slack),
                                     (norm + slack) - acc.mean) / norm;
      worst_margin = std::min(worst_margin, margin);
      if (margin < 0.0) {
        pass = false;
        ++violations;
      }
    }
  }

  report.pass = pass;
  report.measured = worst_margin;
  report.bound = 0.0;
  report.tolerance = kSigmaSlack;
  report.samples = samples;
  report.data["violations"] = violations;
  report.details = "worst relative margin to the E|<v,a>| sandwich";
  return report;
}

CheckReport check_norm_axioms(std::uint64_t seed, int trials) {
  CheckReport report;
  report.name = "norm-axioms";
  report.seed = seed;
  RngStream rng(seed, StreamRole::Check, 2);

  const double tol = 1e-9;
  double worst = 0.0;  // largest relative violation seen
  bool pass = true;
  auto note = [&](double violation) {
    worst = std::max(worst, violation);
    if (violation > tol) pass = false;
  };

  for (int trial = 0; trial < trials; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_below(64));
    const int K = 1 + static_cast<int>(rng.uniform_below(
                          static_cast<std::uint64_t>(std::min(d, 8))));
    const bool shuffled = rng.uniform01() < 0.5;
    const Partition p =
        shuffled ? make_partition(d, K, PartitionMode::Shuffled, &rng)
                 : make_partition(d, K, PartitionMode::Contiguous);
    ParamVector x(d), y(d);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    const double a = 4.0 * rng.normal();

    const double nx = block_sum_norm(x, p);
    const double ny = block_sum_norm(y, p);
    ParamVector xy(d);
    for (int i = 0; i < d; ++i) xy[i] = x[i] + y[i];
    const double nxy = block_sum_norm(xy, p);
    const double scale = std::max(1.0, nx + ny);
    note((nxy - (nx + ny)) / scale);  // triangle inequality

    ParamVector ax(d);
    for (int i = 0; i < d; ++i) ax[i] = a * x[i];
    note(std::fabs(block_sum_norm(ax, p) - std::fabs(a) * nx) /
         std::max(1.0, std::fabs(a) * nx));  // homogeneity

    const double l2 = l2_norm(x);
    note((l2 - nx) / std::max(1.0, l2));                     // lower sandwich
    note((nx - std::sqrt(static_cast<double>(K)) * l2) /
         std::max(1.0, nx));                                 // upper sandwich

    if (l2 > 1e-12 && nx <= 0.0) note(1.0);  // definiteness
  }

  // Zero vector and the two collapse cases.
  {
    const Partition p = make_partition(6, 3, PartitionMode::Contiguous);
    note(block_sum_norm(ParamVector(6, 0.0), p));
    ParamVector x{1.0, -2.0, 3.0, 0.5, -0.25, 4.0};
    const Partition p1 = make_partition(6, 1, PartitionMode::Contiguous);
    note(std::fabs(block_sum_norm(x, p1) - l2_norm(x)));
    const Partition pd = make_partition(6, 6, PartitionMode::Contiguous);
    double l1 = 0.0;
    for (double v : x) l1 += std::fabs(v);
    note(std::fabs(block_sum_norm(x, pd) - l1));
  }

  report.pass = pass;
  report.measured = worst;
  report.bound = 0.0;
  report.tolerance = tol;
  report.samples = trials;
  report.details = "largest relative violation over norm axioms and sandwich";
  return report;
}

CheckReport check_sign_alignment(std::uint64_t seed, int perturbations) {
  CheckReport report;
  report.name = "sign-alignment";
  report.seed = seed;
  RngStream rng(seed, StreamRole::Check, 3);

  const int d = 32;
  const EnvSpec env = make_analytic_env(d, 4, static_cast<double>(d), 0.0);
  const double smooth = curvature_bound(env);  // 2H / width
  const Partition p = make_partition(d, 4, PartitionMode::Contiguous);
  const int block = 0;
  const double block_size = static_cast<double>(p.blocks[block].size());
  const MaskVector mask = p.mask(block);

  const std::vector<double> radii{0.3, 0.7, 1.0, 1.5, 2.5};
  const std::vector<double> mus{1e-3, 1e-2, 0.05, 0.1, 0.2};
  const double root_w = std::sqrt(env_width(env));

  double worst_margin = kInf;
  bool pass = true;
  nlohmann::json grid = nlohmann::json::array();

  for (double rho : radii) {
    ParamVector direction(d);
    for (double& x : direction) x = rng.normal();
    const double dn = l2_norm(direction);
    ParamVector theta(d);
    for (int i = 0; i < d; ++i) {
      theta[i] = env.target_value + rho * root_w * direction[i] / dn;
    }
    const ParamVector grad = true_gradient(env, theta);
    const ParamVector grad_block = mask_apply(grad, mask);
    const double grad_block_norm = l2_norm(grad_block);
    const double v0 = true_value(env, theta);

    for (double mu : mus) {
      MeanVar acc;
      ParamVector theta_p = theta;
      for (int i = 0; i < perturbations; ++i) {
        const PerturbationVector v = sample_rademacher(d, rng);
        double inner = 0.0;
        for (int idx : p.blocks[block]) {
          theta_p[idx] = theta[idx] + mu * v.values[idx];
          inner += grad[idx] * v.values[idx];
        }
        const double vp = true_value(env, theta_p);
        acc.add(sign_scalar(vp - v0) * inner);
        for (int idx : p.blocks[block]) theta_p[idx] = theta[idx];
      }
      const double bound = grad_block_norm / std::sqrt(3.0) -
                           mu * smooth * block_size -
                           kSigmaSlack * acc.se();
      const double margin = acc.mean - bound;
      worst_margin = std::min(worst_margin, margin);
      if (margin < 0.0) pass = false;
      grid.push_back({{"rho", rho},
                      {"mu", mu},
                      {"estimate", acc.mean},
                      {"se", acc.se()},
                      {"bound", bound}});
    }
  }

  report.pass = pass;
  report.measured = worst_margin;
  report.bound = 0.0;
  report.tolerance = kSigmaSlack;
  report.samples = static_cast<long>(perturbations) * 25;
  report.data["grid"] = grid;
  report.details = "worst margin of the alignment estimate over its lower bound";
  return report;
}

CheckReport check_panel_sharpening(std::uint64_t seed, int trials) {
  CheckReport report;
  report.name = "panel-sharpening";
  report.seed = seed;
  RngStream rng(seed, StreamRole::Check, 4);

  const LinkFunction link{LinkKind::Linear, 0.01, 0.0};
  const double x = 10.0;  // sigma(x) = 0.6, delta = 0.1
  const double p_single = link_eval(link, x);
  const double delta = p_single - 0.5;

  bool pass = true;
  double worst_margin = kInf;
  nlohmann::json rows = nlohmann::json::array();

  const std::vector<int> panel_sizes{1, 9, 25, 100};
  std::vector<double> freq(panel_sizes.size());
  std::vector<double> freq_se(panel_sizes.size());
  for (std::size_t i = 0; i < panel_sizes.size(); ++i) {
    PanelSpec panel;
    panel.panelists = panel_sizes[i];
    panel.link = link;
    int ones = 0;
    for (int trial = 0; trial < trials; ++trial) {
      ones += panel_vote(panel, x, 0.0, rng);
    }
    freq[i] = static_cast<double>(ones) / trials;
    freq_se[i] = std::sqrt(freq[i] * (1.0 - freq[i]) / trials);
    const double exact =
        exact_binomial_tail_above(panel_sizes[i], p_single, panel_sizes[i] / 2);
    const double gap = std::fabs(freq[i] - exact);
    const double margin = kSigmaSlack * std::max(freq_se[i], 1e-4) - gap;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) pass = false;
    rows.push_back({{"P", panel_sizes[i]}, {"empirical", freq[i]}, {"exact", exact}});
  }
  // Sharpening: P(o = 1) non-decreasing in P.
  for (std::size_t i = 0; i + 1 < panel_sizes.size(); ++i) {
    const double slack =
        kSigmaSlack * std::sqrt(freq_se[i] * freq_se[i] +
                                freq_se[i + 1] * freq_se[i + 1]);
    const double margin = freq[i + 1] - freq[i] + slack;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) pass = false;
  }

  // Hoeffding envelope on the majority-vote error at odd P.
  nlohmann::json hoeffding = nlohmann::json::array();
  for (int P : {1, 9, 25, 101}) {
    PanelSpec panel;
    panel.panelists = P;
    panel.link = link;
    int zeros = 0;
    for (int trial = 0; trial < trials; ++trial) {
      zeros += 1 - panel_vote(panel, x, 0.0, rng);
    }
    const double err = static_cast<double>(zeros) / trials;
    const double se = std::sqrt(err * (1.0 - err) / trials);
    const double envelope = std::exp(-2.0 * delta * delta * P);
    const double margin = envelope + kSigmaSlack * std::max(se, 1e-4) - err;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) pass = false;
    hoeffding.push_back({{"P", P}, {"error", err}, {"envelope", envelope}});
  }

  report.pass = pass;
  report.measured = worst_margin;
  report.bound = 0.0;
  report.tolerance = kSigmaSlack;
  report.samples = static_cast<long>(trials) * 8;
  report.data["sharpening"] = rows;
  report.data["hoeffding"] = hoeffding;
  report.details = "panel accuracy vs exact binomial tails and Hoeffding decay";
  return report;
}

CheckReport check_ledgers(std::uint64_t seed) {
  CheckReport report;
  report.name = "ledgers";
  report.seed = seed;
  bool pass = true;
  std::string failure;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok && failure.empty()) failure = what;
    pass = pass && ok;
  };

  const int d = 20;
  RunConfig base;
  base.env = make_analytic_env(d, 4, static_cast<double>(d), 0.1);
  base.policy = flat_policy(d);
  base.agents = 5;
  base.mu = 0.05;
  base.alpha = AlphaSchedule{AlphaMode::Constant, 0.05, 1.0};
  base.panel.panelists = 5;
  base.panel.link = LinkFunction{LinkKind::Linear, 1.0, 0.0};
  base.panel.pairs = 1;
  base.panel.batch_size = 2;
  base.iterations = 6;
  base.update = UpdateMode::PlainSgd;
  base.seed = seed;

  // Par, binary: d + K bits per iteration, 2NDK trajectories per iteration,
  // exact aggregation identity with all blocks active.
  RunConfig par = base;
  const RunTrace par_trace = run(par);
  for (const auto& rec : par_trace.records) {
    expect(rec.bits == d + par.agents, "par bits != d + K");
    expect(rec.traj_optimizer ==
               2ll * par.panel.pairs * par.panel.batch_size * par.agents * rec.t,
           "par cumulative trajectories != 2NDKt");
    expect(rec.g_sqnorm == rec.active_mass, "aggregation identity");
    bool all_votes = true;
    for (int v : rec.feedback) all_votes = all_votes && v != 0;
    expect(all_votes, "odd N produced a zero vote");
    expect(rec.g_sqnorm == static_cast<double>(d),
           "full-participation |g|^2 != d");
  }
  expect(par_trace.ledger.traj_optimizer ==
             2ll * par.panel.pairs * par.panel.batch_size * par.agents *
                 par.iterations,
         "par ledger M != 2NDKT");
  expect(par_trace.ledger.agent_memory_scalars == d + d / par.agents,
         "par agent storage != d + d/K");

  // FedAvg, binary: Kd + K bits per iteration, agents store 2d scalars.
  RunConfig fed = base;
  fed.algorithm = Algorithm::FedAvg;
  const RunTrace fed_trace = run(fed);
  for (const auto& rec : fed_trace.records) {
    expect(rec.bits == static_cast<std::int64_t>(fed.agents) * d + fed.agents,
           "fedavg bits != Kd + K");
  }
  expect(fed_trace.ledger.agent_memory_scalars == 2ll * d,
         "fedavg agent storage != 2d");

  // Perturbation traffic ratio at K = 5 and the 40% storage reduction.
  const std::int64_t par_pert = par_trace.records[0].bits - par.agents;
  const std::int64_t fed_pert = fed_trace.records[0].bits - fed.agents;
  expect(fed_pert == par.agents * par_pert, "perturbation traffic ratio != K");
  const double storage_ratio =
      static_cast<double>(par_trace.ledger.agent_memory_scalars) /
      static_cast<double>(fed_trace.ledger.agent_memory_scalars);
  expect(storage_ratio == 0.6, "storage ratio at K=5 != 0.6");

  // Gaussian perturbations ship doubles: 64d + K bits.
  RunConfig gaussian = base;
  gaussian.perturbation = PerturbationKind::Gaussian;
  gaussian.iterations = 3;
  const RunTrace gaussian_trace = run(gaussian);
  for (const auto& rec : gaussian_trace.records) {
    expect(rec.bits == 64ll * d + gaussian.agents, "gaussian bits != 64d + K");
  }

  // Accept-reject mode: the server panel is ledgered separately and the
  // optimizer-path count is unchanged.
  RunConfig ara = base;
  ara.update = UpdateMode::AcceptRejectAdam;
  ara.iterations = 5;
  const RunTrace ara_trace = run(ara);
  expect(ara_trace.ledger.traj_server_panel ==
             2ll * ara.panel.pairs * ara.panel.batch_size * ara.iterations,
         "server panel trajectories != 2NDT");
  expect(ara_trace.ledger.traj_optimizer ==
             2ll * ara.panel.pairs * ara.panel.batch_size * ara.agents *
                 ara.iterations,
         "accept-reject optimizer ledger != 2NDKT");
  expect(ara_trace.ledger.traj_eval ==
             static_cast<std::int64_t>(ara.eval_episodes) * (ara.iterations + 1),
         "eval ledger != 20 (T+1)");

  // Even N: feedback needs a second bit and a warning is raised.
  RunConfig even = base;
  even.panel.pairs = 2;
  even.iterations = 2;
  const RunTrace even_trace = run(even);
  expect(even_trace.records[0].bits == d + 2ll * even.agents,
         "even-N feedback bits != 2 per agent");
  expect(!even_trace.warnings.empty(), "even-N warning missing");

  report.pass = pass;
  report.measured = pass ? 0.0 : 1.0;
  report.bound = 0.0;
  report.tolerance = 0.0;
  report.samples = static_cast<long>(par_trace.records.size() +
                                     fed_trace.records.size());
  report.details = pass ? "all ledgers exact" : failure;
  return report;
}

CheckReport check_convergence_trend(std::uint64_t seed, int n_seeds,
                                    int iterations) {
  CheckReport report;
  report.name = "convergence-trend";
  report.seed = seed;

  const int early_T = 125;
  std::vector<double> early(n_seeds), late(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    RunConfig cfg = theory_mode_config(64, 4, iterations);
    cfg.seed = seed + 1 + s;
    const RunTrace trace = run(cfg);
    double num = 0.0, den = 0.0;
    for (const auto& rec : trace.records) {
      num += rec.alpha * rec.grad_blocksum;
      den += rec.alpha;
      if (rec.t == early_T) {
        early[s] = num / den;
      }
    }
    late[s] = num / den;
  }
  const double early_mean = mean_of(early);
  const double late_mean = mean_of(late);
  report.measured = late_mean / early_mean;
  report.bound = 0.5;
  report.tolerance = 0.0;
  report.pass = report.measured < report.bound;
  report.samples = n_seeds;
  report.data["weighted_norm_at_125"] = early_mean;
  report.data["weighted_norm_at_T"] = late_mean;
  report.details = "alpha-weighted average block-sum gradient norm ratio";
  return report;
}

CheckReport check_k_independence(std::uint64_t seed, int n_seeds) {
  CheckReport report;
  report.name = "k-independence";
  report.seed = seed;

  // Mid-climb budget: every K is still ascending, so the K-free drift term
  // dominates and seed variance stays healthy. The smaller theory constant
  // keeps the (log T)-shaped diffusion term, which does depend on K, well
  // below the seed noise.
  const long budget = 800;  // M = 2NDKT
  const std::vector<int> ks{1, 2, 4, 8};
  std::vector<std::vector<double>> finals(ks.size());
  nlohmann::json rows = nlohmann::json::array();
  bool pass = true;

  for (std::size_t i = 0; i < ks.size(); ++i) {
    const int K = ks[i];
    const int T = static_cast<int>(budget / (2 * K));
    for (int s = 0; s < n_seeds; ++s) {
      RunConfig cfg = theory_mode_config(64, K, T, 0.5);
      cfg.seed = seed + 1 + s;
      const RunTrace trace = run(cfg);
      finals[i].push_back(trace.final_value_mean);
      if (trace.ledger.traj_optimizer != budget) pass = false;
    }
    rows.push_back({{"K", K},
                    {"T", T},
                    {"final_mean", mean_of(finals[i])},
                    {"final_se", standard_error(finals[i])}});
  }

  double worst_z = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::size_t j = i + 1; j < ks.size(); ++j) {
      worst_z = std::max(worst_z, overlap_z(finals[i], finals[j]));
    }
  }
  pass = pass && worst_z <= kEqualitySlack;

  report.pass = pass;
  report.measured = worst_z;
  report.bound = kEqualitySlack;
  report.tolerance = 0.0;
  report.samples = static_cast<long>(ks.size()) * n_seeds;
  report.data["per_k"] = rows;
  report.details = "worst pairwise |mean gap| / pooled SE at fixed M";
  return report;
}

namespace {

struct EnvCase {
  std::string name;
  RunConfig cfg;
};

// Desk-scale study environments shared by the comparison checks. K = 5.
std::vector<EnvCase> study_env_cases(std::uint64_t seed) {
  std::vector<EnvCase> cases;

  {
    RunConfig cfg;
    const int d = 25;
    cfg.env = make_analytic_env(d, 4, static_cast<double>(d), 0.0);
    cfg.policy = PolicySpec{PolicyKind::Linear, 4, 5, {}, ActionMode::Deterministic, 0.0};
    cfg.agents = 5;
    cfg.mu = 0.05;
    cfg.alpha = AlphaSchedule{AlphaMode::Constant, 0.02, 1.0};
    cfg.panel = exact_sign_panel();
    cfg.iterations = 300;
    cfg.update = UpdateMode::PlainSgd;
    cfg.seed = seed;
    cases.push_back({"analytic", cfg});
  }
  {
    // Initial-state randomness is the only noise; D = 8 keeps the batch
    // means informative for block-level perturbations.
    RunConfig cfg;
    cfg.env = make_linear_control_env(4, 2, 10, 0.0);
    cfg.policy = PolicySpec{PolicyKind::Linear, 4, 2, {}, ActionMode::Deterministic, 0.0};
    cfg.agents = 5;
    cfg.mu = 0.3;
    cfg.alpha = AlphaSchedule{AlphaMode::Constant, 0.01, 1.0};
    cfg.panel = exact_sign_panel();
    cfg.panel.batch_size = 8;
    cfg.iterations = 200;
    cfg.update = UpdateMode::PlainSgd;
    cfg.seed = seed;
    cases.push_back({"linear-control", cfg});
  }
  {
    // Exploration noise smooths the argmax landscape; the short race to a
    // two-step goal compares the algorithms before both saturate.
    RunConfig cfg;
    cfg.env = make_gridworld_env(4, 6, 2, 2, 2, 4, 0.0);
    cfg.policy = PolicySpec{PolicyKind::Linear, 2, 4, {}, ActionMode::GaussianExploration, 0.4};
    cfg.agents = 5;
    cfg.mu = 2.0;
    cfg.alpha = AlphaSchedule{AlphaMode::Constant, 0.1, 1.0};
    cfg.panel = exact_sign_panel();
    cfg.panel.batch_size = 8;
    cfg.iterations = 10;
    cfg.update = UpdateMode::PlainSgd;
    cfg.seed = seed;
    cases.push_back({"gridworld", cfg});
  }
  return cases;
}

}  // namespace

CheckReport check_par_vs_fedavg(std::uint64_t seed, int n_seeds) {
  CheckReport report;
  report.name = "par-vs-fedavg";
  report.seed = seed;

  bool pass = true;
  double worst_t = kInf;
  nlohmann::json rows = nlohmann::json::array();

  for (const auto& env_case : study_env_cases(seed)) {
    std::vector<double> diffs(n_seeds);
    std::vector<double> par_finals(n_seeds), fed_finals(n_seeds);
    for (int s = 0; s < n_seeds; ++s) {
      RunConfig par = env_case.cfg;
      par.algorithm = Algorithm::Par;
      par.seed = seed + 1 + s;
      RunConfig fed = par;
      fed.algorithm = Algorithm::FedAvg;
      par_finals[s] = run(par).final_value_mean;
      fed_finals[s] = run(fed).final_value_mean;
      diffs[s] = par_finals[s] - fed_finals[s];
    }
    const double t_stat = paired_t_stat(diffs);
    worst_t = std::min(worst_t, t_stat);
    if (t_stat < kOneSided95) pass = false;
    rows.push_back({{"env", env_case.name},
                    {"par_mean", mean_of(par_finals)},
                    {"fedavg_mean", mean_of(fed_finals)},
                    {"diff_mean", mean_of(diffs)},
                    {"t", t_stat}});
  }

  // Degenerate K = 1 equivalence: identical streams make the two algorithms
  // the same algorithm, bit for bit.
  {
    RunConfig cfg = study_env_cases(seed)[0].cfg;
    cfg.agents = 1;
    cfg.iterations = 20;
    cfg.seed = seed + 99;
    RunConfig fed = cfg;
    fed.algorithm = Algorithm::FedAvg;
    const std::string par_csv = trace_csv_string(run(cfg));
    const std::string fed_csv = trace_csv_string(run(fed));
    if (par_csv != fed_csv) pass = false;
    report.data["k1_bit_identical"] = par_csv == fed_csv;
  }

  report.pass = pass;
  report.measured = worst_t;
  report.bound = kOneSided95;
  report.tolerance = 0.0;
  report.samples = 3L * n_seeds * 2;
  report.data["per_env"] = rows;
  report.details = "worst one-sided paired t statistic, Par minus FedAvg";
  return report;
}

CheckReport check_binary_vs_gaussian(std::uint64_t seed, int n_seeds) {
  CheckReport report;
  report.name = "binary-vs-gaussian";
  report.seed = seed;

  bool pass = true;
  double worst_z = 0.0;
  nlohmann::json rows = nlohmann::json::array();

  for (const auto& env_case : study_env_cases(seed)) {
    std::vector<double> binary_finals(n_seeds), gaussian_finals(n_seeds);
    double binary_gsq_dev = 0.0;
    MeanVar gaussian_gsq;
    int d_param = 0;
    for (int s = 0; s < n_seeds; ++s) {
      RunConfig binary_cfg = env_case.cfg;
      binary_cfg.agents = 1;
      binary_cfg.seed = seed + 1 + s;
      RunConfig gaussian_cfg = binary_cfg;
      gaussian_cfg.perturbation = PerturbationKind::Gaussian;
      const RunTrace bt = run(binary_cfg);
      const RunTrace gt = run(gaussian_cfg);
      binary_finals[s] = bt.final_value_mean;
      gaussian_finals[s] = gt.final_value_mean;
      d_param = param_count(binary_cfg.policy);
      for (const auto& rec : bt.records) {
        binary_gsq_dev =
            std::max(binary_gsq_dev, std::fabs(rec.g_sqnorm - d_param));
      }
      for (const auto& rec : gt.records) gaussian_gsq.add(rec.g_sqnorm);
    }
    const double z = overlap_z(binary_finals, gaussian_finals);
    worst_z = std::max(worst_z, z);
    if (z > kEqualitySlack) pass = false;
    // Binary |g|^2 is exactly d; Gaussian concentrates around d.
    if (binary_gsq_dev != 0.0) pass = false;
    const double gsq_z =
        std::fabs(gaussian_gsq.mean - d_param) / std::max(gaussian_gsq.se(), 1e-12);
    if (gsq_z > kSigmaSlack) pass = false;
    rows.push_back({{"env", env_case.name},
                    {"binary_mean", mean_of(binary_finals)},
                    {"gaussian_mean", mean_of(gaussian_finals)},
                    {"overlap_z", z},
                    {"gaussian_gsq_mean", gaussian_gsq.mean}});
  }

  report.pass = pass;
  report.measured = worst_z;
  report.bound = kEqualitySlack;
  report.tolerance = 0.0;
  report.samples = 3L * n_seeds * 2;
  report.data["per_env"] = rows;
  report.details = "worst |mean gap| / pooled SE, binary vs gaussian at K=1";
  return report;
}

CheckReport check_d_tradeoff(std::uint64_t seed, int n_seeds) {
  CheckReport report;
  report.name = "d-tradeoff";
  report.seed = seed;

  const int dim = 16;
  // High noise drowns single-trajectory comparisons (votes near coin flips,
  // D=1 stalls); batching recovers the signal at the cost of iterations. The
  // low-noise budget is long enough for both batch sizes to converge to the
  // same floor.
  const int base_T = 480;      // M = 960 at D = 1, high-noise branch
  const int low_base_T = 960;  // M = 1920, low-noise branch
  const std::vector<int> d_values{1, 2, 4, 8};
  const double high_noise = 0.2;
  const double low_noise = 0.005;

  auto tradeoff_config = [&](double noise, int D, int t1, std::uint64_t run_seed) {
    RunConfig cfg;
    cfg.env = make_analytic_env(dim, 4, static_cast<double>(dim), noise);
    cfg.policy = flat_policy(dim);
    cfg.agents = 1;
    cfg.mu = 0.05;
    cfg.alpha = AlphaSchedule{AlphaMode::Constant, 0.05, 1.0};
    cfg.panel = exact_sign_panel();
    cfg.panel.batch_size = D;
    cfg.iterations = t1 / D;
    cfg.update = UpdateMode::PlainSgd;
    cfg.seed = run_seed;
    return cfg;
  };

  bool pass = true;
  nlohmann::json data;

  // Histogram overlap per D on the high-noise environment: non-increasing
  // statistically over seeds.
  std::vector<std::vector<double>> overlaps(d_values.size());
  for (int s = 0; s < n_seeds; ++s) {
    const RunConfig cfg = tradeoff_config(high_noise, 1, base_T, seed + 1 + s);
    RngStream init_rng(cfg.seed, StreamRole::Init);
    const PolicyInstance base = init_policy(cfg.policy, init_rng);
    RngStream perturb_rng(cfg.seed, StreamRole::Check, 10);
    const PerturbationVector v = sample_rademacher(dim, perturb_rng);
    ParamVector shifted = base.params;
    axpy(cfg.mu, v.values, shifted);
    const PolicyInstance perturbed{cfg.policy, shifted};
    for (std::size_t i = 0; i < d_values.size(); ++i) {
      RngStream hist_rng(cfg.seed, StreamRole::Check, 11, d_values[i]);
      const auto hist = separation_histogram(cfg.env, base, perturbed,
                                             d_values[i], 100, hist_rng);
      overlaps[i].push_back(hist.overlap);
    }
  }
  nlohmann::json overlap_rows = nlohmann::json::array();
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    overlap_rows.push_back({{"D", d_values[i]}, {"overlap_mean", mean_of(overlaps[i])}});
  }
  for (std::size_t i = 0; i + 1 < d_values.size(); ++i) {
    std::vector<double> diffs(n_seeds);
    for (int s = 0; s < n_seeds; ++s) diffs[s] = overlaps[i + 1][s] - overlaps[i][s];
    // One-sided: an increase must not be significant.
    if (paired_t_stat(diffs) > kOneSided95) pass = false;
  }
  data["overlap"] = overlap_rows;

  // Final values at fixed M on the high-noise environment.
  std::vector<std::vector<double>> finals_high(d_values.size());
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    for (int s = 0; s < n_seeds; ++s) {
      const RunConfig cfg = tradeoff_config(high_noise, d_values[i], base_T, seed + 1 + s);
      finals_high[i].push_back(run(cfg).final_value_mean);
    }
  }
  nlohmann::json value_rows = nlohmann::json::array();
  for (std::size_t i = 0; i < d_values.size(); ++i) {
    value_rows.push_back({{"D", d_values[i]},
                          {"final_mean", mean_of(finals_high[i])},
                          {"final_se", standard_error(finals_high[i])}});
  }
  data["high_noise_values"] = value_rows;
  std::vector<double> d4_vs_d1(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    d4_vs_d1[s] = finals_high[2][s] - finals_high[0][s];
  }
  const double dominance_t = paired_t_stat(d4_vs_d1);
  if (dominance_t < kOneSided95) pass = false;
  data["d4_vs_d1_t"] = dominance_t;

  // Low-noise environment: D = 1 matches D = 4 within error.
  std::vector<double> low_d1(n_seeds), low_d4(n_seeds);
  for (int s = 0; s < n_seeds; ++s) {
    low_d1[s] = run(tradeoff_config(low_noise, 1, low_base_T, seed + 1 + s)).final_value_mean;
    low_d4[s] = run(tradeoff_config(low_noise, 4, low_base_T, seed + 1 + s)).final_value_mean;
  }
  const double low_z = overlap_z(low_d1, low_d4);
  if (low_z > kEqualitySlack) pass = false;
  data["low_noise_overlap_z"] = low_z;
  data["low_noise_d1_mean"] = mean_of(low_d1);
  data["low_noise_d4_mean"] = mean_of(low_d4);

  report.pass = pass;
  report.measured = dominance_t;
  report.bound = kOneSided95;
  report.tolerance = 0.0;
  report.samples = static_cast<long>(d_values.size() + 2) * n_seeds;
  report.data = data;
  report.details = "D=4 vs D=1 paired t at fixed M (high noise)";
  return report;
}

namespace {

struct NamedCheck {
  const char* name;
  CheckReport (*fn)(std::uint64_t);
};

const NamedCheck kChecks[] = {
    {"khintchine", [](std::uint64_t s) { return check_khintchine(s); }},
    {"norm-axioms", [](std::uint64_t s) { return check_norm_axioms(s); }},
    {"sign-alignment", [](std::uint64_t s) { return check_sign_alignment(s); }},
    {"panel-sharpening", [](std::uint64_t s) { return check_panel_sharpening(s); }},
    {"ledgers", [](std::uint64_t s) { return check_ledgers(s); }},
    {"convergence-trend", [](std::uint64_t s) { return check_convergence_trend(s); }},
    {"k-independence", [](std::uint64_t s) { return check_k_independence(s); }},
    {"par-vs-fedavg", [](std::uint64_t s) { return check_par_vs_fedavg(s); }},
    {"binary-vs-gaussian", [](std::uint64_t s) { return check_binary_vs_gaussian(s); }},
    {"d-tradeoff", [](std::uint64_t s) { return check_d_tradeoff(s); }},
};

}  // namespace

std::vector<CheckReport> run_all_checks(std::uint64_t seed) {
  std::vector<CheckReport> reports;
  for (const auto& check : kChecks) {
    reports.push_back(check.fn(seed));
  }
  return reports;
}

std::vector<std::string> check_names() {
  std::vector<std::string> names;
  for (const auto& check : kChecks) names.emplace_back(check.name);
  return names;
}

CheckReport run_named_check(const std::string& name, std::uint64_t seed) {
  for (const auto& check : kChecks) {
    if (name == check.name) return check.fn(seed);
  }
  throw std::invalid_argument("unknown check '" + name + "'");
}

nlohmann::json report_to_json(const CheckReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["status"] = report.pass ? "pass" : "fail";
  j["measured"] = report.measured;
  j["bound"] = report.bound;
  j["tolerance"] = report.tolerance;
  j["samples"] = report.samples;
  j["seed"] = report.seed;
  j["details"] = report.details;
  if (!report.data.is_null()) j["data"] = report.data;
  return j;
}

std::string report_table(const std::vector<CheckReport>& reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-22s %-6s %14s %14s %10s\n", "check",
                "status", "measured", "bound", "samples");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-22s %-6s %14.6g %14.6g %10ld\n",
                  r.name.c_str(), r.pass ? "pass" : "FAIL", r.measured,
                  r.bound, r.samples);
    out += line;
  }
  return out;
}

}  // namespace fedzero
