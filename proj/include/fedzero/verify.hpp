#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedzero/federate.hpp"

namespace fedzero {

// One verification outcome. `measured` is the headline statistic compared
// against `bound` with `tolerance` slack; sub-results live in `data`.
// Reports are reproducible from (name, seed).
struct CheckReport {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
  std::string details;
  nlohmann::json data;
};

// Statistical tolerance policy, fixed globally so reruns are comparable:
// 4 sigma for Monte-Carlo bound checks, 2x pooled standard error for
// equality-style claims, one-sided 95% (z = 1.645) for dominance claims.
inline constexpr double kSigmaSlack = 4.0;
inline constexpr double kEqualitySlack = 2.0;
inline constexpr double kOneSided95 = 1.6449;

// E|<v,a>| sandwich (1/sqrt(3))|a| <= E|<v,a>| <= |a| for Rademacher v:
// exact enumeration of all sign patterns at d <= 12, Monte-Carlo with 4-sigma
// slack at d in {64, 512}.
CheckReport check_khintchine(std::uint64_t seed);

// Norm axioms of the block-sum norm plus the |v|_2 <= |v|_P <= sqrt(K)|v|_2
// sandwich on random instances.
CheckReport check_norm_axioms(std::uint64_t seed, int trials = 10000);

// Alignment lower bound of the exact-sign inner product on the analytic
// environment over a 5x5 (theta, mu) grid.
CheckReport check_sign_alignment(std::uint64_t seed,
                                   int perturbations = 100000);

// Panel link sharpening in P and the Hoeffding envelope on the majority-vote
// error, against exact binomial tails.
CheckReport check_panel_sharpening(std::uint64_t seed, int trials = 10000);

// Exact bit/trajectory/memory ledgers on small Par and FedAvg runs.
CheckReport check_ledgers(std::uint64_t seed);

// Decay of the alpha-weighted average block-sum gradient norm in theory mode
// on the noiseless analytic environment (d=64, K=4, T=2000).
CheckReport check_convergence_trend(std::uint64_t seed, int n_seeds = 20,
                                    int iterations = 2000);

// Equal-sample-complexity sweep over K in {1,2,4,8}: final values overlap
// within 2x pooled standard error.
CheckReport check_k_independence(std::uint64_t seed, int n_seeds = 20);

// Par vs FedAvg at K=5 with matched budgets and seeds on each built-in
// environment, one-sided 95%.
CheckReport check_par_vs_fedavg(std::uint64_t seed, int n_seeds = 20);

// Binary vs Gaussian perturbation at K=1 with matched budgets: overlap
// within 2x pooled standard error, plus the |g_hat|^2 statistics.
CheckReport check_binary_vs_gaussian(std::uint64_t seed, int n_seeds = 20);

// Batch-size tradeoff at fixed sample complexity: histogram overlap
// non-increasing in D; D=4 beats D=1 on the high-noise environment; D=1
// matches D=4 on the low-noise one.
CheckReport check_d_tradeoff(std::uint64_t seed, int n_seeds = 20);

std::vector<CheckReport> run_all_checks(std::uint64_t seed);

// Registered check names, in run_all_checks order.
std::vector<std::string> check_names();

// Throws invalid_argument for unknown names.
CheckReport run_named_check(const std::string& name, std::uint64_t seed);

nlohmann::json report_to_json(const CheckReport& report);
std::string report_table(const std::vector<CheckReport>& reports);

}  // namespace fedzero
