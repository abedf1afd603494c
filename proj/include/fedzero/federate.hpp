#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedzero/core.hpp"
#include "fedzero/env.hpp"
#include "fedzero/perturb.hpp"
#include "fedzero/policy.hpp"
#include "fedzero/preference.hpp"

namespace fedzero {

inline constexpr const char* kVersion = "fedzero 1.0.0";

// Par: one shared perturbation, each agent evaluates its own block.
// FedAvg: each agent perturbs the full vector, server averages the signed
// perturbations.
enum class Algorithm { Par, FedAvg };

// PlainSgd is the analyzed update theta += alpha_t * g_hat; AcceptRejectAdam
// is the experimental pipeline (Adam step, norm clipping, server-panel
// acceptance, halving after three consecutive rejections).
enum class UpdateMode { PlainSgd, AcceptRejectAdam };

enum class AlphaMode { Constant, Theory };

struct AlphaSchedule {
  AlphaMode mode = AlphaMode::Constant;
  double value = 0.01;  // constant mode (initial value under halving)
  double c = 1.0;       // theory mode: alpha_t = c * sqrt(H / (d t))
};

// alpha_t = c * sqrt(H / (d * t)), t >= 1.
double lr_theory(int t, int horizon, int dim, double c);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;  // L2 cap on the post-Adam step
};

struct AdamState {
  ParamVector m;
  ParamVector v;
  long steps = 0;
};

// Bias-corrected Adam ascent step scaled by alpha and clipped to clip_norm.
// Moments are updated in place.
ParamVector adam_step(AdamState& state, const ParamVector& grad, double alpha,
                      const AdamConfig& cfg);

struct RunConfig {
  EnvSpec env;
  PolicySpec policy;
  Algorithm algorithm = Algorithm::Par;
  int agents = 1;  // K
  PartitionMode partition_mode = PartitionMode::Contiguous;
  bool reshuffle_each_iteration = false;
  PerturbationKind perturbation = PerturbationKind::Binary;
  double mu = 0.05;  // initial perturbation distance
  AlphaSchedule alpha;
  PanelSpec panel;
  int iterations = 100;  // T
  UpdateMode update = UpdateMode::AcceptRejectAdam;
  AdamConfig adam;
  int eval_episodes = 20;
  int checkpoint_every = 0;  // 0 = no checkpoints
  std::uint64_t seed = 1;
};

// Throws invalid_argument naming the offending field; returns non-fatal
// warnings (e.g. even N makes zero votes possible).
std::vector<std::string> validate_run_config(const RunConfig& config);

struct IterationRecord {
  int t = 0;
  double value_mean = 0.0;    // 20-episode estimate of theta_t (pre-update)
  double value_stderr = 0.0;
  int accepted = -1;          // -1 undefined (plain mode), else 0/1
  double alpha = 0.0;
  double mu = 0.0;
  std::int64_t bits = 0;            // communication this iteration
  std::int64_t traj_optimizer = 0;  // cumulative optimizer-path trajectories
  std::int64_t traj_eval = 0;       // cumulative evaluation trajectories
  double grad_l2 = 0.0;       // analytic env only (NaN otherwise)
  double grad_blocksum = 0.0;
  std::vector<int> feedback;  // O_{t,k}
  double g_sqnorm = 0.0;      // |g_hat|^2 before the learning-rate scaling
  double active_mass = 0.0;   // sum |v_k|^2 over nonzero votes (Par only, NaN otherwise)
};

struct Ledger {
  std::int64_t bits_total = 0;
  std::int64_t traj_optimizer = 0;
  std::int64_t traj_eval = 0;
  std::int64_t traj_server_panel = 0;
  std::int64_t server_memory_scalars = 0;
  std::int64_t agent_memory_scalars = 0;  // worst agent
};

struct RunTrace {
  RunConfig config;
  std::string generator_id;
  std::string version;
  std::vector<std::string> warnings;
  std::vector<IterationRecord> records;
  Ledger ledger;
  double final_value_mean = 0.0;   // theta_{T+1}
  double final_value_stderr = 0.0;
  ParamVector final_params;
  std::vector<std::pair<int, ParamVector>> checkpoints;
  bool aborted = false;
  std::string abort_reason;
};

struct RunState {
  ParamVector theta;
  Partition partition;
  AdamState adam;
  double alpha_current = 0.0;  // live value under halving
  double mu_current = 0.0;
  int reject_streak = 0;
  Ledger ledger;
};

RunState init_run_state(const RunConfig& config);

// One Par iteration: sample v_t, mask per agent, query the K local panels,
// aggregate g_hat = sum O_k (v o e_k), update by mode. The aggregation
// identity |g_hat|^2 = sum of active block masses is asserted exactly.
IterationRecord par_iteration(RunState& state, const RunConfig& config, int t);

// FedAvg baseline iteration: K independent full-dimension perturbations, the
// server averages the signed directions.
IterationRecord fedavg_iteration(RunState& state, const RunConfig& config,
                                 int t);

RunTrace run(const RunConfig& config);

// Draw an iteration index with probability proportional to alpha_t.
int sample_theta_index(const std::vector<IterationRecord>& records,
                       RngStream& rng);

}  // namespace fedzero
