#pragma once

#include <vector>

#include "fedzero/core.hpp"
#include "fedzero/rng.hpp"

namespace fedzero {

enum class PolicyKind { Linear, Mlp };
enum class ActionMode { Deterministic, GaussianExploration };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Linear;
  int input_dim = 0;
  int output_dim = 0;
  std::vector<int> hidden{64, 64};  // mlp only
  ActionMode action_mode = ActionMode::Deterministic;
  double action_noise = 0.0;  // sigma of per-coordinate exploration noise
};

// Exact flat parameter dimension, biases included.
// Linear: (input_dim + 1) * output_dim.
int param_count(const PolicySpec& spec);

// Immutable policy value: spec plus a flat parameter vector. Parameter
// layout is layer-major, weights then bias per layer, weights row-major with
// one row per output unit.
struct PolicyInstance {
  PolicySpec spec;
  ParamVector params;
};

PolicyInstance make_policy(const PolicySpec& spec, ParamVector params);

// Gaussian weights scaled by 1/sqrt(fan-in), zero biases.
PolicyInstance init_policy(const PolicySpec& spec, RngStream& rng);

ParamVector get_params(const PolicyInstance& policy);
PolicyInstance set_params(const PolicyInstance& policy, ParamVector params);

// Forward pass: tanh hidden activations, identity output. Gaussian
// exploration adds N(0, action_noise^2) per output coordinate. The step
// index h is part of the policy interface but unused by these stationary
// parameterizations.
std::vector<double> act(const PolicyInstance& policy, int h,
                        const std::vector<double>& state, RngStream& rng);

}  // namespace fedzero
