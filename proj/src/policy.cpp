#include "fedzero/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace fedzero {

namespace {

// Layer widths including input and output.
std::vector<int> layer_widths(const PolicySpec& spec) {
  std::vector<int> widths{spec.input_dim};
  if (spec.kind == PolicyKind::Mlp) {
    for (int h : spec.hidden) widths.push_back(h);
  }
  widths.push_back(spec.output_dim);
  return widths;
}

void check_spec(const PolicySpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw std::invalid_argument("policy spec: dimensions must be positive");
  }
  if (spec.kind == PolicyKind::Mlp) {
    for (int h : spec.hidden) {
      if (h < 1) throw std::invalid_argument("policy spec: hidden widths must be positive");
    }
  }
  if (spec.action_noise < 0.0) {
    throw std::invalid_argument("policy spec: action noise must be nonnegative");
  }
}

}  // namespace

int param_count(const PolicySpec& spec) {
  check_spec(spec);
  const auto widths = layer_widths(spec);
  int count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    count += widths[l] * widths[l + 1] + widths[l + 1];
  }
  return count;
}

PolicyInstance make_policy(const PolicySpec& spec, ParamVector params) {
  if (static_cast<int>(params.size()) != param_count(spec)) {
    throw std::invalid_argument("make_policy: parameter length mismatch");
  }
  return PolicyInstance{spec, std::move(params)};
}

PolicyInstance init_policy(const PolicySpec& spec, RngStream& rng) {
  const auto widths = layer_widths(spec);
  ParamVector params;
  params.reserve(param_count(spec));
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (int i = 0; i < widths[l] * widths[l + 1]; ++i) {
      params.push_back(scale * rng.normal());
    }
    for (int i = 0; i < widths[l + 1]; ++i) {
      params.push_back(0.0);
    }
  }
  return PolicyInstance{spec, std::move(params)};
}

ParamVector get_params(const PolicyInstance& policy) { return policy.params; }

PolicyInstance set_params(const PolicyInstance& policy, ParamVector params) {
  return make_policy(policy.spec, std::move(params));
}

std::vector<double> act(const PolicyInstance& policy, int h,
                        const std::vector<double>& state, RngStream& rng) {
  (void)h;
  const auto& spec = policy.spec;
  if (static_cast<int>(state.size()) != spec.input_dim) {
    throw std::invalid_argument("act: state dimension mismatch");
  }
  const auto widths = layer_widths(spec);
  std::vector<double> activation = state;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    std::vector<double> next(out, 0.0);
    for (int row = 0; row < out; ++row) {
      double acc = 0.0;
      const double* w = policy.params.data() + offset + static_cast<std::size_t>(row) * in;
      for (int col = 0; col < in; ++col) acc += w[col] * activation[col];
      next[row] = acc;
    }
    offset += static_cast<std::size_t>(in) * out;
    for (int row = 0; row < out; ++row) next[row] += policy.params[offset + row];
    offset += out;
    const bool last = (l + 2 == widths.size());
    if (!last) {
      for (double& x : next) x = std::tanh(x);
    }
    activation = std::move(next);
  }
  if (spec.action_mode == ActionMode::GaussianExploration) {
    for (double& x : activation) x += spec.action_noise * rng.normal();
  }
  return activation;
}

}  // namespace fedzero
