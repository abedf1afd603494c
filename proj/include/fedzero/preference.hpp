#pragma once

#include <cstdint>
#include <vector>

#include "fedzero/env.hpp"
#include "fedzero/policy.hpp"
#include "fedzero/rng.hpp"

namespace fedzero {

enum class LinkKind { Linear, Logistic, Step };

// Maps a batch-mean reward difference to the probability that the second
// batch is preferred. All kinds satisfy sigma(0) = 1/2, monotonicity and
// sigma(x) + sigma(-x) = 1.
struct LinkFunction {
  LinkKind kind = LinkKind::Linear;
  double slope = 0.01;  // linear: clip(slope * x + 0.5, 0, 1)
  double beta = 1.0;    // logistic: 1 / (1 + exp(-beta * x))
};

double link_eval(const LinkFunction& link, double x);

struct PanelSpec {
  int panelists = 100;       // P
  LinkFunction link;
  int pairs = 1;             // N, batch pairs per oracle call
  int batch_size = 1;        // D, trajectories per batch
};

void validate_panel(const PanelSpec& panel);

// One panelist's bit: Bernoulli(link(r1 - r0)); 1 prefers the second batch.
int panelist_vote(const LinkFunction& link, double r1, double r0,
                  RngStream& rng);

// Strict majority over P panelists; ties (even P) give 0.
int panel_vote(const PanelSpec& panel, double r1, double r0, RngStream& rng);

struct OracleResult {
  int vote = 0;                 // in {-1, 0, +1}
  std::int64_t trajectories = 0;  // always 2 * N * D
};

// N rounds of fresh batch pairs (D rollouts from each policy), one panel bit
// per round, then sign(sum(o_n - 1/2)). +1 means the perturbed policy is
// preferred.
OracleResult preference_oracle(const PanelSpec& panel,
                               const PolicyInstance& base,
                               const PolicyInstance& perturbed,
                               const EnvSpec& env, RngStream& rng);

// Fraction of shared mass between two equal-bin histograms over the pooled
// range. Degenerate pooled range (all values equal) gives 1.
double histogram_overlap(const std::vector<double>& a,
                         const std::vector<double>& b, int bins = 30);

struct SeparationHistogram {
  std::vector<double> base_means;
  std::vector<double> perturbed_means;
  double overlap = 0.0;
};

// B batch means per policy at batch size D, plus their overlap coefficient.
SeparationHistogram separation_histogram(const EnvSpec& env,
                                         const PolicyInstance& base,
                                         const PolicyInstance& perturbed,
                                         int batch_size, int batches,
                                         RngStream& rng);

}  // namespace fedzero
