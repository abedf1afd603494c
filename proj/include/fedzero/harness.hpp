#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedzero/federate.hpp"

namespace fedzero {

enum class StudyKind {
  SingleRun,
  KStudy,
  DStudy,
  PerturbationCompare,
  BaselineCompare,
  VerifyAll,
};

std::string study_kind_name(StudyKind kind);

struct ExperimentManifest {
  StudyKind study = StudyKind::SingleRun;
  RunConfig base;
  std::vector<int> sweep;             // K values (k-study) or D values (d-study)
  std::int64_t sample_budget = 0;     // fixed M = 2NDKT; 0 keeps base.iterations
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir;                // optional; CLI --out takes precedence
  int histogram_batches = 500;
  std::vector<int> histogram_batch_sizes{1, 4};
};

// Strict parse: unknown keys are errors naming the full key path; defaults
// follow the documented experimental setup (alpha 0.01, mu 0.05, P=100, N=1,
// accept-reject-adam).
ExperimentManifest load_config(const std::string& path);
ExperimentManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json manifest_to_json(const ExperimentManifest& manifest);

// Variant name -> concrete run config (seed still unset), in sweep order.
std::vector<std::pair<std::string, RunConfig>> study_variants(
    const ExperimentManifest& manifest);

struct StudyResult {
  int exit_code = 0;
  std::vector<std::string> errors;
};

// Executes every (variant x seed) run with a jobs-wide worker pool, writes
// <out>/<study>/<variant>/<seed>/{trace.csv,run.json}, the resolved
// manifest.json, summary.csv and curves.csv. Results are independent of the
// worker count.
StudyResult run_study(const ExperimentManifest& manifest,
                      const std::string& out_dir, int jobs);

// Long-format per-iteration aggregation across seeds; traces with unequal
// lengths are truncated to the common prefix and a warning is returned.
std::string emit_plotdata(
    const std::vector<std::pair<std::string, std::vector<RunTrace>>>& variants,
    std::vector<std::string>& warnings);

// Figure-style histogram study: batch means for the base policy vs a
// mu-perturbed copy at each configured batch size.
StudyResult run_histogram(const ExperimentManifest& manifest,
                          const std::string& out_dir);

}  // namespace fedzero
