#pragma once

#include <string>

#include <json.hpp>

#include "fedzero/federate.hpp"

namespace fedzero {

// Resolved config as JSON; the same schema load_config accepts, so every
// output directory carries a re-runnable description of itself.
nlohmann::json config_to_json(const RunConfig& config);

// Fixed column order:
// t,value_mean,value_stderr,accepted,alpha,mu,bits,traj_optimizer,traj_eval,
// grad_l2,grad_blocksum. Cells without a defined value stay empty.
std::string trace_csv_string(const RunTrace& trace);

// Full sidecar: config echo, generator identity, ledger totals, final
// summary, warnings and checkpoint parameter blobs.
nlohmann::json run_json(const RunTrace& trace);

void write_text_file(const std::string& path, const std::string& content);
void write_trace_files(const RunTrace& trace, const std::string& dir);

}  // namespace fedzero
