#pragma once

#include <string>
#include <vector>

#include "mspsa/config.hpp"
#include "mspsa/metrics.hpp"
#include "mspsa/simulate.hpp"

namespace mspsa {

struct PolicySummary {
    std::string label;
    std::string policy_name;
    SlopeFit regret_slope;   // log-log slope of mean cumulative regret over the window
    SlopeFit est_mse_slope;  // log-log slope of mean per-period estimate error, last decade
    std::vector<SlopeFit> per_state_est_slope;  // vs revision count, last decade
    double final_mean_regret = 0.0;
    double final_mean_est_mse = 0.0;
    double final_mean_cum_input_mse = 0.0;
    std::string curves_csv;
    std::string est_by_update_csv;
};

struct ExperimentSummary {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<PolicySummary> policies;
    std::string summary_txt;
    std::string summary_json;
};

/// Full aggregated curves for one policy cell (kept in memory for callers
/// that evaluate criteria beyond the emitted CSVs).
struct PolicyCurves {
    std::string label;
    Aggregator::Result result;
};

struct ExperimentOutput {
    ExperimentSummary summary;
    std::vector<PolicyCurves> curves;
};

/// Run every configured policy over `replications` episodes each, aggregate
/// deterministically (merge order = replication index, independent of the
/// thread schedule), write per-policy CSVs plus summary.txt/summary.json
/// under the output directory, and return the summary with in-memory curves.
/// The MSPSA_OUT_DIR environment variable overrides config.output_dir.
/// On failure all files created by this call are removed.
ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Episode replay for the trace subcommand: runs replication `replication`
/// of the policy with the given label (empty = first policy).
Trajectory trace_replication(const ExperimentConfig& config, const std::string& label,
                             long replication);

/// Effective output directory (config value or MSPSA_OUT_DIR override).
std::string resolve_output_dir(const ExperimentConfig& config);

}  // namespace mspsa
