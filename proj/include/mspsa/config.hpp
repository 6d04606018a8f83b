#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mspsa/model.hpp"
#include "mspsa/policies.hpp"

namespace mspsa {

/// Per-policy configuration. Gains apply to the MSPSA policy; when `gamma`
/// is absent it is derived from the configured mixture-eigenvalue lower
/// bound as gamma = 1 / (8 * sigma_lb).
struct PolicyConfig {
    std::string name;   // mspsa | greedy_lse | oracle | constant
    std::string label;  // output label; defaults to name
    MspsaGains gains;
    PerturbationLaw perturbation = PerturbationLaw::Rademacher;
    std::optional<double> sigma_lb;
    std::optional<Vector> constant_input;
};

/// Random-instance generator: per state a symmetric matrix with eigenvalues
/// drawn uniformly from [eig_lo, eig_hi] and an offset placing that state's
/// single-state optimum strictly inside the feasible box. Resamples until the
/// mixture optima of every previous state also land inside the box.
struct GeneratorSpec {
    int dim = 1;  // m = n for generated instances
    double eig_lo = -1.5;
    double eig_hi = -0.5;
    double noise_sigma = 0.5;
    std::uint64_t seed = 1;
};

struct ExperimentConfig {
    JumpAffineModel model;
    FeasibleBox box;
    Vector initial_input;
    long horizon = 1;
    long replications = 1;
    std::uint64_t seed = 0;
    std::vector<long> checkpoints;     // strictly increasing, within [1, horizon]
    long slope_window_lo = 0;          // defaults to horizon/10
    long slope_window_hi = 0;          // defaults to horizon
    std::string output_dir = "out";
    int threads = 0;                   // 0 = hardware concurrency
    double rank_tol = kDefaultRankTol;
    std::vector<PolicyConfig> policies;
    std::optional<GeneratorSpec> generator;  // retained for provenance
};

/// Parse, apply defaults, materialize generated states, and validate.
/// Throws ConfigError with a field-precise message on any problem.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

/// Serialize back to the same schema (explicit states, defaults filled);
/// load(emit(config)) reproduces the config exactly.
std::string emit_config(const ExperimentConfig& config);

/// FNV-1a hash of the canonical serialized form, for provenance.
std::string config_hash(const ExperimentConfig& config);

/// 30 log-spaced unique checkpoints over [1, horizon].
std::vector<long> default_checkpoints(long horizon);

/// Instantiate a policy for one replication.
std::unique_ptr<Policy> make_policy(const PolicyConfig& policy, const ExperimentConfig& config);

}  // namespace mspsa
