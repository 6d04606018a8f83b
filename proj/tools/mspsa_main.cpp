#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mspsa/harness.hpp"
#include "mspsa/oracle.hpp"
#include "mspsa/version.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<long> replications;
    std::optional<long> horizon;
};

mspsa::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& ov) {
    mspsa::ExperimentConfig config = mspsa::load_config(path);
    if (ov.seed) config.seed = *ov.seed;
    if (ov.out_dir) config.output_dir = *ov.out_dir;
    if (ov.replications) {
        if (*ov.replications < 1) throw mspsa::ConfigError("replications", "must be >= 1");
        config.replications = *ov.replications;
    }
    if (ov.horizon) {
        if (*ov.horizon < 1) throw mspsa::ConfigError("horizon", "must be >= 1");
        config.horizon = *ov.horizon;
        // derived defaults follow the overridden horizon
        config.checkpoints = mspsa::default_checkpoints(config.horizon);
        config.slope_window_lo = std::max<long>(1, config.horizon / 10);
        config.slope_window_hi = config.horizon;
    }
    return config;
}

void print_vector(const mspsa::Vector& v) {
    std::cout << "[";
    for (int j = 0; j < v.size(); ++j) {
        if (j > 0) std::cout << ", ";
        std::cout << mspsa::format_csv_double(v(j));
    }
    std::cout << "]";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online learning and optimization of Markov jump affine models"};
    app.set_version_flag("--version", std::string("mspsa ") + mspsa::kVersion);
    app.require_subcommand(1);

    Overrides ov;
    std::string config_path;
    std::string policy_label;
    std::string trace_out;
    long replication = 0;
    int state_1based = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment config file")->required();
        cmd->add_option("--seed", ov.seed, "override master seed");
        cmd->add_option("--out-dir", ov.out_dir, "override output directory");
        cmd->add_option("--replications", ov.replications, "override replication count");
        cmd->add_option("--horizon", ov.horizon, "override horizon T");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run the configured experiment");
    add_common(run_cmd);

    CLI::App* validate_cmd = app.add_subcommand("validate", "validate a config file");
    validate_cmd->add_option("config", config_path, "experiment config file")->required();

    CLI::App* trace_cmd = app.add_subcommand("trace", "dump one replication as per-step CSV");
    add_common(trace_cmd);
    trace_cmd->add_option("--replication", replication, "replication index (0-based)")
        ->capture_default_str();
    trace_cmd->add_option("--policy", policy_label, "policy label (default: first)");
    trace_cmd->add_option("--out", trace_out, "output file, '-' for stdout");

    CLI::App* oracle_cmd =
        app.add_subcommand("oracle", "print the known-model optimal input for a state");
    oracle_cmd->add_option("config", config_path, "experiment config file")->required();
    oracle_cmd->add_option("--state", state_1based, "previous state (1-based)")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate_cmd->parsed()) {
            mspsa::load_config(config_path);
            std::cout << "OK\n";
            return 0;
        }
        if (run_cmd->parsed()) {
            const auto config = load_with_overrides(config_path, ov);
            const auto output = mspsa::run_experiment(config);
            std::cout << "wrote " << output.summary.summary_txt << "\n";
            for (const auto& policy : output.summary.policies) {
                std::cout << policy.label << ": final_mean_regret "
                          << mspsa::format_csv_double(policy.final_mean_regret) << "\n";
            }
            return 0;
        }
        if (trace_cmd->parsed()) {
            const auto config = load_with_overrides(config_path, ov);
            const auto traj = mspsa::trace_replication(config, policy_label, replication);
            if (trace_out == "-") {
                mspsa::write_trace_csv(traj, std::cout);
            } else {
                std::string path = trace_out;
                if (path.empty()) {
                    const auto& label =
                        policy_label.empty() ? config.policies.front().label : policy_label;
                    const auto dir = mspsa::resolve_output_dir(config);
                    std::filesystem::create_directories(dir);
                    path = (std::filesystem::path(dir) /
                            (label + "_trace_rep" + std::to_string(replication) + ".csv"))
                               .string();
                }
                std::ofstream out(path, std::ios::binary);
                if (!out) throw std::runtime_error("cannot write " + path);
                mspsa::write_trace_csv(traj, out);
                std::cout << "wrote " << path << "\n";
            }
            return 0;
        }
        if (oracle_cmd->parsed()) {
            const auto config = mspsa::load_config(config_path);
            const int i = state_1based - 1;
            if (i < 0 || i >= config.model.num_states()) {
                throw mspsa::ConfigError("state", "index out of range");
            }
            if (config.model.objective == mspsa::Objective::QuadraticRegulation ||
                config.model.target.size() == config.model.output_dim()) {
                std::cout << "qr: ";
                print_vector(mspsa::optimal_input_qr(config.model, i));
                std::cout << "\n";
            } else {
                std::cout << "qr: n/a (no target configured)\n";
            }
            bool rm_ok = config.model.input_dim() == config.model.output_dim();
            if (rm_ok) {
                try {
                    const auto x = mspsa::optimal_input_rm(config.model, i);
                    std::cout << "rm: ";
                    print_vector(x);
                    std::cout << "\n";
                } catch (const mspsa::SingularMixture&) {
                    rm_ok = false;
                }
            }
            if (!rm_ok) std::cout << "rm: n/a\n";
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
