#include "mspsa/harness.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mspsa/version.hpp"

namespace mspsa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int effective_threads(const ExperimentConfig& config) {
    if (config.threads > 0) return config.threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(r) for r = 0..count-1 on a small pool and feeds the results to
/// merge(r, result) strictly in index order, so the reduction is identical
/// no matter how many workers run or how they interleave.
template <typename Result, typename Fn, typename Merge>
void ordered_parallel_for(long count, int threads, long window, Fn&& fn, Merge&& merge) {
    if (threads <= 1) {
        for (long r = 0; r < count; ++r) merge(r, fn(r));
        return;
    }
    std::mutex mu;
    std::condition_variable cv;
    std::map<long, Result> ready;
    std::atomic<long> next_claim{0};
    long next_merge = 0;
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const long r = next_claim.fetch_add(1);
            if (r >= count) return;
            try {
                Result result = fn(r);
                std::unique_lock lock(mu);
                cv.wait(lock, [&] {
                    return failure || r < next_merge + window;
                });
                if (failure) return;
                ready.emplace(r, std::move(result));
                cv.notify_all();
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                cv.notify_all();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);

    {
        std::unique_lock lock(mu);
        while (next_merge < count) {
            cv.wait(lock, [&] { return failure || ready.count(next_merge) > 0; });
            if (failure) break;
            Result result = std::move(ready.at(next_merge));
            ready.erase(next_merge);
            lock.unlock();
            merge(next_merge, std::move(result));
            lock.lock();
            ++next_merge;
            cv.notify_all();
        }
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// Removes every file it was told about unless released.
class OutputGuard {
  public:
    ~OutputGuard() {
        if (released_) return;
        for (const auto& path : files_) {
            std::error_code ec;
            fs::remove(path, ec);
        }
    }
    void track(const std::string& path) { files_.push_back(path); }
    void release() { released_ = true; }

  private:
    std::vector<std::string> files_;
    bool released_ = false;
};

void write_curves_csv(const std::string& path, const std::vector<long>& checkpoints,
                      const Aggregator::Result& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,mean_regret,se_regret,mean_input_mse,mean_est_mse\n";
    for (const long t : checkpoints) {
        const std::size_t idx = static_cast<std::size_t>(t - 1);
        out << t << ',' << format_csv_double(result.cum_regret.mean[idx]) << ','
            << format_csv_double(result.cum_regret.se[idx]) << ','
            << format_csv_double(result.cum_input_sq.mean[idx]) << ','
            << format_csv_double(result.est_sq.mean[idx]) << '\n';
    }
}

void write_est_by_update_csv(const std::string& path, const Aggregator::Result& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t_i,state,mean_est_mse\n";
    std::size_t longest = 0;
    for (const auto& curve : result.est_by_revision_mean) {
        longest = std::max(longest, curve.size());
    }
    for (std::size_t k = 0; k < longest; ++k) {
        for (std::size_t i = 0; i < result.est_by_revision_mean.size(); ++i) {
            const auto& curve = result.est_by_revision_mean[i];
            if (k >= curve.size()) continue;
            out << k + 1 << ',' << i + 1 << ',' << format_csv_double(curve[k]) << '\n';
        }
    }
}

json slope_to_json(const SlopeFit& fit) {
    json node;
    node["valid"] = fit.valid;
    node["points"] = fit.points;
    if (fit.valid) {
        node["slope"] = fit.slope;
        node["stderr"] = fit.stderror;
        node["ci"] = json::array({fit.ci_lo, fit.ci_hi});
    }
    return node;
}

std::string slope_text(const SlopeFit& fit) {
    if (!fit.valid) return "n/a";
    std::ostringstream out;
    out.precision(4);
    out << fit.slope << " (ci " << fit.ci_lo << ".." << fit.ci_hi << ")";
    return out.str();
}

const PolicyConfig& find_policy(const ExperimentConfig& config, const std::string& label) {
    if (label.empty()) return config.policies.front();
    for (const auto& policy : config.policies) {
        if (policy.label == label) return policy;
    }
    throw ConfigError("policies", "no policy labeled '" + label + "'");
}

}  // namespace

std::string resolve_output_dir(const ExperimentConfig& config) {
    if (const char* env = std::getenv("MSPSA_OUT_DIR"); env && *env) return env;
    return config.output_dir;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    const std::string out_dir = resolve_output_dir(config);
    fs::create_directories(out_dir);

    const int threads = effective_threads(config);
    const long window = 2L * threads;
    const int num_states = config.model.num_states();

    ExperimentOutput output;
    output.summary.config_hash = config_hash(config);
    output.summary.seed = config.seed;
    output.summary.version = kVersion;

    OutputGuard guard;

    for (const auto& policy_cfg : config.policies) {
        Aggregator agg(config.horizon, num_states);
        auto simulate_one = [&](long r) -> RegretSeries {
            try {
                RngStream rng(config.seed, static_cast<std::uint64_t>(r));
                auto policy = make_policy(policy_cfg, config);
                Trajectory traj =
                    run_episode(config.model, config.box, *policy, config.horizon, rng);
                return build_series(traj, r);
            } catch (const std::exception& err) {
                throw std::runtime_error("replication " + std::to_string(r) + ": " + err.what());
            }
        };
        try {
            ordered_parallel_for<RegretSeries>(
                config.replications, threads, window, simulate_one,
                [&](long, RegretSeries&& series) { agg.add(series); });
        } catch (const std::exception& err) {
            throw std::runtime_error("policy '" + policy_cfg.label +
                                     "': " + err.what());
        }
        Aggregator::Result result = agg.finalize();

        PolicySummary summary;
        summary.label = policy_cfg.label;
        summary.policy_name = policy_cfg.name;
        summary.regret_slope = fit_loglog_slope(result.cum_regret.mean, config.slope_window_lo,
                                                config.slope_window_hi);
        summary.est_mse_slope = fit_loglog_slope(
            result.est_sq.mean, std::max<long>(1, config.horizon / 10), config.horizon);
        for (const auto& curve : result.est_by_revision_mean) {
            const long hi = static_cast<long>(curve.size());
            summary.per_state_est_slope.push_back(
                fit_loglog_slope(curve, std::max<long>(1, hi / 10), hi));
        }
        summary.final_mean_regret = result.cum_regret.mean.back();
        summary.final_mean_est_mse = result.est_sq.mean.back();
        summary.final_mean_cum_input_mse = result.cum_input_sq.mean.back();

        summary.curves_csv = (fs::path(out_dir) / (policy_cfg.label + "_curves.csv")).string();
        summary.est_by_update_csv =
            (fs::path(out_dir) / (policy_cfg.label + "_est_by_update.csv")).string();
        guard.track(summary.curves_csv);
        guard.track(summary.est_by_update_csv);
        write_curves_csv(summary.curves_csv, config.checkpoints, result);
        write_est_by_update_csv(summary.est_by_update_csv, result);

        output.summary.policies.push_back(summary);
        output.curves.push_back({policy_cfg.label, std::move(result)});
    }

    // summary emission: human-readable text and machine-readable json
    output.summary.summary_txt = (fs::path(out_dir) / "summary.txt").string();
    output.summary.summary_json = (fs::path(out_dir) / "summary.json").string();
    guard.track(output.summary.summary_txt);
    guard.track(output.summary.summary_json);

    {
        std::ofstream txt(output.summary.summary_txt, std::ios::binary);
        if (!txt) throw std::runtime_error("cannot write " + output.summary.summary_txt);
        txt << "mspsa " << kVersion << "\n";
        txt << "config_hash " << output.summary.config_hash << "\n";
        txt << "seed " << config.seed << "\n";
        txt << "horizon " << config.horizon << " replications " << config.replications << "\n";
        for (const auto& policy : output.summary.policies) {
            txt << "\npolicy " << policy.label << "\n";
            txt << "  regret_slope      " << slope_text(policy.regret_slope) << "\n";
            txt << "  est_mse_slope     " << slope_text(policy.est_mse_slope) << "\n";
            for (std::size_t i = 0; i < policy.per_state_est_slope.size(); ++i) {
                txt << "  est_slope_state" << i + 1 << "  "
                    << slope_text(policy.per_state_est_slope[i]) << "\n";
            }
            txt << "  final_mean_regret " << format_csv_double(policy.final_mean_regret) << "\n";
            txt << "  final_mean_est_mse " << format_csv_double(policy.final_mean_est_mse)
                << "\n";
        }
    }
    {
        json root;
        root["version"] = kVersion;
        root["config_hash"] = output.summary.config_hash;
        root["seed"] = config.seed;
        json policies_node = json::array();
        for (const auto& policy : output.summary.policies) {
            json node;
            node["label"] = policy.label;
            node["name"] = policy.policy_name;
            node["regret_slope"] = slope_to_json(policy.regret_slope);
            node["est_mse_slope"] = slope_to_json(policy.est_mse_slope);
            json per_state = json::array();
            for (const auto& fit : policy.per_state_est_slope) per_state.push_back(slope_to_json(fit));
            node["per_state_est_slope"] = per_state;
            node["final_mean_regret"] = policy.final_mean_regret;
            node["final_mean_est_mse"] = policy.final_mean_est_mse;
            node["final_mean_cum_input_mse"] = policy.final_mean_cum_input_mse;
            node["curves_csv"] = policy.curves_csv;
            node["est_by_update_csv"] = policy.est_by_update_csv;
            policies_node.push_back(node);
        }
        root["policies"] = policies_node;
        std::ofstream js(output.summary.summary_json, std::ios::binary);
        if (!js) throw std::runtime_error("cannot write " + output.summary.summary_json);
        js << root.dump(2) << "\n";
    }

    guard.release();
    return output;
}

Trajectory trace_replication(const ExperimentConfig& config, const std::string& label,
                             long replication) {
    if (replication < 0 || replication >= config.replications) {
        throw ConfigError("replication", "index out of range");
    }
    const PolicyConfig& policy_cfg = find_policy(config, label);
    RngStream rng(config.seed, static_cast<std::uint64_t>(replication));
    auto policy = make_policy(policy_cfg, config);
    return run_episode(config.model, config.box, *policy, config.horizon, rng);
}

}  // namespace mspsa
