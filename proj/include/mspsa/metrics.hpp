#pragma once

#include <span>
#include <string>
#include <vector>

#include "mspsa/model.hpp"
#include "mspsa/simulate.hpp"

namespace mspsa {

/// Realized stage regret terms. Both are nonnegative quadratic forms and
/// vanish exactly at x = x*_{s_prev}.
///   quadratic regulation:  ||A_{s_t}(x - x*_{s_prev})||^2
///   revenue maximization:  -(x - x*_{s_prev})' A_{s_t} (x - x*_{s_prev})
double stage_regret_qr(const JumpAffineModel& model, int s_curr, int s_prev, const Vector& x);
double stage_regret_rm(const JumpAffineModel& model, int s_curr, int s_prev, const Vector& x);

/// Per-replication curves extracted from one trajectory.
struct RegretSeries {
    long replication = 0;
    std::vector<double> cum_regret;    // cumulative stage regret
    std::vector<double> cum_input_sq;  // cumulative ||x_t - x*||^2
    std::vector<double> est_sq;        // per-period ||xhat - x*||^2 (acting state)
    // est_by_revision[i][k-1] = squared error of state i's estimate carrying
    // index k (filled for k = 1..revisions+1; NaN where a revision index was
    // skipped, which does not occur under the strict act/update alternation)
    std::vector<std::vector<double>> est_by_revision;
};

RegretSeries build_series(const Trajectory& traj, long replication);

struct MeanCurve {
    std::vector<double> mean;
    std::vector<double> se;  // standard error of the mean
};

/// Ordered reduction over replications: add() must be called in replication
/// order so float accumulation (and therefore output bytes) is independent
/// of scheduling.
class Aggregator {
  public:
    Aggregator(long horizon, int num_states);

    void add(const RegretSeries& series);

    struct Result {
        long replications = 0;
        MeanCurve cum_regret;
        MeanCurve cum_input_sq;
        MeanCurve est_sq;
        /// Per state: mean estimate error at revision index k (1-based k-1
        /// offset), truncated to the prefix every replication reached.
        std::vector<std::vector<double>> est_by_revision_mean;
    };
    Result finalize() const;

  private:
    long horizon_;
    long count_ = 0;
    std::vector<double> sum_regret_, sumsq_regret_;
    std::vector<double> sum_input_, sumsq_input_;
    std::vector<double> sum_est_, sumsq_est_;
    std::vector<std::vector<double>> rev_sum_;
    std::vector<std::vector<long>> rev_count_;
};

/// Convenience wrapper over Aggregator for in-memory series (LengthMismatch
/// if horizons differ).
Aggregator::Result aggregate(std::span<const RegretSeries> all, int num_states);

struct SlopeFit {
    double slope = 0.0;
    double stderror = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long points = 0;
    bool valid = false;
};

/// Least-squares slope of log(values[t-1]) against log(t) for t in
/// [t_lo, t_hi] (1-based index = time). Points with values <= 0 are skipped.
SlopeFit fit_loglog_slope(std::span<const double> values, long t_lo, long t_hi);

/// Deterministic float formatting shared by all CSV writers.
std::string format_csv_double(double v);

}  // namespace mspsa
