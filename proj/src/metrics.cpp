#include "mspsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mspsa/oracle.hpp"

namespace mspsa {

double stage_regret_qr(const JumpAffineModel& model, int s_curr, int s_prev, const Vector& x) {
    const Vector diff = x - optimal_input_qr(model, s_prev);
    return (model.states.at(s_curr).A * diff).squaredNorm();
}

double stage_regret_rm(const JumpAffineModel& model, int s_curr, int s_prev, const Vector& x) {
    const Vector diff = x - optimal_input_rm(model, s_prev);
    return -diff.dot(model.states.at(s_curr).A * diff);
}

RegretSeries build_series(const Trajectory& traj, long replication) {
    RegretSeries series;
    series.replication = replication;
    const std::size_t horizon = traj.records.size();
    series.cum_regret.resize(horizon);
    series.cum_input_sq.resize(horizon);
    series.est_sq.resize(horizon);
    double regret = 0.0;
    double input_sq = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const StepRecord& rec = traj.records[t];
        regret += rec.stage_regret;
        input_sq += rec.input_sq_err;
        series.cum_regret[t] = regret;
        series.cum_input_sq[t] = input_sq;
        series.est_sq[t] = rec.est_sq_err;
    }
    series.est_by_revision.resize(traj.num_states);
    for (const auto& ev : traj.estimate_events) {
        auto& curve = series.est_by_revision[ev.state];
        if (static_cast<long>(curve.size()) < ev.revision) {
            curve.resize(ev.revision, std::numeric_limits<double>::quiet_NaN());
        }
        curve[ev.revision - 1] = ev.sq_err;
    }
    return series;
}

Aggregator::Aggregator(long horizon, int num_states)
    : horizon_(horizon),
      sum_regret_(horizon, 0.0),
      sumsq_regret_(horizon, 0.0),
      sum_input_(horizon, 0.0),
      sumsq_input_(horizon, 0.0),
      sum_est_(horizon, 0.0),
      sumsq_est_(horizon, 0.0),
      rev_sum_(num_states),
      rev_count_(num_states) {}

void Aggregator::add(const RegretSeries& series) {
    if (static_cast<long>(series.cum_regret.size()) != horizon_) {
        throw std::invalid_argument("LengthMismatch: series horizon differs");
    }
    for (long t = 0; t < horizon_; ++t) {
        sum_regret_[t] += series.cum_regret[t];
        sumsq_regret_[t] += series.cum_regret[t] * series.cum_regret[t];
        sum_input_[t] += series.cum_input_sq[t];
        sumsq_input_[t] += series.cum_input_sq[t] * series.cum_input_sq[t];
        sum_est_[t] += series.est_sq[t];
        sumsq_est_[t] += series.est_sq[t] * series.est_sq[t];
    }
    for (std::size_t i = 0; i < rev_sum_.size() && i < series.est_by_revision.size(); ++i) {
        const auto& curve = series.est_by_revision[i];
        if (rev_sum_[i].size() < curve.size()) {
            rev_sum_[i].resize(curve.size(), 0.0);
            rev_count_[i].resize(curve.size(), 0);
        }
        for (std::size_t k = 0; k < curve.size(); ++k) {
            if (std::isnan(curve[k])) continue;
            rev_sum_[i][k] += curve[k];
            rev_count_[i][k] += 1;
        }
    }
    ++count_;
}

namespace {

MeanCurve make_curve(const std::vector<double>& sum, const std::vector<double>& sumsq,
                     long n) {
    MeanCurve curve;
    curve.mean.resize(sum.size());
    curve.se.resize(sum.size());
    for (std::size_t t = 0; t < sum.size(); ++t) {
        const double mean = sum[t] / static_cast<double>(n);
        curve.mean[t] = mean;
        if (n > 1) {
            const double var =
                std::max(0.0, (sumsq[t] - static_cast<double>(n) * mean * mean) /
                                  static_cast<double>(n - 1));
            curve.se[t] = std::sqrt(var / static_cast<double>(n));
        } else {
            curve.se[t] = 0.0;
        }
    }
    return curve;
}

}  // namespace

Aggregator::Result Aggregator::finalize() const {
    if (count_ == 0) throw std::logic_error("no series added");
    Result result;
    result.replications = count_;
    result.cum_regret = make_curve(sum_regret_, sumsq_regret_, count_);
    result.cum_input_sq = make_curve(sum_input_, sumsq_input_, count_);
    result.est_sq = make_curve(sum_est_, sumsq_est_, count_);
    result.est_by_revision_mean.resize(rev_sum_.size());
    for (std::size_t i = 0; i < rev_sum_.size(); ++i) {
        // keep only the prefix that every replication reached
        std::size_t full = 0;
        while (full < rev_count_[i].size() && rev_count_[i][full] == count_) ++full;
        auto& mean = result.est_by_revision_mean[i];
        mean.resize(full);
        for (std::size_t k = 0; k < full; ++k) {
            mean[k] = rev_sum_[i][k] / static_cast<double>(count_);
        }
    }
    return result;
}

Aggregator::Result aggregate(std::span<const RegretSeries> all, int num_states) {
    if (all.empty()) throw std::invalid_argument("no series to aggregate");
    Aggregator agg(static_cast<long>(all.front().cum_regret.size()), num_states);
    for (const auto& series : all) agg.add(series);
    return agg.finalize();
}

SlopeFit fit_loglog_slope(std::span<const double> values, long t_lo, long t_hi) {
    SlopeFit fit;
    t_lo = std::max<long>(1, t_lo);
    t_hi = std::min<long>(static_cast<long>(values.size()), t_hi);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    long n = 0;
    for (long t = t_lo; t <= t_hi; ++t) {
        const double v = values[t - 1];
        if (!(v > 0.0)) continue;
        const double lx = std::log(static_cast<double>(t));
        const double ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    fit.points = n;
    if (n < 3) return fit;
    const double denom = sxx - sx * sx / n;
    if (denom <= 0.0) return fit;
    fit.slope = (sxy - sx * sy / n) / denom;
    const double intercept = (sy - fit.slope * sx) / n;
    double rss = 0.0;
    for (long t = t_lo; t <= t_hi; ++t) {
        const double v = values[t - 1];
        if (!(v > 0.0)) continue;
        const double lx = std::log(static_cast<double>(t));
        const double r = std::log(v) - (intercept + fit.slope * lx);
        rss += r * r;
    }
    fit.stderror = std::sqrt(rss / (n - 2) / denom);
    fit.ci_lo = fit.slope - 1.96 * fit.stderror;
    fit.ci_hi = fit.slope + 1.96 * fit.stderror;
    fit.valid = true;
    return fit;
}

std::string format_csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace mspsa
