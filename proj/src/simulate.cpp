#include "mspsa/simulate.hpp"

#include <cmath>
#include <ostream>

#include "mspsa/metrics.hpp"
#include "mspsa/oracle.hpp"
#include "mspsa/policies.hpp"

namespace mspsa {

int next_state(const MarkovChain& chain, int s_prev, RngStream& rng) {
    const int k = chain.num_states();
    if (s_prev < 0 || s_prev >= k) {
        throw DimensionMismatch("next_state: state " + std::to_string(s_prev + 1) +
                                " out of range");
    }
    const double u = rng.uniform();
    double cum = 0.0;
    for (int j = 0; j + 1 < k; ++j) {
        cum += chain.P(s_prev, j);
        if (u < cum) return j;
    }
    return k - 1;
}

Vector observe(const JumpAffineModel& model, int s, const Vector& x, RngStream& rng) {
    if (s < 0 || s >= model.num_states()) {
        throw DimensionMismatch("observe: state " + std::to_string(s + 1) + " out of range");
    }
    if (!x.allFinite()) throw NonFiniteInput("observe: input has non-finite entries");
    const AffineState& st = model.states[s];
    if (x.size() != st.input_dim()) {
        throw DimensionMismatch("observe: input has wrong dimension");
    }
    Vector y = st.A * x + st.b;
    for (int j = 0; j < y.size(); ++j) {
        y(j) += st.noise_sigma(j) * rng.gaussian();
    }
    return y;
}

Trajectory run_episode(const JumpAffineModel& model, const FeasibleBox& box, Policy& policy,
                       long horizon, const RngStream& rng) {
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    RngStream sys_rng = rng.fork(0);
    RngStream pol_rng = rng.fork(1);

    const int num_states = model.num_states();
    std::vector<Vector> x_star(num_states);
    for (int i = 0; i < num_states; ++i) x_star[i] = optimal_input(model, i);

    Trajectory traj;
    traj.num_states = num_states;
    traj.input_dim = model.input_dim();
    traj.output_dim = model.output_dim();
    traj.records.reserve(horizon);

    std::vector<long> seen_revisions(num_states, -1);
    int s_prev = model.chain.initial_state;

    for (long t = 1; t <= horizon; ++t) try {
        StepRecord rec;
        rec.t = t;
        rec.s_prev = s_prev;
        rec.est_sq_err = (policy.estimate(s_prev) - x_star[s_prev]).squaredNorm();
        if (seen_revisions[s_prev] < 0) {
            traj.estimate_events.push_back({s_prev, 1, rec.est_sq_err});
            seen_revisions[s_prev] = policy.revision_count(s_prev);
        }

        rec.x = policy.act(s_prev, pol_rng);
        rec.s_curr = next_state(model.chain, s_prev, sys_rng);
        rec.y = observe(model, rec.s_curr, rec.x, sys_rng);
        policy.update(rec.y);

        rec.stage_cost = model.objective == Objective::QuadraticRegulation
                             ? (rec.y - model.target).squaredNorm()
                             : -rec.x.dot(rec.y);
        const Vector diff = rec.x - x_star[s_prev];
        rec.input_sq_err = diff.squaredNorm();
        if (model.objective == Objective::QuadraticRegulation) {
            rec.stage_regret = (model.states[rec.s_curr].A * diff).squaredNorm();
        } else {
            rec.stage_regret = -diff.dot(model.states[rec.s_curr].A * diff);
        }
        rec.lse_fallback = policy.last_act_fallback();
        if (rec.lse_fallback) ++traj.lse_fallback_count;

        const long revs = policy.revision_count(s_prev);
        if (revs > seen_revisions[s_prev]) {
            seen_revisions[s_prev] = revs;
            const double err = (policy.estimate(s_prev) - x_star[s_prev]).squaredNorm();
            // the r-th revision produced the estimate carrying index r+1
            traj.estimate_events.push_back({s_prev, revs + 1, err});
        }

        traj.records.push_back(std::move(rec));
        s_prev = traj.records.back().s_curr;
    } catch (const std::exception& err) {
        throw std::runtime_error("period " + std::to_string(t) + ": " + err.what());
    }

    traj.final_estimates.reserve(num_states);
    for (int i = 0; i < num_states; ++i) traj.final_estimates.push_back(policy.estimate(i));
    return traj;
}

void write_trace_csv(const Trajectory& traj, std::ostream& out) {
    out << "t,s_prev,s_t";
    for (int j = 0; j < traj.input_dim; ++j) out << ",x" << j;
    for (int j = 0; j < traj.output_dim; ++j) out << ",y" << j;
    out << ",stage_cost,stage_regret,input_sq_err\n";
    for (const auto& rec : traj.records) {
        out << rec.t << ',' << rec.s_prev + 1 << ',' << rec.s_curr + 1;
        for (int j = 0; j < traj.input_dim; ++j) out << ',' << format_csv_double(rec.x(j));
        for (int j = 0; j < traj.output_dim; ++j) out << ',' << format_csv_double(rec.y(j));
        out << ',' << format_csv_double(rec.stage_cost) << ','
            << format_csv_double(rec.stage_regret) << ','
            << format_csv_double(rec.input_sq_err) << '\n';
    }
}

}  // namespace mspsa
