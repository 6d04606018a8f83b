#pragma once

#include <cstdint>
#include <vector>

#include "mspsa/model.hpp"
#include "mspsa/rng.hpp"

namespace mspsa {

class Policy;  // policies.hpp

/// One period of an episode. States are 0-based.
struct StepRecord {
    long t = 0;
    int s_prev = 0;
    int s_curr = 0;
    Vector x;
    Vector y;
    double stage_cost = 0.0;    // realized cost: ||y*-y||^2 or -x.y
    double stage_regret = 0.0;  // realized quadratic-form regret term
    double input_sq_err = 0.0;  // ||x_t - x*_{s_prev}||^2
    double est_sq_err = 0.0;    // ||xhat_{s_prev} - x*_{s_prev}||^2 at act time
    bool lse_fallback = false;
};

/// Recorded when a policy revises its per-state estimate: the k-th revision
/// of state i produced estimate with squared error sq_err (k starts at 1 for
/// the initial estimate).
struct EstimateEvent {
    int state = 0;
    long revision = 0;
    double sq_err = 0.0;
};

struct Trajectory {
    std::vector<StepRecord> records;
    std::vector<EstimateEvent> estimate_events;
    std::vector<Vector> final_estimates;  // per state, at episode end
    int num_states = 0;
    int input_dim = 0;
    int output_dim = 0;
    long lse_fallback_count = 0;
};

/// Draw s_t given s_prev; consumes exactly one uniform draw.
int next_state(const MarkovChain& chain, int s_prev, RngStream& rng);

/// y_t = A_{s} x + b_{s} + w with w_j ~ N(0, sigma_j^2); consumes exactly
/// m gaussian draws (2m engine words).
Vector observe(const JumpAffineModel& model, int s, const Vector& x, RngStream& rng);

/// Run the decision loop for T periods:
///   x_t = policy.act(s_{t-1}); s_t ~ P(s_{t-1}, .); y_t = observe; policy.update(y_t).
/// System randomness (state then noise, in that order each period) comes from
/// rng.fork(0) and policy-internal randomness from rng.fork(1), so the
/// system's draw sequence is identical across policies for equal
/// (seed, stream_id). s_0 is chain.initial_state.
Trajectory run_episode(const JumpAffineModel& model, const FeasibleBox& box, Policy& policy,
                       long horizon, const RngStream& rng);

/// Write a trajectory as CSV with columns
/// t,s_prev,s_t,x[0..n),y[0..m),stage_cost,stage_regret,input_sq_err.
/// State labels are 1-based in the file.
void write_trace_csv(const Trajectory& traj, std::ostream& out);

}  // namespace mspsa
