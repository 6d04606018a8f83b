#pragma once

#include <string>
#include <vector>

#include "mspsa/model.hpp"
#include "mspsa/rng.hpp"

namespace mspsa {

/// Perturbation distributions for the SPSA directions. Entries are i.i.d.,
/// symmetric around zero, with |entry| <= xi1 and E[1/entry^2] <= xi2.
enum class PerturbationLaw {
    Rademacher,    // +-1           (xi1 = 1, xi2 = 1)
    TwoPointHalf,  // +-1 or +-0.5  (xi1 = 1, xi2 = 2.5)
};

double draw_perturbation_entry(PerturbationLaw law, RngStream& rng);
double perturbation_xi1(PerturbationLaw law);
double perturbation_xi2(PerturbationLaw law);

/// Gain schedules: step size a_t = gamma / (step_offset + t),
/// perturbation size c_t = gamma_prime / (perturb_offset + t)^0.25.
struct MspsaGains {
    double gamma = 1.0;
    long step_offset = 0;  // N
    double gamma_prime = 1.0;
    long perturb_offset = 0;  // N'

    double step_size(long t) const;
    double perturb_scale(long t) const;
};

/// Decision rule bound to one replication. act and update strictly
/// alternate: act(s_prev) produces x_t, update(y_t) feeds back the observed
/// output of that same period. States are 0-based and discovered lazily;
/// the policy is never shown the transition matrix.
class Policy {
  public:
    virtual ~Policy() = default;

    virtual Vector act(int s_prev, RngStream& rng) = 0;
    virtual void update(const Vector& y) = 0;

    /// Current estimate of the optimal input for a state (the initial input
    /// for states not yet refined).
    virtual Vector estimate(int state) const = 0;
    /// Number of times the estimate of `state` has been revised.
    virtual long revision_count(int state) const = 0;
    virtual std::string name() const = 0;
    /// True when the previous act had to fall back (greedy LSE only).
    virtual bool last_act_fallback() const { return false; }

    struct StateEstimate {
        Vector x_hat;
        long revisions = 0;
    };
    /// Per-state estimates for metrics.
    std::vector<StateEstimate> snapshot(int num_states) const;
};

/// Markovian simultaneous perturbation stochastic approximation. Keeps one
/// record per observed state i: on consecutive visits the estimate is probed
/// at x_hat +- c_t * delta and updated from the paired cost difference
///   x_hat <- project(x_hat - a_t * ((d+ - d-)/c_t) * delta_bar).
/// The probe cost is d = ||y - target||^2 for quadratic regulation and
/// d = -x.y for revenue maximization.
class MspsaPolicy : public Policy {
  public:
    struct StateRecord {
        Vector x_hat;
        long pair_count = 0;  // t_i, increments when a +probe starts
        bool awaiting_minus = false;  // e_i
        Vector pending_delta;
        double pending_d_plus = 0.0;
        long revisions = 0;
    };

    MspsaPolicy(Objective objective, Vector target, FeasibleBox box, Vector initial_input,
                MspsaGains gains, PerturbationLaw law = PerturbationLaw::Rademacher);

    Vector act(int s_prev, RngStream& rng) override;
    void update(const Vector& y) override;
    Vector estimate(int state) const override;
    long revision_count(int state) const override;
    std::string name() const override { return "mspsa"; }

    const StateRecord& record(int state) const { return states_.at(state); }
    const MspsaGains& gains() const { return gains_; }

  private:
    Objective objective_;
    Vector target_;
    FeasibleBox box_;
    Vector initial_input_;
    MspsaGains gains_;
    PerturbationLaw law_;
    std::vector<StateRecord> states_;
    int acting_state_ = -1;
    Vector last_input_;

    StateRecord& touch(int state);
};

/// Greedy certainty equivalence: regress y on (1, x) per realized state,
/// estimate the transition row by add-one-smoothed empirical frequencies,
/// plug both into the known-model closed form and project onto the box.
/// Until every observed state's regression has full column rank, inputs come
/// from the initialization cursor: the configured initial input first, then
/// one coordinate at a time scaled by (1 +- 0.05), cycling.
class GreedyLsePolicy : public Policy {
  public:
    GreedyLsePolicy(Objective objective, Vector target, FeasibleBox box, Vector initial_input,
                    double rank_tol = 1e-9);

    Vector act(int s_prev, RngStream& rng) override;
    void update(const Vector& y) override;
    Vector estimate(int state) const override;
    long revision_count(int state) const override;
    std::string name() const override { return "greedy_lse"; }
    bool last_act_fallback() const override { return last_fallback_; }

    /// Empirical transition row with add-one smoothing over discovered states.
    std::vector<double> smoothed_transition_row(int from) const;
    bool initializing() const;
    /// Fitted (A, b) for a state; false when the design is rank deficient.
    bool theta_estimate(int state, Matrix& A_hat, Vector& b_hat) const;

  private:
    struct StateReg {
        Matrix zz;  // sum of [1;x][1;x]'
        Matrix zy;  // sum of [1;x] y'
        long samples = 0;
        bool discovered = false;
        long init_cursor = 0;
        Vector estimate;
        long revisions = 0;
        // fit cache
        mutable bool fit_dirty = true;
        mutable bool full_rank = false;
        mutable Matrix A_hat;
        mutable Vector b_hat;
    };

    Objective objective_;
    Vector target_;
    FeasibleBox box_;
    Vector initial_input_;
    double rank_tol_;
    int input_dim_;
    std::vector<StateReg> states_;
    std::vector<std::vector<long>> transition_counts_;

    Vector last_input_;
    bool last_fallback_ = false;
    // sample awaiting attribution: update() sees y_t but not s_t; the next
    // act's s_prev is that s_t, so the pair is filed then.
    bool has_pending_ = false;
    Vector pending_x_;
    Vector pending_y_;
    int pending_from_ = -1;

    StateReg& touch(int state);
    void attribute_pending(int realized_state);
    void refresh_fit(const StateReg& reg) const;
    Vector plug_in_input(int s_prev);
};

/// Known-model baseline: always plays the true optimal input of the acting
/// state. Simulation-only cheat used as the zero-regret floor.
class OraclePolicy : public Policy {
  public:
    OraclePolicy(const JumpAffineModel& model);

    Vector act(int s_prev, RngStream& rng) override;
    void update(const Vector& y) override {}
    Vector estimate(int state) const override { return optima_.at(state); }
    long revision_count(int state) const override { return 0; }
    std::string name() const override { return "oracle"; }

  private:
    std::vector<Vector> optima_;
};

/// Plays a fixed input every period.
class ConstantPolicy : public Policy {
  public:
    explicit ConstantPolicy(Vector input) : input_(std::move(input)) {}

    Vector act(int, RngStream&) override { return input_; }
    void update(const Vector&) override {}
    Vector estimate(int) const override { return input_; }
    long revision_count(int) const override { return 0; }
    std::string name() const override { return "constant"; }

  private:
    Vector input_;
};

}  // namespace mspsa
