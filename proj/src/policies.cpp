#include "mspsa/policies.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "mspsa/oracle.hpp"

namespace mspsa {

double draw_perturbation_entry(PerturbationLaw law, RngStream& rng) {
    switch (law) {
        case PerturbationLaw::Rademacher:
            return rng.rademacher();
        case PerturbationLaw::TwoPointHalf: {
            const double u = rng.uniform();
            if (u < 0.25) return 1.0;
            if (u < 0.5) return -1.0;
            if (u < 0.75) return 0.5;
            return -0.5;
        }
    }
    return 1.0;
}

double perturbation_xi1(PerturbationLaw) { return 1.0; }

double perturbation_xi2(PerturbationLaw law) {
    return law == PerturbationLaw::Rademacher ? 1.0 : 2.5;
}

double MspsaGains::step_size(long t) const {
    return gamma / static_cast<double>(step_offset + t);
}

double MspsaGains::perturb_scale(long t) const {
    return gamma_prime / std::pow(static_cast<double>(perturb_offset + t), 0.25);
}

std::vector<Policy::StateEstimate> Policy::snapshot(int num_states) const {
    std::vector<StateEstimate> out;
    out.reserve(num_states);
    for (int i = 0; i < num_states; ++i) {
        out.push_back({estimate(i), revision_count(i)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// MSPSA

MspsaPolicy::MspsaPolicy(Objective objective, Vector target, FeasibleBox box,
                         Vector initial_input, MspsaGains gains, PerturbationLaw law)
    : objective_(objective),
      target_(std::move(target)),
      box_(std::move(box)),
      initial_input_(std::move(initial_input)),
      gains_(gains),
      law_(law) {
    if (gains_.gamma <= 0.0 || gains_.gamma_prime <= 0.0) {
        throw std::invalid_argument("mspsa gains must be positive");
    }
}

MspsaPolicy::StateRecord& MspsaPolicy::touch(int state) {
    if (state >= static_cast<int>(states_.size())) states_.resize(state + 1);
    StateRecord& rec = states_[state];
    if (rec.x_hat.size() == 0) {
        rec.x_hat = project(box_, initial_input_);
    }
    return rec;
}

Vector MspsaPolicy::act(int s_prev, RngStream& rng) {
    StateRecord& rec = touch(s_prev);
    acting_state_ = s_prev;
    if (!rec.awaiting_minus) {
        ++rec.pair_count;
        rec.pending_delta.resize(rec.x_hat.size());
        for (int j = 0; j < rec.pending_delta.size(); ++j) {
            rec.pending_delta(j) = draw_perturbation_entry(law_, rng);
        }
        last_input_ = rec.x_hat + gains_.perturb_scale(rec.pair_count) * rec.pending_delta;
    } else {
        last_input_ = rec.x_hat - gains_.perturb_scale(rec.pair_count) * rec.pending_delta;
    }
    return last_input_;
}

void MspsaPolicy::update(const Vector& y) {
    StateRecord& rec = states_.at(acting_state_);
    const double d = objective_ == Objective::QuadraticRegulation
                         ? (y - target_).squaredNorm()
                         : -last_input_.dot(y);
    if (!rec.awaiting_minus) {
        rec.pending_d_plus = d;
        rec.awaiting_minus = true;
        return;
    }
    const double c = gains_.perturb_scale(rec.pair_count);
    const double a = gains_.step_size(rec.pair_count);
    const Vector step = a * ((rec.pending_d_plus - d) / c) * rec.pending_delta.cwiseInverse();
    rec.x_hat = project(box_, rec.x_hat - step);
    rec.awaiting_minus = false;
    ++rec.revisions;
}

Vector MspsaPolicy::estimate(int state) const {
    if (state < static_cast<int>(states_.size()) && states_[state].x_hat.size() > 0) {
        return states_[state].x_hat;
    }
    return project(box_, initial_input_);
}

long MspsaPolicy::revision_count(int state) const {
    return state < static_cast<int>(states_.size()) ? states_[state].revisions : 0;
}

// ---------------------------------------------------------------------------
// Greedy LSE

GreedyLsePolicy::GreedyLsePolicy(Objective objective, Vector target, FeasibleBox box,
                                 Vector initial_input, double rank_tol)
    : objective_(objective),
      target_(std::move(target)),
      box_(std::move(box)),
      initial_input_(std::move(initial_input)),
      rank_tol_(rank_tol),
      input_dim_(static_cast<int>(initial_input_.size())),
      last_input_(initial_input_) {}

GreedyLsePolicy::StateReg& GreedyLsePolicy::touch(int state) {
    if (state >= static_cast<int>(states_.size())) {
        states_.resize(state + 1);
        for (auto& row : transition_counts_) row.resize(states_.size(), 0);
        transition_counts_.resize(states_.size(),
                                  std::vector<long>(states_.size(), 0));
    }
    StateReg& reg = states_[state];
    if (!reg.discovered) {
        reg.discovered = true;
        reg.zz = Matrix::Zero(input_dim_ + 1, input_dim_ + 1);
        reg.zy = Matrix::Zero(input_dim_ + 1, static_cast<int>(target_.size() > 0
                                                                   ? target_.size()
                                                                   : initial_input_.size()));
        reg.estimate = initial_input_;
    }
    return reg;
}

void GreedyLsePolicy::attribute_pending(int realized_state) {
    if (!has_pending_) return;
    StateReg& reg = touch(realized_state);
    Vector z(input_dim_ + 1);
    z(0) = 1.0;
    z.tail(input_dim_) = pending_x_;
    if (reg.zy.cols() != pending_y_.size()) {
        reg.zy = Matrix::Zero(input_dim_ + 1, pending_y_.size());
    }
    reg.zz.noalias() += z * z.transpose();
    reg.zy.noalias() += z * pending_y_.transpose();
    ++reg.samples;
    reg.fit_dirty = true;
    transition_counts_[pending_from_][realized_state] += 1;
    has_pending_ = false;
}

void GreedyLsePolicy::refresh_fit(const StateReg& reg) const {
    if (!reg.fit_dirty) return;
    reg.fit_dirty = false;
    if (!reg.full_rank) {
        // adding samples never lowers rank(zz), so the check runs only until
        // it first passes
        if (reg.samples < input_dim_ + 1) return;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(reg.zz);
        const auto& ev = eig.eigenvalues();
        if (!(ev(0) > rank_tol_ * ev(ev.size() - 1)) || !(ev(ev.size() - 1) > 0.0)) return;
        reg.full_rank = true;
    }
    const Matrix theta = reg.zz.ldlt().solve(reg.zy);  // (n+1) x m
    reg.b_hat = theta.row(0).transpose();
    reg.A_hat = theta.bottomRows(input_dim_).transpose();
}

bool GreedyLsePolicy::initializing() const {
    for (const auto& reg : states_) {
        if (!reg.discovered) continue;
        refresh_fit(reg);
        if (!reg.full_rank) return true;
    }
    return states_.empty();
}

bool GreedyLsePolicy::theta_estimate(int state, Matrix& A_hat, Vector& b_hat) const {
    if (state < 0 || state >= static_cast<int>(states_.size()) || !states_[state].discovered) {
        return false;
    }
    refresh_fit(states_[state]);
    if (!states_[state].full_rank) return false;
    A_hat = states_[state].A_hat;
    b_hat = states_[state].b_hat;
    return true;
}

std::vector<double> GreedyLsePolicy::smoothed_transition_row(int from) const {
    std::vector<double> row(states_.size(), 0.0);
    long discovered = 0;
    for (const auto& reg : states_) {
        if (reg.discovered) ++discovered;
    }
    long total = 0;
    if (from >= 0 && from < static_cast<int>(transition_counts_.size())) {
        for (std::size_t j = 0; j < transition_counts_[from].size(); ++j) {
            total += transition_counts_[from][j];
        }
    }
    const double denom = static_cast<double>(total + discovered);
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (!states_[j].discovered) continue;
        const long count = from < static_cast<int>(transition_counts_.size())
                               ? transition_counts_[from][j]
                               : 0;
        row[j] = static_cast<double>(count + 1) / denom;
    }
    return row;
}

Vector GreedyLsePolicy::plug_in_input(int s_prev) {
    std::vector<double> p_row = smoothed_transition_row(s_prev);
    std::vector<Matrix> A;
    std::vector<Vector> b;
    std::vector<double> weights;
    for (std::size_t j = 0; j < states_.size(); ++j) {
        if (!states_[j].discovered || p_row[j] == 0.0) continue;
        refresh_fit(states_[j]);
        A.push_back(states_[j].A_hat);
        b.push_back(states_[j].b_hat);
        weights.push_back(p_row[j]);
    }
    const Vector raw = objective_ == Objective::QuadraticRegulation
                           ? mixture_optimum_qr(weights, A, b, target_)
                           : mixture_optimum_rm(weights, A, b);
    return project(box_, raw);
}

Vector GreedyLsePolicy::act(int s_prev, RngStream&) {
    attribute_pending(s_prev);
    StateReg& reg = touch(s_prev);
    last_fallback_ = false;

    Vector input;
    if (initializing()) {
        const long cursor = reg.init_cursor++;
        input = initial_input_;
        if (cursor > 0) {
            const long phase = (cursor - 1) % (2 * input_dim_);
            const int coord = static_cast<int>(phase / 2);
            const double sign = phase % 2 == 0 ? 1.0 : -1.0;
            input(coord) *= 1.0 + sign * 0.05;
        }
    } else {
        try {
            input = plug_in_input(s_prev);
        } catch (const SingularMixture&) {
            last_fallback_ = true;
            input = last_input_;
        }
    }
    reg.estimate = input;
    ++reg.revisions;
    pending_x_ = input;
    pending_from_ = s_prev;
    last_input_ = input;
    return input;
}

void GreedyLsePolicy::update(const Vector& y) {
    pending_y_ = y;
    has_pending_ = true;
}

Vector GreedyLsePolicy::estimate(int state) const {
    if (state < static_cast<int>(states_.size()) && states_[state].discovered) {
        return states_[state].estimate;
    }
    return initial_input_;
}

long GreedyLsePolicy::revision_count(int state) const {
    return state < static_cast<int>(states_.size()) ? states_[state].revisions : 0;
}

// ---------------------------------------------------------------------------
// Oracle

OraclePolicy::OraclePolicy(const JumpAffineModel& model) {
    optima_.reserve(model.num_states());
    for (int i = 0; i < model.num_states(); ++i) {
        optima_.push_back(optimal_input(model, i));
    }
}

Vector OraclePolicy::act(int s_prev, RngStream&) { return optima_.at(s_prev); }

}  // namespace mspsa
