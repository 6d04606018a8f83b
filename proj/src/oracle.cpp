#include "mspsa/oracle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mspsa {

namespace {

Vector guarded_solve(const Matrix& lhs, const Vector& rhs, const char* what) {
    Eigen::JacobiSVD<Matrix> svd(lhs, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || smax / smin > kConditionGuard) {
        throw SingularMixture(what);
    }
    return svd.solve(rhs);
}

void check_state_index(const JumpAffineModel& model, int i) {
    if (i < 0 || i >= model.num_states()) {
        throw DimensionMismatch("state index " + std::to_string(i + 1) + " out of range");
    }
}

std::vector<Matrix> state_matrices(const JumpAffineModel& model) {
    std::vector<Matrix> out;
    out.reserve(model.states.size());
    for (const auto& st : model.states) out.push_back(st.A);
    return out;
}

std::vector<Vector> state_offsets(const JumpAffineModel& model) {
    std::vector<Vector> out;
    out.reserve(model.states.size());
    for (const auto& st : model.states) out.push_back(st.b);
    return out;
}

std::vector<double> transition_row(const JumpAffineModel& model, int i) {
    std::vector<double> row(model.chain.num_states());
    for (int j = 0; j < model.chain.num_states(); ++j) row[j] = model.chain.P(i, j);
    return row;
}

}  // namespace

Vector mixture_optimum_qr(std::span<const double> p_row, std::span<const Matrix> A,
                          std::span<const Vector> b, const Vector& target) {
    const int n = static_cast<int>(A[0].cols());
    Matrix gram = Matrix::Zero(n, n);
    Vector rhs = Vector::Zero(n);
    for (std::size_t j = 0; j < A.size(); ++j) {
        if (p_row[j] == 0.0) continue;
        gram.noalias() += p_row[j] * A[j].transpose() * A[j];
        rhs.noalias() += p_row[j] * A[j].transpose() * (target - b[j]);
    }
    return guarded_solve(gram, rhs, "SingularGram: mixture A'A is numerically singular");
}

Vector mixture_optimum_rm(std::span<const double> p_row, std::span<const Matrix> A,
                          std::span<const Vector> b) {
    const int n = static_cast<int>(A[0].cols());
    Matrix sym = Matrix::Zero(n, n);
    Vector rhs = Vector::Zero(n);
    for (std::size_t j = 0; j < A.size(); ++j) {
        if (p_row[j] == 0.0) continue;
        sym.noalias() += p_row[j] * (A[j] + A[j].transpose());
        rhs.noalias() += p_row[j] * b[j];
    }
    return guarded_solve(sym, -rhs, "SingularSymPart: mixture A+A' is numerically singular");
}

Vector optimal_input_qr(const JumpAffineModel& model, int i) {
    check_state_index(model, i);
    return mixture_optimum_qr(transition_row(model, i), state_matrices(model),
                              state_offsets(model), model.target);
}

Vector optimal_input_rm(const JumpAffineModel& model, int i) {
    check_state_index(model, i);
    return mixture_optimum_rm(transition_row(model, i), state_matrices(model),
                              state_offsets(model));
}

Vector optimal_input(const JumpAffineModel& model, int i) {
    return model.objective == Objective::QuadraticRegulation ? optimal_input_qr(model, i)
                                                             : optimal_input_rm(model, i);
}

double stage_cost_qr(const JumpAffineModel& model, int i, const Vector& x) {
    check_state_index(model, i);
    double cost = 0.0;
    for (int j = 0; j < model.num_states(); ++j) {
        const double p = model.chain.P(i, j);
        if (p == 0.0) continue;
        const AffineState& st = model.states[j];
        cost += p * ((model.target - st.A * x - st.b).squaredNorm() +
                     st.noise_sigma.squaredNorm());
    }
    return cost;
}

double stage_cost_rm(const JumpAffineModel& model, int i, const Vector& x) {
    check_state_index(model, i);
    double cost = 0.0;
    for (int j = 0; j < model.num_states(); ++j) {
        const double p = model.chain.P(i, j);
        if (p == 0.0) continue;
        const AffineState& st = model.states[j];
        cost -= p * x.dot(st.A * x + st.b);
    }
    return cost;
}

double stage_cost(const JumpAffineModel& model, int i, const Vector& x) {
    return model.objective == Objective::QuadraticRegulation ? stage_cost_qr(model, i, x)
                                                             : stage_cost_rm(model, i, x);
}

Vector foc_residual(const JumpAffineModel& model, int i, const Vector& x) {
    check_state_index(model, i);
    Vector r = Vector::Zero(model.input_dim());
    for (int j = 0; j < model.num_states(); ++j) {
        const double p = model.chain.P(i, j);
        if (p == 0.0) continue;
        const AffineState& st = model.states[j];
        if (model.objective == Objective::QuadraticRegulation) {
            r.noalias() += p * st.A.transpose() * (st.A * x + st.b - model.target);
        } else {
            r.noalias() += p * ((st.A + st.A.transpose()) * x + st.b);
        }
    }
    return r;
}

Vector expected_gradient_term(const JumpAffineModel& model, int i, const Vector& x_hat,
                              const Vector& delta, double c) {
    check_state_index(model, i);
    if (c <= 0.0) throw std::invalid_argument("perturbation scale c must be positive");
    if ((delta.array() == 0.0).any()) {
        throw ZeroPerturbationEntry("perturbation vector has a zero entry");
    }
    const Vector x_star = optimal_input(model, i);
    const Vector diff = x_hat - x_star;
    Vector mixed = Vector::Zero(model.input_dim());
    for (int j = 0; j < model.num_states(); ++j) {
        const double p = model.chain.P(i, j);
        if (p == 0.0) continue;
        const AffineState& st = model.states[j];
        if (model.objective == Objective::QuadraticRegulation) {
            mixed.noalias() += p * st.A.transpose() * (st.A * diff);
        } else {
            mixed.noalias() += p * ((st.A + st.A.transpose()) * diff);
        }
    }
    const double scale = model.objective == Objective::QuadraticRegulation ? 4.0 : -2.0;
    return scale * delta.cwiseInverse() * delta.dot(mixed);
}

namespace {

// Exact stage cost for the requested objective, independent of model.objective.
double objective_cost(const JumpAffineModel& model, int i, Objective objective,
                      const Vector& x) {
    return objective == Objective::QuadraticRegulation ? stage_cost_qr(model, i, x)
                                                       : stage_cost_rm(model, i, x);
}

struct AxisGrid {
    double lo = 0.0;
    double step = 0.0;
    int count = 1;

    double at(int idx) const { return count == 1 ? lo : lo + step * idx; }
};

AxisGrid make_axis(double lo, double hi, int points) {
    AxisGrid g;
    g.lo = lo;
    if (hi <= lo) return g;
    g.count = points < 2 ? 2 : points;
    g.step = (hi - lo) / (g.count - 1);
    return g;
}

// Scan the grid exhaustively. The cost along any axis line is an exact
// quadratic in the moving coordinate, so line values come from three direct
// evaluations interpolated with Lagrange weights; the argmin over the line is
// still found by comparing every grid value.
Vector grid_argmin(const JumpAffineModel& model, int i, Objective objective,
                   const std::vector<AxisGrid>& axes) {
    const int n = static_cast<int>(axes.size());
    Vector x(n);
    Vector best_x(n);
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> idx(n, 0);

    const AxisGrid& line = axes[n - 1];
    const double t0 = line.at(0);
    const double t1 = line.at(line.count / 2);
    const double t2 = line.at(line.count - 1);

    while (true) {
        for (int d = 0; d + 1 < n; ++d) x(d) = axes[d].at(idx[d]);

        if (line.count >= 3 && t0 < t1 && t1 < t2) {
            x(n - 1) = t0;
            const double f0 = objective_cost(model, i, objective, x);
            x(n - 1) = t1;
            const double f1 = objective_cost(model, i, objective, x);
            x(n - 1) = t2;
            const double f2 = objective_cost(model, i, objective, x);
            // quadratic through (t0,f0),(t1,f1),(t2,f2)
            const double d01 = (f1 - f0) / (t1 - t0);
            const double d12 = (f2 - f1) / (t2 - t1);
            const double q2 = (d12 - d01) / (t2 - t0);
            for (int k = 0; k < line.count; ++k) {
                const double t = line.at(k);
                const double f = f0 + (t - t0) * (d01 + q2 * (t - t1));
                if (f < best) {
                    best = f;
                    x(n - 1) = t;
                    best_x = x;
                }
            }
        } else {
            for (int k = 0; k < line.count; ++k) {
                x(n - 1) = line.at(k);
                const double f = objective_cost(model, i, objective, x);
                if (f < best) {
                    best = f;
                    best_x = x;
                }
            }
        }

        int d = n - 2;
        for (; d >= 0; --d) {
            if (++idx[d] < axes[d].count) break;
            idx[d] = 0;
        }
        if (d < 0) break;
    }
    return best_x;
}

}  // namespace

Vector brute_force_optimum(const JumpAffineModel& model, const FeasibleBox& box, int i,
                           Objective objective, const GridSpec& grid) {
    check_state_index(model, i);
    const int n = model.input_dim();
    if (n > 3) throw DimensionTooLarge("brute_force_optimum supports n <= 3");
    if (box.dim() != n) throw DimensionMismatch("box dimension differs from input dimension");

    double max_range = 0.0;
    for (int d = 0; d < n; ++d) max_range = std::max(max_range, box.upper(d) - box.lower(d));

    int level1 = grid.level1_points;
    if (level1 <= 0) {
        const double balanced =
            std::sqrt(std::max(1.0, 2.0 * grid.window_steps * max_range / grid.target_step));
        level1 = std::clamp(static_cast<int>(std::ceil(balanced)), 41, 2001);
    }

    std::vector<AxisGrid> coarse(n);
    for (int d = 0; d < n; ++d) coarse[d] = make_axis(box.lower(d), box.upper(d), level1);
    const Vector center = grid_argmin(model, i, objective, coarse);

    std::vector<AxisGrid> fine(n);
    for (int d = 0; d < n; ++d) {
        const double half = grid.window_steps * coarse[d].step;
        const double lo = std::max(box.lower(d), center(d) - half);
        const double hi = std::min(box.upper(d), center(d) + half);
        const int points = static_cast<int>(std::ceil((hi - lo) / grid.target_step)) + 1;
        fine[d] = make_axis(lo, hi, points);
    }
    return grid_argmin(model, i, objective, fine);
}

}  // namespace mspsa
