#pragma once

#include <span>

#include "mspsa/model.hpp"

namespace mspsa {

/// Condition-number guard for the mixture linear solves.
inline constexpr double kConditionGuard = 1e12;

/// Closed-form stage-cost minimizers over an arbitrary parameter mixture.
/// These raw forms are shared by the known-model oracle (true parameters)
/// and the certainty-equivalence baseline (estimated parameters).
///
/// Quadratic regulation:  argmin_x sum_j p_j ||target - A_j x - b_j||^2
///   = (sum_j p_j A_j' A_j)^-1 (sum_j p_j A_j' (target - b_j))
/// Revenue maximization:  argmin_x -sum_j p_j x'(A_j x + b_j)
///   = -(sum_j p_j (A_j + A_j'))^-1 (sum_j p_j b_j)
///
/// Throws SingularMixture when the mixture matrix has condition number
/// above kConditionGuard.
Vector mixture_optimum_qr(std::span<const double> p_row, std::span<const Matrix> A,
                          std::span<const Vector> b, const Vector& target);
Vector mixture_optimum_rm(std::span<const double> p_row, std::span<const Matrix> A,
                          std::span<const Vector> b);

/// Optimal input given previous state i (0-based) under the known model.
Vector optimal_input_qr(const JumpAffineModel& model, int i);
Vector optimal_input_rm(const JumpAffineModel& model, int i);
Vector optimal_input(const JumpAffineModel& model, int i);  // dispatch on model.objective

/// Exact expected stage cost given previous state i and input x (no sampling;
/// noise enters the quadratic cost only through its variance trace).
double stage_cost_qr(const JumpAffineModel& model, int i, const Vector& x);
double stage_cost_rm(const JumpAffineModel& model, int i, const Vector& x);
double stage_cost(const JumpAffineModel& model, int i, const Vector& x);

/// First-order-condition residual of the stage cost at x; zero at the optimum.
Vector foc_residual(const JumpAffineModel& model, int i, const Vector& x);

/// Exact conditional expectation of the SPSA update term
/// ((d+ - d-)/c) * delta_bar given previous state i, estimate x_hat, and
/// perturbation delta. For quadratic regulation this is
///   4 (delta_bar delta') (sum_j p_ij A_j' A_j) (x_hat - x*_i)
/// and for revenue maximization
///   -2 (delta_bar delta') (sum_j p_ij (A_j + A_j')) (x_hat - x*_i).
/// Used as the oracle in estimator-unbiasedness tests.
Vector expected_gradient_term(const JumpAffineModel& model, int i, const Vector& x_hat,
                              const Vector& delta, double c);

struct GridSpec {
    int level1_points = 0;      // per-dimension count; 0 = balance against target_step
    double target_step = 1e-4;  // level-2 grid resolution
    double window_steps = 4.0;  // level-2 half-width, in level-1 steps
};

/// Independent numerical argmin of the exact stage cost over a grid on the
/// box, refined to step <= target_step via two-level refinement. Both stage
/// costs are quadratic along axis lines, so each line of grid values is
/// produced by exact three-point interpolation and scanned exhaustively.
/// Requires n <= 3.
Vector brute_force_optimum(const JumpAffineModel& model, const FeasibleBox& box, int i,
                           Objective objective, const GridSpec& grid = {});

}  // namespace mspsa
