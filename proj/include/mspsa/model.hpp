#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mspsa/errors.hpp"

namespace mspsa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Objective { QuadraticRegulation, RevenueMaximization };

std::string to_string(Objective objective);
std::optional<Objective> objective_from_string(const std::string& name);

/// Finite exogenous Markov chain over states {0..K-1} with row-stochastic
/// transition matrix P. States are 0-based internally; config files and CSV
/// output use 1-based labels.
struct MarkovChain {
    Matrix P;            // K x K, rows sum to 1
    int initial_state = 0;

    int num_states() const { return static_cast<int>(P.rows()); }
};

/// One regime of the jump system: y = A x + b + w with w zero-mean Gaussian,
/// independent across coordinates with standard deviations noise_sigma.
struct AffineState {
    Matrix A;            // m x n, full column rank
    Vector b;            // m
    Vector noise_sigma;  // m, entries >= 0

    int output_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(A.cols()); }
};

struct JumpAffineModel {
    MarkovChain chain;
    std::vector<AffineState> states;  // size K, shared (m, n)
    Objective objective = Objective::QuadraticRegulation;
    Vector target;  // y*, used by the quadratic-regulation objective

    int num_states() const { return static_cast<int>(states.size()); }
    int output_dim() const { return states.empty() ? 0 : states.front().output_dim(); }
    int input_dim() const { return states.empty() ? 0 : states.front().input_dim(); }
};

/// Axis-aligned box [lower, upper]; the feasible input set. Euclidean
/// projection onto a box is the componentwise clamp.
struct FeasibleBox {
    Vector lower;
    Vector upper;

    int dim() const { return static_cast<int>(lower.size()); }
};

/// Clamp x into the box. Idempotent and nonexpansive in the 2-norm.
Vector project(const FeasibleBox& box, const Vector& x);

enum class ViolationKind {
    RowNotStochastic,
    RankDeficient,
    NotNegativeDefinite,
    DimensionMismatch,
    EmptyBox,
    NegativeNoiseSigma,
    BadInitialState,
};

std::string to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    int index;  // row or state index (0-based), -1 when not applicable
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string describe() const;
};

inline constexpr double kDefaultRankTol = 1e-9;

/// Check every type invariant of the model and box; returns a report listing
/// all violations (empty report = valid). rank_tol is relative to the largest
/// singular value of each A_k.
ValidationReport validate_model(const JumpAffineModel& model, const FeasibleBox& box,
                                double rank_tol = kDefaultRankTol);

/// Throws ConfigError carrying the full report text if validation fails.
void ensure_valid(const JumpAffineModel& model, const FeasibleBox& box,
                  double rank_tol = kDefaultRankTol);

}  // namespace mspsa
