#include "mspsa/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

namespace mspsa {

std::string to_string(Objective objective) {
    switch (objective) {
        case Objective::QuadraticRegulation: return "quadratic_regulation";
        case Objective::RevenueMaximization: return "revenue_maximization";
    }
    return "unknown";
}

std::optional<Objective> objective_from_string(const std::string& name) {
    if (name == "quadratic_regulation") return Objective::QuadraticRegulation;
    if (name == "revenue_maximization") return Objective::RevenueMaximization;
    return std::nullopt;
}

Vector project(const FeasibleBox& box, const Vector& x) {
    if (x.size() != box.lower.size()) {
        throw DimensionMismatch("project: input has dimension " + std::to_string(x.size()) +
                                ", box has dimension " + std::to_string(box.lower.size()));
    }
    return x.cwiseMax(box.lower).cwiseMin(box.upper);
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::RowNotStochastic: return "RowNotStochastic";
        case ViolationKind::RankDeficient: return "RankDeficient";
        case ViolationKind::NotNegativeDefinite: return "NotNegativeDefinite";
        case ViolationKind::DimensionMismatch: return "DimensionMismatch";
        case ViolationKind::EmptyBox: return "EmptyBox";
        case ViolationKind::NegativeNoiseSigma: return "NegativeNoiseSigma";
        case ViolationKind::BadInitialState: return "BadInitialState";
    }
    return "Unknown";
}

std::string ValidationReport::describe() const {
    std::ostringstream out;
    for (const auto& v : violations) {
        out << to_string(v.kind);
        if (v.index >= 0) out << "(" << v.index + 1 << ")";
        out << ": " << v.message << "\n";
    }
    return out.str();
}

namespace {

constexpr double kRowSumTol = 1e-12;

void check_chain(const MarkovChain& chain, ValidationReport& report) {
    const int k = chain.num_states();
    if (k < 1) {
        report.violations.push_back({ViolationKind::DimensionMismatch, -1, "chain has no states"});
        return;
    }
    if (chain.P.cols() != k) {
        report.violations.push_back(
            {ViolationKind::DimensionMismatch, -1, "transition matrix is not square"});
        return;
    }
    for (int i = 0; i < k; ++i) {
        bool entries_ok = true;
        for (int j = 0; j < k; ++j) {
            const double p = chain.P(i, j);
            if (!std::isfinite(p) || p < 0.0 || p > 1.0) entries_ok = false;
        }
        const double row_sum = chain.P.row(i).sum();
        if (!entries_ok || std::abs(row_sum - 1.0) > kRowSumTol) {
            std::ostringstream msg;
            msg << "row " << i + 1 << " sums to " << row_sum << " or has entries outside [0,1]";
            report.violations.push_back({ViolationKind::RowNotStochastic, i, msg.str()});
        }
    }
    if (chain.initial_state < 0 || chain.initial_state >= k) {
        report.violations.push_back(
            {ViolationKind::BadInitialState, -1,
             "initial state " + std::to_string(chain.initial_state + 1) + " not in {1.." +
                 std::to_string(k) + "}"});
    }
}

void check_states(const JumpAffineModel& model, double rank_tol, ValidationReport& report) {
    if (model.states.empty()) {
        report.violations.push_back({ViolationKind::DimensionMismatch, -1, "model has no states"});
        return;
    }
    if (model.chain.num_states() != model.num_states()) {
        report.violations.push_back({ViolationKind::DimensionMismatch, -1,
                                     "chain has " + std::to_string(model.chain.num_states()) +
                                         " states, model has " +
                                         std::to_string(model.num_states())});
    }
    const int m = model.states.front().output_dim();
    const int n = model.states.front().input_dim();
    for (int k = 0; k < model.num_states(); ++k) {
        const AffineState& st = model.states[k];
        if (st.output_dim() != m || st.input_dim() != n) {
            report.violations.push_back(
                {ViolationKind::DimensionMismatch, k, "state dimensions differ from state 1"});
            continue;
        }
        if (st.b.size() != m) {
            report.violations.push_back(
                {ViolationKind::DimensionMismatch, k, "offset b has wrong length"});
        }
        if (st.noise_sigma.size() != m) {
            report.violations.push_back(
                {ViolationKind::DimensionMismatch, k, "noise_sigma has wrong length"});
        } else if ((st.noise_sigma.array() < 0.0).any()) {
            report.violations.push_back(
                {ViolationKind::NegativeNoiseSigma, k, "noise_sigma has a negative entry"});
        }
        if (m < n) {
            report.violations.push_back(
                {ViolationKind::RankDeficient, k, "A has more columns than rows"});
        } else {
            Eigen::JacobiSVD<Matrix> svd(st.A);
            const double smax = svd.singularValues()(0);
            const double smin = svd.singularValues()(svd.singularValues().size() - 1);
            if (!(smin > rank_tol * smax) || smax == 0.0) {
                std::ostringstream msg;
                msg << "A is rank deficient (smallest singular value " << smin << ")";
                report.violations.push_back({ViolationKind::RankDeficient, k, msg.str()});
            }
        }
        if (model.objective == Objective::RevenueMaximization && m == n) {
            const Matrix sym = 0.5 * (st.A + st.A.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
            const double lambda_max = eig.eigenvalues().maxCoeff();
            if (!(lambda_max < -rank_tol)) {
                std::ostringstream msg;
                msg << "symmetric part of A has largest eigenvalue " << lambda_max;
                report.violations.push_back({ViolationKind::NotNegativeDefinite, k, msg.str()});
            }
        }
    }
    if (model.objective == Objective::RevenueMaximization && m != n) {
        report.violations.push_back({ViolationKind::DimensionMismatch, -1,
                                     "revenue maximization requires matching input and output "
                                     "dimensions"});
    }
    if (model.objective == Objective::QuadraticRegulation && model.target.size() != m) {
        report.violations.push_back(
            {ViolationKind::DimensionMismatch, -1, "target has wrong length"});
    }
}

void check_box(const JumpAffineModel& model, const FeasibleBox& box, ValidationReport& report) {
    if (box.lower.size() != box.upper.size() || box.dim() == 0) {
        report.violations.push_back({ViolationKind::EmptyBox, -1, "box bounds have unequal or zero length"});
        return;
    }
    if (!model.states.empty() && box.dim() != model.input_dim()) {
        report.violations.push_back(
            {ViolationKind::DimensionMismatch, -1, "box dimension differs from input dimension"});
    }
    for (int j = 0; j < box.dim(); ++j) {
        if (!std::isfinite(box.lower(j)) || !std::isfinite(box.upper(j)) ||
            box.lower(j) > box.upper(j)) {
            report.violations.push_back(
                {ViolationKind::EmptyBox, -1,
                 "coordinate " + std::to_string(j + 1) + " has empty or unbounded range"});
            return;
        }
    }
}

}  // namespace

ValidationReport validate_model(const JumpAffineModel& model, const FeasibleBox& box,
                                double rank_tol) {
    ValidationReport report;
    check_chain(model.chain, report);
    check_states(model, rank_tol, report);
    check_box(model, box, report);
    return report;
}

void ensure_valid(const JumpAffineModel& model, const FeasibleBox& box, double rank_tol) {
    ValidationReport report = validate_model(model, box, rank_tol);
    if (!report.ok()) throw ConfigError("model validation failed:\n" + report.describe());
}

}  // namespace mspsa
