#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mspsa/harness.hpp"
#include "mspsa/metrics.hpp"
#include "mspsa/oracle.hpp"
#include "mspsa/policies.hpp"
#include "mspsa/simulate.hpp"
#include "mspsa/version.hpp"

namespace py = pybind11;
using namespace mspsa;

namespace {

py::dict trajectory_to_dict(const Trajectory& traj) {
    const py::ssize_t horizon = static_cast<py::ssize_t>(traj.records.size());
    py::array_t<long> t(horizon);
    py::array_t<int> s_prev(horizon), s_curr(horizon);
    py::array_t<double> x({horizon, static_cast<py::ssize_t>(traj.input_dim)});
    py::array_t<double> y({horizon, static_cast<py::ssize_t>(traj.output_dim)});
    py::array_t<double> stage_cost(horizon), stage_regret(horizon), input_sq_err(horizon),
        est_sq_err(horizon);

    auto t_view = t.mutable_unchecked<1>();
    auto sp_view = s_prev.mutable_unchecked<1>();
    auto sc_view = s_curr.mutable_unchecked<1>();
    auto x_view = x.mutable_unchecked<2>();
    auto y_view = y.mutable_unchecked<2>();
    auto cost_view = stage_cost.mutable_unchecked<1>();
    auto regret_view = stage_regret.mutable_unchecked<1>();
    auto input_view = input_sq_err.mutable_unchecked<1>();
    auto est_view = est_sq_err.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < horizon; ++i) {
        const StepRecord& rec = traj.records[static_cast<std::size_t>(i)];
        t_view(i) = rec.t;
        sp_view(i) = rec.s_prev + 1;
        sc_view(i) = rec.s_curr + 1;
        for (int j = 0; j < traj.input_dim; ++j) x_view(i, j) = rec.x(j);
        for (int j = 0; j < traj.output_dim; ++j) y_view(i, j) = rec.y(j);
        cost_view(i) = rec.stage_cost;
        regret_view(i) = rec.stage_regret;
        input_view(i) = rec.input_sq_err;
        est_view(i) = rec.est_sq_err;
    }
    py::dict out;
    out["t"] = t;
    out["s_prev"] = s_prev;
    out["s_t"] = s_curr;
    out["x"] = x;
    out["y"] = y;
    out["stage_cost"] = stage_cost;
    out["stage_regret"] = stage_regret;
    out["input_sq_err"] = input_sq_err;
    out["est_sq_err"] = est_sq_err;
    out["lse_fallback_count"] = traj.lse_fallback_count;
    return out;
}

py::dict slope_to_dict(const SlopeFit& fit) {
    py::dict out;
    out["valid"] = fit.valid;
    out["points"] = fit.points;
    out["slope"] = fit.slope;
    out["stderr"] = fit.stderror;
    out["ci"] = py::make_tuple(fit.ci_lo, fit.ci_hi);
    return out;
}

py::dict summary_to_dict(const ExperimentSummary& summary) {
    py::dict out;
    out["version"] = summary.version;
    out["config_hash"] = summary.config_hash;
    out["seed"] = summary.seed;
    out["summary_txt"] = summary.summary_txt;
    out["summary_json"] = summary.summary_json;
    py::list policies;
    for (const auto& policy : summary.policies) {
        py::dict node;
        node["label"] = policy.label;
        node["name"] = policy.policy_name;
        node["regret_slope"] = slope_to_dict(policy.regret_slope);
        node["est_mse_slope"] = slope_to_dict(policy.est_mse_slope);
        py::list per_state;
        for (const auto& fit : policy.per_state_est_slope) per_state.append(slope_to_dict(fit));
        node["per_state_est_slope"] = per_state;
        node["final_mean_regret"] = policy.final_mean_regret;
        node["final_mean_est_mse"] = policy.final_mean_est_mse;
        node["final_mean_cum_input_mse"] = policy.final_mean_cum_input_mse;
        node["curves_csv"] = policy.curves_csv;
        node["est_by_update_csv"] = policy.est_by_update_csv;
        policies.append(node);
    }
    out["policies"] = policies;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Online learning and optimization of Markov jump affine models";
    m.attr("__version__") = kVersion;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SingularMixture>(m, "SingularMixtureError", PyExc_ArithmeticError);

    py::enum_<Objective>(m, "Objective")
        .value("QUADRATIC_REGULATION", Objective::QuadraticRegulation)
        .value("REVENUE_MAXIMIZATION", Objective::RevenueMaximization);

    py::class_<MarkovChain>(m, "MarkovChain")
        .def(py::init([](const Matrix& P, int initial_state) {
                 MarkovChain chain;
                 chain.P = P;
                 chain.initial_state = initial_state - 1;
                 return chain;
             }),
             py::arg("P"), py::arg("initial_state") = 1)
        .def_property_readonly("num_states", &MarkovChain::num_states)
        .def_readonly("P", &MarkovChain::P);

    py::class_<AffineState>(m, "AffineState")
        .def(py::init([](const Matrix& A, const Vector& b, const Vector& noise_sigma) {
                 AffineState st;
                 st.A = A;
                 st.b = b;
                 st.noise_sigma = noise_sigma;
                 return st;
             }),
             py::arg("A"), py::arg("b"), py::arg("noise_sigma"))
        .def_readonly("A", &AffineState::A)
        .def_readonly("b", &AffineState::b)
        .def_readonly("noise_sigma", &AffineState::noise_sigma);

    py::class_<JumpAffineModel>(m, "JumpAffineModel")
        .def(py::init([](const MarkovChain& chain, const std::vector<AffineState>& states,
                         Objective objective, std::optional<Vector> target) {
                 JumpAffineModel model;
                 model.chain = chain;
                 model.states = states;
                 model.objective = objective;
                 if (target) model.target = *target;
                 return model;
             }),
             py::arg("chain"), py::arg("states"), py::arg("objective"),
             py::arg("target") = std::nullopt)
        .def_property_readonly("num_states", &JumpAffineModel::num_states)
        .def_property_readonly("input_dim", &JumpAffineModel::input_dim)
        .def_property_readonly("output_dim", &JumpAffineModel::output_dim)
        .def_readonly("objective", &JumpAffineModel::objective)
        .def_readonly("target", &JumpAffineModel::target);

    py::class_<FeasibleBox>(m, "FeasibleBox")
        .def(py::init([](const Vector& lower, const Vector& upper) {
                 FeasibleBox box;
                 box.lower = lower;
                 box.upper = upper;
                 return box;
             }),
             py::arg("lower"), py::arg("upper"))
        .def_readonly("lower", &FeasibleBox::lower)
        .def_readonly("upper", &FeasibleBox::upper);

    m.def("project", &project, py::arg("box"), py::arg("x"),
          "Euclidean projection (componentwise clamp) onto the box");

    m.def(
        "validate_model",
        [](const JumpAffineModel& model, const FeasibleBox& box, double rank_tol) {
            const auto report = validate_model(model, box, rank_tol);
            std::vector<std::string> out;
            for (const auto& v : report.violations) {
                out.push_back(to_string(v.kind) +
                              (v.index >= 0 ? "(" + std::to_string(v.index + 1) + ")" : "") +
                              ": " + v.message);
            }
            return out;
        },
        py::arg("model"), py::arg("box"), py::arg("rank_tol") = kDefaultRankTol,
        "Returns the list of violated invariants (empty = valid)");

    // known-model oracle (state indices 1-based at this surface)
    m.def(
        "optimal_input_qr",
        [](const JumpAffineModel& model, int state) { return optimal_input_qr(model, state - 1); },
        py::arg("model"), py::arg("state") = 1);
    m.def(
        "optimal_input_rm",
        [](const JumpAffineModel& model, int state) { return optimal_input_rm(model, state - 1); },
        py::arg("model"), py::arg("state") = 1);
    m.def(
        "stage_cost_qr",
        [](const JumpAffineModel& model, int state, const Vector& x) {
            return stage_cost_qr(model, state - 1, x);
        },
        py::arg("model"), py::arg("state"), py::arg("x"));
    m.def(
        "stage_cost_rm",
        [](const JumpAffineModel& model, int state, const Vector& x) {
            return stage_cost_rm(model, state - 1, x);
        },
        py::arg("model"), py::arg("state"), py::arg("x"));
    m.def(
        "expected_gradient_term",
        [](const JumpAffineModel& model, int state, const Vector& x_hat, const Vector& delta,
           double c) { return expected_gradient_term(model, state - 1, x_hat, delta, c); },
        py::arg("model"), py::arg("state"), py::arg("x_hat"), py::arg("delta"), py::arg("c"));
    m.def(
        "brute_force_optimum",
        [](const JumpAffineModel& model, const FeasibleBox& box, int state, Objective objective,
           double target_step) {
            GridSpec spec;
            spec.target_step = target_step;
            return brute_force_optimum(model, box, state - 1, objective, spec);
        },
        py::arg("model"), py::arg("box"), py::arg("state"), py::arg("objective"),
        py::arg("target_step") = 1e-4);
    m.def(
        "stage_regret_qr",
        [](const JumpAffineModel& model, int s_curr, int s_prev, const Vector& x) {
            return stage_regret_qr(model, s_curr - 1, s_prev - 1, x);
        },
        py::arg("model"), py::arg("s_t"), py::arg("s_prev"), py::arg("x"));
    m.def(
        "stage_regret_rm",
        [](const JumpAffineModel& model, int s_curr, int s_prev, const Vector& x) {
            return stage_regret_rm(model, s_curr - 1, s_prev - 1, x);
        },
        py::arg("model"), py::arg("s_t"), py::arg("s_prev"), py::arg("x"));

    m.def(
        "run_episode",
        [](const JumpAffineModel& model, const FeasibleBox& box, const std::string& policy,
           const Vector& initial_input, long horizon, std::uint64_t seed,
           std::uint64_t replication, double gamma, long N, double gamma_prime, long N_prime) {
            std::unique_ptr<Policy> p;
            if (policy == "mspsa") {
                p = std::make_unique<MspsaPolicy>(model.objective, model.target, box,
                                                  initial_input,
                                                  MspsaGains{gamma, N, gamma_prime, N_prime});
            } else if (policy == "greedy_lse") {
                p = std::make_unique<GreedyLsePolicy>(model.objective, model.target, box,
                                                      initial_input);
            } else if (policy == "oracle") {
                p = std::make_unique<OraclePolicy>(model);
            } else if (policy == "constant") {
                p = std::make_unique<ConstantPolicy>(initial_input);
            } else {
                throw ConfigError("policy", "unknown policy '" + policy + "'");
            }
            const auto traj = run_episode(model, box, *p, horizon, RngStream(seed, replication));
            return trajectory_to_dict(traj);
        },
        py::arg("model"), py::arg("box"), py::arg("policy"), py::arg("initial_input"),
        py::arg("horizon"), py::arg("seed") = 0, py::arg("replication") = 0,
        py::arg("gamma") = 1.0, py::arg("N") = 0, py::arg("gamma_prime") = 1.0,
        py::arg("N_prime") = 0,
        "Run one episode and return the per-period arrays (1-based state labels)");

    m.def(
        "run_experiment_file",
        [](const std::string& path) { return summary_to_dict(run_experiment(load_config(path)).summary); },
        py::arg("config_path"), "Load a config file, run it, and return the summary");
    m.def(
        "run_experiment_json",
        [](const std::string& text) {
            return summary_to_dict(run_experiment(parse_config(text)).summary);
        },
        py::arg("config_json"), "Parse a config from a JSON string, run it, return the summary");
    m.def(
        "validate_config_file",
        [](const std::string& path) {
            load_config(path);
            return true;
        },
        py::arg("config_path"));
    m.def("emit_config_json",
          [](const std::string& text) { return emit_config(parse_config(text)); });
}
