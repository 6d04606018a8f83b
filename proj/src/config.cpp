#include "mspsa/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mspsa/oracle.hpp"
#include "mspsa/rng.hpp"

namespace mspsa {

using nlohmann::json;

namespace {

const json& require_key(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw ConfigError(path + "." + key, "missing required key");
    }
    return obj.at(key);
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
}

long as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<long>();
}

Vector as_vector(const json& v, const std::string& path, int expected = -1) {
    Vector out;
    if (v.is_number()) {
        if (expected < 0) throw ConfigError(path, "scalar shorthand needs a known dimension");
        out = Vector::Constant(expected, v.get<double>());
        return out;
    }
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array");
    out.resize(static_cast<int>(v.size()));
    for (std::size_t j = 0; j < v.size(); ++j) {
        out(static_cast<int>(j)) = as_number(v[j], path + "[" + std::to_string(j) + "]");
    }
    if (expected >= 0 && out.size() != expected) {
        throw ConfigError(path, "expected length " + std::to_string(expected) + ", got " +
                                    std::to_string(out.size()));
    }
    return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty() || !v[0].is_array()) {
        throw ConfigError(path, "expected an array of rows");
    }
    const int rows = static_cast<int>(v.size());
    const int cols = static_cast<int>(v[0].size());
    Matrix out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const auto& row = v[i];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw ConfigError(path, "ragged rows");
        }
        for (int j = 0; j < cols; ++j) {
            out(i, j) = as_number(row[j], path + "[" + std::to_string(i) + "][" +
                                              std::to_string(j) + "]");
        }
    }
    return out;
}

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (int j = 0; j < v.size(); ++j) out.push_back(v(j));
    return out;
}

json matrix_to_json(const Matrix& m) {
    json out = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

std::string violation_field(const Violation& v) {
    switch (v.kind) {
        case ViolationKind::RowNotStochastic:
            return "chain.P.row" + std::to_string(v.index + 1);
        case ViolationKind::BadInitialState:
            return "chain.initial_state";
        case ViolationKind::RankDeficient:
        case ViolationKind::NotNegativeDefinite:
            return "states[" + std::to_string(v.index + 1) + "].A";
        case ViolationKind::NegativeNoiseSigma:
            return "states[" + std::to_string(v.index + 1) + "].noise_sigma";
        case ViolationKind::EmptyBox:
            return "feasible_box";
        case ViolationKind::DimensionMismatch:
            break;
    }
    return "model";
}

std::vector<AffineState> generate_states(const GeneratorSpec& spec, const MarkovChain& chain,
                                         Objective objective, const Vector& target,
                                         const FeasibleBox& box) {
    const int n = spec.dim;
    const int num_states = chain.num_states();
    RngStream rng(spec.seed, 0);

    Vector margin = 0.15 * (box.upper - box.lower);
    const Vector lo = box.lower + margin;
    const Vector hi = box.upper - margin;

    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<AffineState> states;
        states.reserve(num_states);
        for (int k = 0; k < num_states; ++k) {
            Matrix gauss(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) gauss(i, j) = rng.gaussian();
            }
            Eigen::HouseholderQR<Matrix> qr(gauss);
            Matrix q = qr.householderQ();
            const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
            for (int j = 0; j < n; ++j) {
                if (r(j, j) < 0) q.col(j) *= -1.0;
            }
            Vector eigs(n);
            for (int j = 0; j < n; ++j) {
                eigs(j) = spec.eig_lo + (spec.eig_hi - spec.eig_lo) * rng.uniform();
            }
            Matrix a = q * eigs.asDiagonal() * q.transpose();
            a = 0.5 * (a + a.transpose());

            Vector anchor(n);
            for (int j = 0; j < n; ++j) anchor(j) = lo(j) + (hi(j) - lo(j)) * rng.uniform();

            AffineState st;
            st.A = a;
            st.b = objective == Objective::QuadraticRegulation
                       ? Vector(target - a * anchor)
                       : Vector(-(a + a.transpose()) * anchor);
            st.noise_sigma = Vector::Constant(n, spec.noise_sigma);
            states.push_back(std::move(st));
        }

        JumpAffineModel candidate;
        candidate.chain = chain;
        candidate.states = states;
        candidate.objective = objective;
        candidate.target = target;
        if (!validate_model(candidate, box).ok()) continue;

        bool optima_inside = true;
        for (int i = 0; i < num_states && optima_inside; ++i) {
            const Vector x_star = optimal_input(candidate, i);
            for (int j = 0; j < n; ++j) {
                if (x_star(j) < box.lower(j) || x_star(j) > box.upper(j)) {
                    optima_inside = false;
                    break;
                }
            }
        }
        if (optima_inside) return states;
    }
    throw ConfigError("model.generator",
                      "could not generate states whose mixture optima fall inside the box");
}

GeneratorSpec parse_generator(const json& gen_node) {
    GeneratorSpec spec;
    spec.dim = static_cast<int>(
        as_integer(require_key(gen_node, "dim", "model.generator"), "model.generator.dim"));
    if (spec.dim < 1) throw ConfigError("model.generator.dim", "must be >= 1");
    const Vector interval =
        as_vector(require_key(gen_node, "eigenvalue_interval", "model.generator"),
                  "model.generator.eigenvalue_interval", 2);
    spec.eig_lo = interval(0);
    spec.eig_hi = interval(1);
    if (!(spec.eig_lo <= spec.eig_hi)) {
        throw ConfigError("model.generator.eigenvalue_interval", "lo must be <= hi");
    }
    spec.noise_sigma = as_number(require_key(gen_node, "noise_sigma", "model.generator"),
                                 "model.generator.noise_sigma");
    if (spec.noise_sigma < 0) throw ConfigError("model.generator.noise_sigma", "must be >= 0");
    spec.seed = require_key(gen_node, "seed", "model.generator").get<std::uint64_t>();
    return spec;
}

PolicyConfig parse_policy(const json& node, const std::string& path) {
    PolicyConfig policy;
    policy.name = require_key(node, "name", path).get<std::string>();
    if (policy.name != "mspsa" && policy.name != "greedy_lse" && policy.name != "oracle" &&
        policy.name != "constant") {
        throw ConfigError(path + ".name", "unknown policy '" + policy.name + "'");
    }
    policy.label = node.value("label", policy.name);

    if (policy.name == "mspsa") {
        if (node.contains("gamma")) {
            policy.gains.gamma = as_number(node.at("gamma"), path + ".gamma");
        } else if (node.contains("sigma_lb")) {
            const double lb = as_number(node.at("sigma_lb"), path + ".sigma_lb");
            if (lb <= 0.0) throw ConfigError(path + ".sigma_lb", "must be positive");
            policy.gains.gamma = 1.0 / (8.0 * lb);
        } else {
            throw ConfigError(path, "mspsa needs either gamma or sigma_lb");
        }
        if (node.contains("sigma_lb")) {
            policy.sigma_lb = as_number(node.at("sigma_lb"), path + ".sigma_lb");
        }
        policy.gains.step_offset = node.contains("N") ? as_integer(node.at("N"), path + ".N") : 0;
        policy.gains.gamma_prime =
            node.contains("gamma_prime") ? as_number(node.at("gamma_prime"), path + ".gamma_prime")
                                         : 1.0;
        policy.gains.perturb_offset =
            node.contains("N_prime") ? as_integer(node.at("N_prime"), path + ".N_prime") : 0;
        if (policy.gains.gamma <= 0.0) throw ConfigError(path + ".gamma", "must be positive");
        if (policy.gains.gamma_prime <= 0.0) {
            throw ConfigError(path + ".gamma_prime", "must be positive");
        }
        if (policy.gains.step_offset < 0) throw ConfigError(path + ".N", "must be >= 0");
        if (policy.gains.perturb_offset < 0) throw ConfigError(path + ".N_prime", "must be >= 0");
        const std::string law = node.value("perturbation", "rademacher");
        if (law == "rademacher") {
            policy.perturbation = PerturbationLaw::Rademacher;
        } else if (law == "two_point_half") {
            policy.perturbation = PerturbationLaw::TwoPointHalf;
        } else {
            throw ConfigError(path + ".perturbation", "unknown law '" + law + "'");
        }
    }
    if (policy.name == "constant" && node.contains("input")) {
        policy.constant_input = as_vector(node.at("input"), path + ".input");
    }
    return policy;
}

json policy_to_json(const PolicyConfig& policy) {
    json node;
    node["name"] = policy.name;
    node["label"] = policy.label;
    if (policy.name == "mspsa") {
        node["gamma"] = policy.gains.gamma;
        node["N"] = policy.gains.step_offset;
        node["gamma_prime"] = policy.gains.gamma_prime;
        node["N_prime"] = policy.gains.perturb_offset;
        node["perturbation"] = policy.perturbation == PerturbationLaw::Rademacher
                                   ? "rademacher"
                                   : "two_point_half";
        if (policy.sigma_lb) node["sigma_lb"] = *policy.sigma_lb;
    }
    if (policy.constant_input) node["input"] = vector_to_json(*policy.constant_input);
    return node;
}

ExperimentConfig parse_json(const json& root) {
    ExperimentConfig config;

    const json& model_node = require_key(root, "model", "");
    const std::string objective_name =
        require_key(model_node, "objective", "model").get<std::string>();
    const auto objective = objective_from_string(objective_name);
    if (!objective) throw ConfigError("model.objective", "unknown objective '" + objective_name + "'");
    config.model.objective = *objective;

    const json& chain_node = require_key(model_node, "chain", "model");
    config.model.chain.P = as_matrix(require_key(chain_node, "P", "model.chain"), "model.chain.P");
    config.model.chain.initial_state =
        static_cast<int>(chain_node.value("initial_state", 1)) - 1;

    // box before states: the generator and scalar shorthands need it
    const json& box_node = require_key(root, "feasible_box", "");
    {
        const json& lower = require_key(box_node, "lower", "feasible_box");
        const json& upper = require_key(box_node, "upper", "feasible_box");
        int dim = -1;
        if (lower.is_array()) dim = static_cast<int>(lower.size());
        if (dim < 0 && upper.is_array()) dim = static_cast<int>(upper.size());
        if (dim < 0 && model_node.contains("generator")) {
            dim = static_cast<int>(
                as_integer(require_key(model_node.at("generator"), "dim", "model.generator"),
                           "model.generator.dim"));
        }
        if (dim < 0 && model_node.contains("states") && model_node.at("states").is_array() &&
            !model_node.at("states").empty()) {
            const json& first = model_node.at("states")[0];
            if (first.contains("A")) {
                const Matrix a = as_matrix(first.at("A"), "model.states[1].A");
                dim = static_cast<int>(a.cols());
            }
        }
        config.box.lower = as_vector(lower, "feasible_box.lower", dim);
        config.box.upper = as_vector(upper, "feasible_box.upper", static_cast<int>(config.box.lower.size()));
    }

    if (model_node.contains("states")) {
        const json& states_node = model_node.at("states");
        if (!states_node.is_array() || states_node.empty()) {
            throw ConfigError("model.states", "expected a non-empty array");
        }
        int m = -1;
        for (std::size_t k = 0; k < states_node.size(); ++k) {
            const std::string path = "model.states[" + std::to_string(k + 1) + "]";
            const json& st_node = states_node[k];
            AffineState st;
            st.A = as_matrix(require_key(st_node, "A", path), path + ".A");
            if (m < 0) m = static_cast<int>(st.A.rows());
            st.b = as_vector(require_key(st_node, "b", path), path + ".b",
                             static_cast<int>(st.A.rows()));
            st.noise_sigma = st_node.contains("noise_sigma")
                                 ? as_vector(st_node.at("noise_sigma"), path + ".noise_sigma",
                                             static_cast<int>(st.A.rows()))
                                 : Vector::Zero(st.A.rows());
            config.model.states.push_back(std::move(st));
        }
        if (model_node.contains("target")) {
            config.model.target = as_vector(model_node.at("target"), "model.target", m);
        }
        if (model_node.contains("generator")) {
            // provenance only; explicit states win
            config.generator = parse_generator(model_node.at("generator"));
        }
    } else if (model_node.contains("generator")) {
        const GeneratorSpec spec = parse_generator(model_node.at("generator"));
        if (model_node.contains("target")) {
            config.model.target = as_vector(model_node.at("target"), "model.target", spec.dim);
        }
        config.model.states = generate_states(spec, config.model.chain, config.model.objective,
                                              config.model.target, config.box);
        config.generator = spec;
    } else {
        throw ConfigError("model", "needs either states or generator");
    }

    config.horizon = as_integer(require_key(root, "horizon", ""), "horizon");
    if (config.horizon < 1) throw ConfigError("horizon", "must be >= 1");
    config.replications = root.contains("replications")
                              ? as_integer(root.at("replications"), "replications")
                              : 1;
    if (config.replications < 1) throw ConfigError("replications", "must be >= 1");
    config.seed = root.contains("seed") ? root.at("seed").get<std::uint64_t>() : 0;
    config.output_dir = root.value("output_dir", "out");
    config.threads = root.contains("threads")
                         ? static_cast<int>(as_integer(root.at("threads"), "threads"))
                         : 0;
    if (config.threads < 0) throw ConfigError("threads", "must be >= 0");
    config.rank_tol = root.contains("rank_tol") ? as_number(root.at("rank_tol"), "rank_tol")
                                                : kDefaultRankTol;
    if (config.rank_tol <= 0.0) throw ConfigError("rank_tol", "must be positive");

    config.initial_input =
        root.contains("initial_input")
            ? as_vector(root.at("initial_input"), "initial_input",
                        static_cast<int>(config.box.lower.size()))
            : Vector(0.5 * (config.box.lower + config.box.upper));

    if (root.contains("checkpoints")) {
        const json& cps = root.at("checkpoints");
        if (!cps.is_array() || cps.empty()) throw ConfigError("checkpoints", "expected an array");
        long prev = 0;
        for (std::size_t j = 0; j < cps.size(); ++j) {
            const long value = as_integer(cps[j], "checkpoints[" + std::to_string(j) + "]");
            if (value <= prev || value > config.horizon) {
                throw ConfigError("checkpoints",
                                  "must be strictly increasing within [1, horizon]");
            }
            config.checkpoints.push_back(value);
            prev = value;
        }
    } else {
        config.checkpoints = default_checkpoints(config.horizon);
    }

    if (root.contains("slope_window")) {
        const Vector window = as_vector(root.at("slope_window"), "slope_window", 2);
        config.slope_window_lo = static_cast<long>(window(0));
        config.slope_window_hi = static_cast<long>(window(1));
        if (config.slope_window_lo < 1 || config.slope_window_lo >= config.slope_window_hi ||
            config.slope_window_hi > config.horizon) {
            throw ConfigError("slope_window", "expected 1 <= lo < hi <= horizon");
        }
    } else {
        config.slope_window_lo = std::max<long>(1, config.horizon / 10);
        config.slope_window_hi = config.horizon;
    }

    const json& policies_node = require_key(root, "policies", "");
    if (!policies_node.is_array() || policies_node.empty()) {
        throw ConfigError("policies", "expected a non-empty array");
    }
    std::set<std::string> labels;
    for (std::size_t j = 0; j < policies_node.size(); ++j) {
        PolicyConfig policy =
            parse_policy(policies_node[j], "policies[" + std::to_string(j + 1) + "]");
        if (!labels.insert(policy.label).second) {
            throw ConfigError("policies[" + std::to_string(j + 1) + "].label",
                              "duplicate label '" + policy.label + "'");
        }
        config.policies.push_back(std::move(policy));
    }

    const ValidationReport report = validate_model(config.model, config.box, config.rank_tol);
    if (!report.ok()) {
        throw ConfigError(violation_field(report.violations.front()),
                          "model validation failed:\n" + report.describe());
    }
    if (config.initial_input.size() != config.model.input_dim()) {
        throw ConfigError("initial_input", "dimension differs from the model input dimension");
    }
    for (std::size_t j = 0; j < config.policies.size(); ++j) {
        const auto& input = config.policies[j].constant_input;
        if (input && input->size() != config.model.input_dim()) {
            throw ConfigError("policies[" + std::to_string(j + 1) + "].input",
                              "dimension differs from the model input dimension");
        }
    }
    return config;
}

}  // namespace

std::vector<long> default_checkpoints(long horizon) {
    std::vector<long> points;
    if (horizon <= 30) {
        for (long t = 1; t <= horizon; ++t) points.push_back(t);
        return points;
    }
    const double log_hi = std::log(static_cast<double>(horizon));
    long prev = 0;
    for (int j = 0; j < 30; ++j) {
        const double frac = static_cast<double>(j) / 29.0;
        long value = static_cast<long>(std::llround(std::exp(frac * log_hi)));
        value = std::clamp(value, prev + 1, horizon);
        points.push_back(value);
        prev = value;
    }
    points.back() = horizon;
    return points;
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("ParseError: ") + err.what());
    }
    return parse_json(root);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string emit_config(const ExperimentConfig& config) {
    json root;
    json model_node;
    model_node["objective"] = to_string(config.model.objective);
    if (config.model.target.size() > 0) model_node["target"] = vector_to_json(config.model.target);
    json chain_node;
    chain_node["P"] = matrix_to_json(config.model.chain.P);
    chain_node["initial_state"] = config.model.chain.initial_state + 1;
    model_node["chain"] = chain_node;
    json states_node = json::array();
    for (const auto& st : config.model.states) {
        json st_node;
        st_node["A"] = matrix_to_json(st.A);
        st_node["b"] = vector_to_json(st.b);
        st_node["noise_sigma"] = vector_to_json(st.noise_sigma);
        states_node.push_back(st_node);
    }
    model_node["states"] = states_node;
    if (config.generator) {
        json gen_node;
        gen_node["dim"] = config.generator->dim;
        gen_node["eigenvalue_interval"] =
            json::array({config.generator->eig_lo, config.generator->eig_hi});
        gen_node["noise_sigma"] = config.generator->noise_sigma;
        gen_node["seed"] = config.generator->seed;
        model_node["generator"] = gen_node;
    }
    root["model"] = model_node;

    root["feasible_box"] = {{"lower", vector_to_json(config.box.lower)},
                            {"upper", vector_to_json(config.box.upper)}};
    root["initial_input"] = vector_to_json(config.initial_input);
    root["horizon"] = config.horizon;
    root["replications"] = config.replications;
    root["seed"] = config.seed;
    root["checkpoints"] = config.checkpoints;
    root["slope_window"] = json::array({config.slope_window_lo, config.slope_window_hi});
    root["output_dir"] = config.output_dir;
    root["threads"] = config.threads;
    root["rank_tol"] = config.rank_tol;
    json policies_node = json::array();
    for (const auto& policy : config.policies) policies_node.push_back(policy_to_json(policy));
    root["policies"] = policies_node;
    return root.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string canonical = emit_config(config);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& policy, const ExperimentConfig& config) {
    if (policy.name == "mspsa") {
        return std::make_unique<MspsaPolicy>(config.model.objective, config.model.target,
                                             config.box, config.initial_input, policy.gains,
                                             policy.perturbation);
    }
    if (policy.name == "greedy_lse") {
        return std::make_unique<GreedyLsePolicy>(config.model.objective, config.model.target,
                                                 config.box, config.initial_input,
                                                 config.rank_tol);
    }
    if (policy.name == "oracle") return std::make_unique<OraclePolicy>(config.model);
    if (policy.name == "constant") {
        return std::make_unique<ConstantPolicy>(
            policy.constant_input ? *policy.constant_input : config.initial_input);
    }
    throw ConfigError("policies", "unknown policy '" + policy.name + "'");
}

}  // namespace mspsa
