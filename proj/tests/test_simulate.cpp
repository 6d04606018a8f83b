#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mspsa/metrics.hpp"
#include "mspsa/policies.hpp"
#include "mspsa/simulate.hpp"
#include "test_support.hpp"

using namespace mspsa;
using testsupport::box1d;
using testsupport::scalar_model;

TEST_CASE("next_state: deterministic rows") {
    MarkovChain chain;
    chain.P = Matrix::Identity(3, 3);
    RngStream rng(1, 1);
    for (int i = 0; i < 20; ++i) CHECK(next_state(chain, 1, rng) == 1);

    chain.P.resize(2, 2);
    chain.P << 1.0, 0.0, 0.0, 1.0;
    for (int i = 0; i < 20; ++i) CHECK(next_state(chain, 0, rng) == 0);
}

TEST_CASE("next_state: uniform 2x2 frequencies within 3 standard errors") {
    MarkovChain chain;
    chain.P.resize(2, 2);
    chain.P << 0.5, 0.5, 0.5, 0.5;
    RngStream rng(77, 0);
    const long n = 100000;
    long ones = 0;
    for (long i = 0; i < n; ++i) {
        if (next_state(chain, 0, rng) == 0) ++ones;
    }
    const double freq = static_cast<double>(ones) / n;
    const double se = std::sqrt(0.25 / n);
    CHECK(std::abs(freq - 0.5) <= 3.0 * se);
    CHECK(rng.draws() == static_cast<std::uint64_t>(n));  // one word per draw
}

TEST_CASE("observe: noiseless affine map is exact") {
    const auto model = scalar_model(2.0, 1.0, 0.0, Objective::QuadraticRegulation, 0.0);
    RngStream rng(3, 3);
    const Vector y = observe(model, 0, Vector::Constant(1, 3.0), rng);
    CHECK(y(0) == 7.0);

    JumpAffineModel ident;
    ident.chain.P = Matrix::Ones(1, 1);
    AffineState st;
    st.A = Matrix::Identity(2, 2);
    st.b = Vector::Zero(2);
    st.noise_sigma = Vector::Zero(2);
    ident.states.push_back(st);
    ident.objective = Objective::QuadraticRegulation;
    ident.target = Vector::Zero(2);
    Vector x(2);
    x << -1.5, 2.5;
    CHECK((observe(ident, 0, x, rng) - x).norm() == 0.0);
}

TEST_CASE("observe: sample mean near Ax+b (CLT bound) and draw accounting") {
    JumpAffineModel model;
    model.chain.P = Matrix::Ones(1, 1);
    AffineState st;
    st.A = Matrix::Identity(2, 2);
    st.b = Vector::Constant(2, 0.5);
    st.noise_sigma = Vector::Constant(2, 0.5);
    model.states.push_back(st);
    model.objective = Objective::QuadraticRegulation;
    model.target = Vector::Zero(2);

    RngStream rng(9, 4);
    Vector x(2);
    x << 1.0, -1.0;
    const Vector expected = st.A * x + st.b;
    const long n = 100000;
    Vector sum = Vector::Zero(2);
    const auto words_before = rng.draws();
    for (long i = 0; i < n; ++i) sum += observe(model, 0, x, rng);
    CHECK(rng.draws() - words_before == static_cast<std::uint64_t>(4 * n));  // 2 words per gaussian
    const Vector mean = sum / static_cast<double>(n);
    const double bound = 3.0 * 0.5 / std::sqrt(static_cast<double>(n));
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(j) - expected(j)) <= bound);
}

TEST_CASE("observe rejects non-finite input") {
    const auto model = scalar_model(1.0, 0.0, 0.0, Objective::QuadraticRegulation, 0.0);
    RngStream rng(1, 1);
    Vector bad(1);
    bad << std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(observe(model, 0, bad, rng), NonFiniteInput);
}

TEST_CASE("run_episode: single step with a constant policy") {
    const auto model = scalar_model(2.0, 1.0, 0.0, Objective::QuadraticRegulation, 5.0);
    ConstantPolicy policy(Vector::Constant(1, 1.5));
    const auto traj = run_episode(model, box1d(0, 3), policy, 1, RngStream(5, 0));
    REQUIRE(traj.records.size() == 1);
    CHECK(traj.records[0].x(0) == 1.5);
    CHECK(traj.records[0].t == 1);
    CHECK(traj.records[0].s_prev == 0);
    CHECK(traj.records[0].y(0) == doctest::Approx(4.0));
}

TEST_CASE("run_episode: oracle policy has zero regret on noiseless system") {
    const auto model = scalar_model(2.0, 1.0, 0.0, Objective::QuadraticRegulation, 5.0);
    OraclePolicy policy(model);
    const auto traj = run_episode(model, box1d(0, 3), policy, 50, RngStream(5, 0));
    for (const auto& rec : traj.records) {
        CHECK(rec.stage_regret == doctest::Approx(0.0));
        CHECK(rec.stage_cost == doctest::Approx(0.0));
        CHECK(rec.input_sq_err == doctest::Approx(0.0));
    }
}

namespace {

JumpAffineModel noisy_two_state() {
    JumpAffineModel model;
    model.chain.P.resize(2, 2);
    model.chain.P << 0.6, 0.4, 0.4, 0.6;
    int k = 0;
    for (double a : {-1.0, -0.6}) {
        AffineState st;
        st.A = Matrix::Constant(1, 1, a);
        st.b = Vector::Constant(1, 1.5 + 0.5 * k);
        st.noise_sigma = Vector::Constant(1, 0.3);
        model.states.push_back(st);
        ++k;
    }
    model.objective = Objective::RevenueMaximization;
    return model;
}

}  // namespace

TEST_CASE("run_episode: replay is bit-identical and chain-consistent") {
    const auto model = noisy_two_state();
    const auto box = box1d(0.0, 3.0);
    MspsaGains gains{0.5, 0, 1.0, 0};

    MspsaPolicy p1(model.objective, model.target, box, Vector::Constant(1, 1.0), gains);
    MspsaPolicy p2(model.objective, model.target, box, Vector::Constant(1, 1.0), gains);
    const auto t1 = run_episode(model, box, p1, 500, RngStream(11, 7));
    const auto t2 = run_episode(model, box, p2, 500, RngStream(11, 7));

    REQUIRE(t1.records.size() == t2.records.size());
    for (std::size_t i = 0; i < t1.records.size(); ++i) {
        CHECK(t1.records[i].x(0) == t2.records[i].x(0));
        CHECK(t1.records[i].y(0) == t2.records[i].y(0));
        CHECK(t1.records[i].s_curr == t2.records[i].s_curr);
        if (i > 0) CHECK(t1.records[i].s_prev == t1.records[i - 1].s_curr);
        CHECK(t1.records[i].t == static_cast<long>(i) + 1);
    }
}

TEST_CASE("run_episode: system draws do not depend on the policy") {
    const auto model = noisy_two_state();
    const auto box = box1d(0.0, 3.0);
    MspsaPolicy spsa(model.objective, model.target, box, Vector::Constant(1, 1.0),
                     MspsaGains{0.5, 0, 1.0, 0});
    ConstantPolicy constant(Vector::Constant(1, 1.0));
    const auto ta = run_episode(model, box, spsa, 200, RngStream(3, 1));
    const auto tb = run_episode(model, box, constant, 200, RngStream(3, 1));
    for (std::size_t i = 0; i < ta.records.size(); ++i) {
        CHECK(ta.records[i].s_curr == tb.records[i].s_curr);
    }
}

TEST_CASE("trace csv has the pinned columns") {
    const auto model = scalar_model(2.0, 1.0, 0.0, Objective::QuadraticRegulation, 5.0);
    ConstantPolicy policy(Vector::Constant(1, 1.5));
    const auto traj = run_episode(model, box1d(0, 3), policy, 2, RngStream(5, 0));
    std::ostringstream out;
    write_trace_csv(traj, out);
    const std::string text = out.str();
    CHECK(text.rfind("t,s_prev,s_t,x0,y0,stage_cost,stage_regret,input_sq_err\n", 0) == 0);
    CHECK(text.find("\n1,1,1,") != std::string::npos);
}
