#include <doctest.h>

#include <random>

#include "mspsa/oracle.hpp"
#include "test_support.hpp"

using namespace mspsa;
using testsupport::direct_stage_cost;
using testsupport::golden_section;
using testsupport::random_instance;
using testsupport::scalar_model;

TEST_CASE("qr optimum, scalar: A=2 b=1 target=5") {
    const auto model = scalar_model(2.0, 1.0, 0.0, Objective::QuadraticRegulation, 5.0);
    // independent golden-section oracle on the direct cost
    const double oracle = golden_section(
        [&](double x) { return direct_stage_cost(model, 0, Vector::Constant(1, x)); }, -10, 10);
    CHECK(oracle == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(optimal_input_qr(model, 0)(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("qr optimum, two-state scalar mixture") {
    JumpAffineModel model;
    model.chain.P.resize(2, 2);
    model.chain.P << 0.5, 0.5, 0.5, 0.5;
    for (double a : {1.0, 3.0}) {
        AffineState st;
        st.A = Matrix::Constant(1, 1, a);
        st.b = Vector::Zero(1);
        st.noise_sigma = Vector::Zero(1);
        model.states.push_back(st);
    }
    model.objective = Objective::QuadraticRegulation;
    model.target = Vector::Constant(1, 3.0);

    const double oracle = golden_section(
        [&](double x) { return direct_stage_cost(model, 0, Vector::Constant(1, x)); }, -10, 10);
    CHECK(oracle == doctest::Approx(1.2).epsilon(1e-7));
    CHECK(optimal_input_qr(model, 0)(0) == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("qr optimum is zero when every offset hits the target") {
    JumpAffineModel model;
    model.chain.P.resize(2, 2);
    model.chain.P << 0.3, 0.7, 0.6, 0.4;
    for (double a : {1.0, 2.0}) {
        AffineState st;
        st.A = Matrix::Constant(1, 1, a);
        st.b = Vector::Constant(1, 5.0);
        st.noise_sigma = Vector::Zero(1);
        model.states.push_back(st);
    }
    model.objective = Objective::QuadraticRegulation;
    model.target = Vector::Constant(1, 5.0);
    CHECK(optimal_input_qr(model, 0)(0) == doctest::Approx(0.0));
    CHECK(optimal_input_qr(model, 1)(0) == doctest::Approx(0.0));
}

TEST_CASE("rm optimum, scalar examples") {
    const auto peak = scalar_model(-1.0, 1.0, 0.0, Objective::RevenueMaximization);
    CHECK(optimal_input_rm(peak, 0)(0) == doctest::Approx(0.5).epsilon(1e-12));

    JumpAffineModel model;
    model.chain.P.resize(2, 2);
    model.chain.P << 0.5, 0.5, 0.5, 0.5;
    int k = 0;
    for (double a : {-1.0, -2.0}) {
        AffineState st;
        st.A = Matrix::Constant(1, 1, a);
        st.b = Vector::Constant(1, 1.0 + k);
        st.noise_sigma = Vector::Zero(1);
        model.states.push_back(st);
        ++k;
    }
    model.objective = Objective::RevenueMaximization;
    const double oracle = golden_section(
        [&](double x) { return direct_stage_cost(model, 0, Vector::Constant(1, x)); }, -10, 10);
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(optimal_input_rm(model, 0)(0) == doctest::Approx(0.5).epsilon(1e-12));

    model.states[0].b.setZero();
    model.states[1].b.setZero();
    CHECK(optimal_input_rm(model, 0)(0) == doctest::Approx(0.0));
}

TEST_CASE("stage cost examples") {
    SUBCASE("noiseless perfect regulation") {
        const auto model = scalar_model(2.0, 1.0, 0.0, Objective::QuadraticRegulation, 5.0);
        CHECK(stage_cost_qr(model, 0, optimal_input_qr(model, 0)) ==
              doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("trace-only floor at the optimum") {
        JumpAffineModel model;
        model.chain.P = Matrix::Ones(1, 1);
        AffineState st;
        st.A = Matrix::Identity(2, 2);
        st.b = Vector::Zero(2);
        st.noise_sigma = Vector::Constant(2, 0.5);
        model.states.push_back(st);
        model.objective = Objective::QuadraticRegulation;
        model.target = Vector::Constant(2, 1.0);
        CHECK(stage_cost_qr(model, 0, optimal_input_qr(model, 0)) == doctest::Approx(0.5));
    }
    SUBCASE("rm: zero price gives zero revenue, peak is -0.25") {
        const auto model = scalar_model(-1.0, 1.0, 0.0, Objective::RevenueMaximization);
        CHECK(stage_cost_rm(model, 0, Vector::Zero(1)) == doctest::Approx(0.0));
        CHECK(stage_cost_rm(model, 0, Vector::Constant(1, 0.5)) == doctest::Approx(-0.25));
    }
}

TEST_CASE("foc residual vanishes at the closed-form optimum on random instances") {
    std::mt19937 gen(2024);
    std::uniform_int_distribution<int> k_dist(1, 3), n_dist(1, 3), extra_dist(0, 2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto objective =
            trial % 2 == 0 ? Objective::QuadraticRegulation : Objective::RevenueMaximization;
        const auto inst =
            random_instance(gen, objective, k_dist(gen), n_dist(gen), extra_dist(gen));
        REQUIRE(validate_model(inst.model, inst.box).ok());
        for (int i = 0; i < inst.model.num_states(); ++i) {
            const Vector x_star = optimal_input(inst.model, i);
            const double residual = foc_residual(inst.model, i, x_star).norm();
            CHECK(residual <= 1e-8 * (1.0 + x_star.norm()));
        }
    }
}

TEST_CASE("stage cost exceeds its minimum value") {
    std::mt19937 gen(99);
    for (int trial = 0; trial < 20; ++trial) {
        const auto objective =
            trial % 2 == 0 ? Objective::QuadraticRegulation : Objective::RevenueMaximization;
        const auto inst = random_instance(gen, objective, 2, 2);
        const Vector x_star = optimal_input(inst.model, 0);
        const double floor = objective == Objective::QuadraticRegulation
                                 ? stage_cost_qr(inst.model, 0, x_star)
                                 : stage_cost_rm(inst.model, 0, x_star);
        std::uniform_real_distribution<double> perturb(-2.0, 2.0);
        for (int probe = 0; probe < 20; ++probe) {
            Vector x = x_star + Vector::NullaryExpr(2, [&](int) { return perturb(gen); });
            const double value = objective == Objective::QuadraticRegulation
                                     ? stage_cost_qr(inst.model, 0, x)
                                     : stage_cost_rm(inst.model, 0, x);
            CHECK(value >= floor - 1e-12);
        }
    }
}

TEST_CASE("qr excess cost identity: J(x) - J(x*) = sum_j p_j ||A_j (x-x*)||^2") {
    std::mt19937 gen(4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto inst = random_instance(gen, Objective::QuadraticRegulation, 2, 2, 1);
        const Vector x_star = optimal_input_qr(inst.model, 0);
        std::uniform_real_distribution<double> perturb(-3.0, 3.0);
        const Vector x = x_star + Vector::NullaryExpr(2, [&](int) { return perturb(gen); });
        const double excess = stage_cost_qr(inst.model, 0, x) - stage_cost_qr(inst.model, 0, x_star);
        double identity = 0.0;
        for (int j = 0; j < inst.model.num_states(); ++j) {
            identity += inst.model.chain.P(0, j) *
                        (inst.model.states[j].A * (x - x_star)).squaredNorm();
        }
        CHECK(excess == doctest::Approx(identity).epsilon(1e-10));
    }
}

TEST_CASE("expected gradient term: exact cases") {
    SUBCASE("zero at the optimum") {
        std::mt19937 gen(11);
        const auto inst = random_instance(gen, Objective::QuadraticRegulation, 2, 2);
        const Vector x_star = optimal_input(inst.model, 1);
        Vector delta = Vector::Ones(2);
        delta(1) = -1.0;
        const Vector term = expected_gradient_term(inst.model, 1, x_star, delta, 0.7);
        CHECK(term.norm() <= 1e-10 * (1.0 + x_star.norm()));
    }
    SUBCASE("scalar qr algebraic cancellation: term = 4 x_hat") {
        const auto model = scalar_model(1.0, 0.0, 0.0, Objective::QuadraticRegulation, 0.0);
        for (double c : {0.25, 1.0, 2.0}) {
            const Vector term = expected_gradient_term(model, 0, Vector::Constant(1, 1.7),
                                                       Vector::Ones(1), c);
            CHECK(term(0) == doctest::Approx(4.0 * 1.7).epsilon(1e-12));
        }
    }
    SUBCASE("zero perturbation entry is rejected") {
        const auto model = scalar_model(1.0, 0.0, 0.0, Objective::QuadraticRegulation, 0.0);
        CHECK_THROWS_AS(
            expected_gradient_term(model, 0, Vector::Ones(1), Vector::Zero(1), 1.0),
            ZeroPerturbationEntry);
    }
}

TEST_CASE("expected gradient term matches a Monte Carlo oracle") {
    std::mt19937 gen(21);
    for (const auto objective :
         {Objective::QuadraticRegulation, Objective::RevenueMaximization}) {
        const auto inst = random_instance(gen, objective, 2, 2);
        std::uniform_real_distribution<double> unit(0.2, 1.0);
        Vector x_hat = optimal_input(inst.model, 0) +
                       Vector::NullaryExpr(2, [&](int) { return unit(gen); });
        Vector delta(2);
        delta << 1.0, -1.0;
        const double c = 0.3;
        const Vector exact = expected_gradient_term(inst.model, 0, x_hat, delta, c);
        const auto mc = testsupport::mc_gradient_term(inst.model, 0, x_hat, delta, c, 100000, 77);
        for (int j = 0; j < 2; ++j) {
            CHECK(std::abs(mc.mean(j) - exact(j)) <= 3.0 * mc.se(j));
        }
    }
}

TEST_CASE("brute force optimum matches closed forms on small instances") {
    std::mt19937 gen(31);
    for (int trial = 0; trial < 6; ++trial) {
        const auto objective =
            trial % 2 == 0 ? Objective::QuadraticRegulation : Objective::RevenueMaximization;
        const int n = 1 + trial % 3;
        const auto inst = random_instance(gen, objective, 2, n);
        const Vector closed = optimal_input(inst.model, 0);
        const Vector brute = brute_force_optimum(inst.model, inst.box, 0, objective);
        CHECK((closed - brute).cwiseAbs().maxCoeff() <= 1e-3);
    }
}

TEST_CASE("brute force examples and guards") {
    SUBCASE("rm scalar peak at 0.5") {
        const auto model = scalar_model(-1.0, 1.0, 0.0, Objective::RevenueMaximization);
        const Vector x = brute_force_optimum(model, testsupport::box1d(0.0, 2.0), 0,
                                             Objective::RevenueMaximization);
        CHECK(x(0) == doctest::Approx(0.5).epsilon(1e-3));
    }
    SUBCASE("self-consistency under refinement halving") {
        JumpAffineModel model;
        model.chain.P.resize(2, 2);
        model.chain.P << 0.5, 0.5, 0.5, 0.5;
        for (double a : {1.0, 3.0}) {
            AffineState st;
            st.A = Matrix::Constant(1, 1, a);
            st.b = Vector::Zero(1);
            st.noise_sigma = Vector::Zero(1);
            model.states.push_back(st);
        }
        model.objective = Objective::QuadraticRegulation;
        model.target = Vector::Constant(1, 3.0);
        GridSpec coarse;
        GridSpec fine;
        fine.target_step = coarse.target_step / 2;
        const auto box = testsupport::box1d(0.0, 3.0);
        const Vector a = brute_force_optimum(model, box, 0, Objective::QuadraticRegulation, coarse);
        const Vector b = brute_force_optimum(model, box, 0, Objective::QuadraticRegulation, fine);
        CHECK(a(0) == doctest::Approx(1.2).epsilon(1e-3));
        CHECK(std::abs(a(0) - b(0)) <= coarse.target_step);
    }
    SUBCASE("local optimality against grid neighbors") {
        const auto model = scalar_model(-1.0, 1.0, 0.0, Objective::RevenueMaximization);
        const auto box = testsupport::box1d(0.0, 2.0);
        GridSpec spec;
        const Vector x = brute_force_optimum(model, box, 0, Objective::RevenueMaximization, spec);
        for (double sign : {-1.0, 1.0}) {
            Vector neighbor = x;
            neighbor(0) += sign * spec.target_step;
            if (neighbor(0) < box.lower(0) || neighbor(0) > box.upper(0)) continue;
            CHECK(stage_cost_rm(model, 0, x) <= stage_cost_rm(model, 0, neighbor) + 1e-12);
        }
    }
    SUBCASE("n > 3 is rejected") {
        JumpAffineModel model;
        model.chain.P = Matrix::Ones(1, 1);
        AffineState st;
        st.A = Matrix::Identity(4, 4);
        st.b = Vector::Zero(4);
        st.noise_sigma = Vector::Zero(4);
        model.states.push_back(st);
        model.objective = Objective::QuadraticRegulation;
        model.target = Vector::Zero(4);
        CHECK_THROWS_AS(brute_force_optimum(model, testsupport::box_nd(4, 0, 1), 0,
                                            Objective::QuadraticRegulation),
                        DimensionTooLarge);
    }
}

TEST_CASE("singular mixture is reported") {
    JumpAffineModel model;
    model.chain.P = Matrix::Ones(1, 1);
    AffineState st;
    st.A = Matrix::Constant(1, 1, 1e-10);
    st.b = Vector::Zero(1);
    st.noise_sigma = Vector::Zero(1);
    model.states.push_back(st);
    model.objective = Objective::QuadraticRegulation;
    model.target = Vector::Constant(1, 1.0);
    // A'A ~ 1e-20; condition fine (1x1) but vs zero guard: use two states with
    // opposing symmetric parts instead for the rm case
    JumpAffineModel rm;
    rm.chain.P.resize(2, 2);
    rm.chain.P << 0.5, 0.5, 0.5, 0.5;
    for (double a : {-1.0, 1.0}) {
        AffineState s2;
        s2.A = Matrix::Constant(1, 1, a);
        s2.b = Vector::Constant(1, 1.0);
        s2.noise_sigma = Vector::Zero(1);
        rm.states.push_back(s2);
    }
    rm.objective = Objective::RevenueMaximization;
    CHECK_THROWS_AS(optimal_input_rm(rm, 0), SingularMixture);
}
