#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "rescale/expr.hpp"
#include "rescale/scenarios.hpp"

using namespace rescale;

TEST_CASE("profile values") {
    REQUIRE(profile_ubar(Point{0, 0, 0}, 1) == 1.0);
    REQUIRE(profile_ubar(Point{std::sqrt(8.0), 0, 0}, 1) == Catch::Approx(0.5).epsilon(1e-14));
    const double z = 1e6;
    REQUIRE(profile_ubar(Point{z, 0, 0}, 1) == Catch::Approx(8.0 / (z * z)).epsilon(1e-5));
}

TEST_CASE("paper_1d scenario values") {
    Scenario s = scenario_1d_paper();
    REQUIRE(s.n == 1);
    REQUIRE(s.initial(Point{0, 0, 0}) == 1.0);
    REQUIRE(s.initial(Point{1, 0, 0}) == Catch::Approx(1.0 / 1.225).epsilon(1e-14));
    REQUIRE(*s.expected_law_cu == 0.25);
    REQUIRE(*s.expected_law_cl == 0.625);
    REQUIRE(s.lambda0[0] == 1.0);
    REQUIRE(s.Cu0 == 1.0);
}

TEST_CASE("paper_2d scenario values") {
    Scenario s = scenario_2d_paper();
    REQUIRE(s.n == 2);
    REQUIRE(s.initial(Point{0, 0, 0}) == 1.0);
    REQUIRE(s.initial(Point{1, 1, 0}) == Catch::Approx(1.0 / 1.26).epsilon(1e-14));
    REQUIRE(*s.expected_law_cu == 0.5);
    REQUIRE(*s.expected_law_cl == 0.75);
}

TEST_CASE("theorem scenario: amplitude zero reduces to the profile") {
    Scenario s = scenario_theorem("", 0.0, 0.05);
    for (double z : {0.0, 0.3, 1.7, 9.0})
        REQUIRE(s.initial(Point{z, 0, 0}) ==
                Catch::Approx(profile_ubar(Point{z, 0, 0}, 1)).epsilon(1e-14));
    REQUIRE(s.Cu0 == 0.05);
    REQUIRE(s.lambda0[0] == 0.05);
}

TEST_CASE("theorem scenario: built-in family vanishes to fourth order") {
    Scenario s = scenario_theorem("", 0.01, 0.01);
    auto g = [&](double z) {
        return s.initial(Point{z, 0, 0}) - profile_ubar(Point{z, 0, 0}, 1);
    };
    REQUIRE(g(0.0) == 0.0);
    const double h = 1e-3;
    REQUIRE(std::abs(g(h)) <= 0.011 * h * h * h * h);  // ~ amplitude z^4
}

TEST_CASE("theorem scenario rejects bad perturbations") {
    REQUIRE_THROWS_AS(scenario_theorem("", -0.1, 0.01), invalid_scenario_error);
    REQUIRE_THROWS_AS(scenario_theorem("", 0.01, 0.0), invalid_scenario_error);
    // constant perturbation violates g(0) = 0
    REQUIRE_THROWS_AS(scenario_theorem("1", 0.01, 0.01), invalid_scenario_error);
    // z^2 violates g''(0) = 0
    REQUIRE_THROWS_AS(scenario_theorem("z^2", 0.01, 0.01), invalid_scenario_error);
    // z^4 passes
    REQUIRE_NOTHROW(scenario_theorem("z^4 * exp(-z^2)", 0.01, 0.01));
}

TEST_CASE("initial state validation") {
    auto mesh = std::make_shared<TensorMesh>(build_graded_mesh(64, 10.0, Algebraic{2.0}));
    Scenario s = scenario_1d_paper();
    RescaleState st = make_initial_state(s, mesh);
    REQUIRE(st.u_hat.even_symmetry());
    REQUIRE(st.u_hat[0] == 1.0);
    REQUIRE(st.lambda(0) == 1.0);
    // dimension mismatch
    Scenario s2 = scenario_2d_paper();
    REQUIRE_THROWS_AS(make_initial_state(s2, mesh), config_error);
}

TEST_CASE("expression grammar evaluates the documented forms") {
    Expr e = Expr::parse("(1 + z^2/8 + z^4/10)^(-1)", 1);
    REQUIRE(e.eval(Point{1, 0, 0}) == Catch::Approx(1.0 / 1.225).epsilon(1e-14));
    Expr e2 = Expr::parse("2 * exp(-x^2) - 1.5e-1", 1);
    REQUIRE(e2.eval(Point{0.5, 0, 0}) ==
            Catch::Approx(2.0 * std::exp(-0.25) - 0.15).epsilon(1e-14));
    Expr e3 = Expr::parse("x^2 * y^2", 2);
    REQUIRE(e3.eval(Point{2, 3, 0}) == Catch::Approx(36.0).epsilon(1e-14));
    // unary minus and right-associative power
    Expr e4 = Expr::parse("-2^2", 1);
    REQUIRE(e4.eval(Point{0, 0, 0}) == Catch::Approx(-4.0));
    Expr e5 = Expr::parse("2^3^2", 1);  // 2^(3^2)
    REQUIRE(e5.eval(Point{0, 0, 0}) == Catch::Approx(512.0));
}

TEST_CASE("expression grammar rejects malformed input") {
    REQUIRE_THROWS_AS(Expr::parse("1 +", 1), config_error);
    REQUIRE_THROWS_AS(Expr::parse("foo(3)", 1), config_error);
    REQUIRE_THROWS_AS(Expr::parse("y", 1), config_error);  // y needs n >= 2
    REQUIRE_THROWS_AS(Expr::parse("(1 + 2", 1), config_error);
    REQUIRE_THROWS_AS(Expr::parse("1 2", 1), config_error);
}

TEST_CASE("z aliases the first axis only in 1D") {
    Expr e = Expr::parse("z", 1);
    REQUIRE(e.eval(Point{4.0, 0, 0}) == 4.0);
    Expr e3 = Expr::parse("z", 3);
    REQUIRE(e3.eval(Point{1.0, 2.0, 3.0}) == 3.0);
    REQUIRE_THROWS_AS(Expr::parse("z", 2), config_error);
}
