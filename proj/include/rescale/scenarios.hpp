#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "rescale/expr.hpp"
#include "rescale/field.hpp"
#include "rescale/jet.hpp"
#include "rescale/profile.hpp"
#include "rescale/rescaler.hpp"

namespace rescale {

struct invalid_scenario_error : config_error {
    using config_error::config_error;
};

// A run definition: initial data family plus the scaling seeds and the law
// constants its plateau should reach.
struct Scenario {
    std::string name;
    std::size_t n = 1;
    std::function<double(const Point&)> initial;  // u_hat(., 0), even in each coordinate
    std::array<double, 3> lambda0{1.0, 1.0, 1.0};
    double Cu0 = 1.0;
    std::optional<double> expected_law_cu;
    std::optional<double> expected_law_cl;
};

// u_hat(0,z) = (1 + z^2/8 + z^4/10)^(-1), Cu0 = 1, lambda(0) = 1.
inline Scenario scenario_1d_paper() {
    Scenario s;
    s.name = "paper_1d";
    s.n = 1;
    s.initial = [](const Point& p) {
        const double z2 = p[0] * p[0];
        return 1.0 / (1.0 + z2 / 8.0 + z2 * z2 / 10.0);
    };
    s.lambda0 = {1.0, 0.0, 0.0};
    s.Cu0 = 1.0;
    s.expected_law_cu = 0.25;
    s.expected_law_cl = 0.625;
    return s;
}

// u_hat(0,x,y) = (1 + (x^2+y^2)/8 + x^4/100)^(-1), Cu0 = 1, lambda_i(0) = 1.
inline Scenario scenario_2d_paper() {
    Scenario s;
    s.name = "paper_2d";
    s.n = 2;
    s.initial = [](const Point& p) {
        const double x2 = p[0] * p[0];
        const double y2 = p[1] * p[1];
        return 1.0 / (1.0 + (x2 + y2) / 8.0 + x2 * x2 / 100.0);
    };
    s.lambda0 = {1.0, 1.0, 0.0};
    s.Cu0 = 1.0;
    s.expected_law_cu = 0.5;
    s.expected_law_cl = 0.75;
    return s;
}

namespace detail {

// Built-in perturbation family: amplitude |z|^4 exp(-|z|^2), even and O(|z|^4).
inline double quartic_gaussian(const Point& p, std::size_t n) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r2 += p[i] * p[i];
    return r2 * r2 * std::exp(-r2);
}

// The origin-vanishing contract g(0) = g_ii(0) = 0, probed on a fine mesh.
inline void validate_perturbation(const std::function<double(const Point&)>& g, std::size_t n) {
    auto mesh = std::make_shared<TensorMesh>([n] {
        std::vector<Mesh1D> axes;
        for (std::size_t i = 0; i < n; ++i)
            axes.push_back(build_graded_mesh(200, 2.0, Algebraic{2.0}));
        return TensorMesh(std::move(axes));
    }());
    Field f = Field::sample(mesh, [&](const Point& p) { return g(p); });
    double scale = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) scale = std::max(scale, std::abs(f[k]));
    if (scale == 0.0) return;  // identically zero is fine
    OriginJet jet = origin_jet(f);
    if (std::abs(jet.d0) > 1e-8 * scale)
        throw invalid_scenario_error("scenario_theorem: g(0) != 0");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(jet.d2[i]) > 1e-5 * scale)
            throw invalid_scenario_error("scenario_theorem: g_ii(0) != 0 on axis " +
                                         std::to_string(i));
}

}  // namespace detail

// Small even perturbations of the profile with small lambda; Cu0 = lambda0
// mirrors the proof's small initial amplitude factor. `g_spec` is empty for
// the built-in family or a closed-form expression in the config grammar.
inline Scenario scenario_theorem(const std::string& g_spec, double amplitude, double lambda0,
                                 std::size_t n = 1) {
    if (!(amplitude >= 0.0)) throw invalid_scenario_error("scenario_theorem: amplitude < 0");
    if (!(lambda0 > 0.0)) throw invalid_scenario_error("scenario_theorem: lambda0 must be > 0");
    Scenario s;
    s.name = "theorem";
    s.n = n;
    std::function<double(const Point&)> g;
    if (g_spec.empty() || g_spec == "quartic_gaussian") {
        g = [n](const Point& p) { return detail::quartic_gaussian(p, n); };
    } else {
        auto expr = std::make_shared<Expr>(Expr::parse(g_spec, n));
        g = [expr](const Point& p) { return expr->eval(p); };
        detail::validate_perturbation(g, n);
    }
    s.initial = [g, amplitude, n](const Point& p) {
        return profile_ubar(p, n) + amplitude * g(p);
    };
    for (std::size_t i = 0; i < n; ++i) s.lambda0[i] = lambda0;
    s.Cu0 = lambda0;
    s.expected_law_cu = double(n) / 4.0;
    s.expected_law_cl = (double(n) + 4.0) / 8.0;
    return s;
}

// Sample the scenario's initial data and seed the rescaling state.
inline RescaleState make_initial_state(const Scenario& scenario, MeshPtr mesh) {
    if (mesh->dim() != scenario.n)
        throw config_error("scenario '" + scenario.name + "' needs an n = " +
                           std::to_string(scenario.n) + " mesh");
    Field u0 = Field::sample(mesh, scenario.initial);
    if (!(u0[0] > 0.0))
        throw invalid_scenario_error("scenario: initial(0) must be positive");
    if (!u0.all_finite()) throw invalid_scenario_error("scenario: initial data not finite");
    return RescaleState::initial(std::move(u0), scenario.lambda0, scenario.Cu0);
}

}  // namespace rescale
