#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "rescale/field.hpp"
#include "rescale/jet.hpp"
#include "rescale/profile.hpp"
#include "rescale/rescaler.hpp"
#include "rescale/spline.hpp"

namespace rescale {

// Practical diagnostic orders: k_diag replaces the theoretical k = 2n+10,
// which is not resolvable by repeated spline differentiation.
struct WeightSpec {
    std::size_t n = 1;
    std::size_t k_diag = 4;
    double mu = 1e-2;
};

// rho = |z|^(-5-n) + 1e-3 |z|^(1-n); singular at the origin.
inline double weight_rho(const Point& z, std::size_t n) {
    const double r = detail::radius(z, n);
    if (r <= 0.0) throw domain_error("weight_rho: singular at z = 0");
    return std::pow(r, -5.0 - double(n)) + 1e-3 * std::pow(r, 1.0 - double(n));
}

// rho_k = 1 + 10^(-3k) |z|^(2k+1-n); finite everywhere.
inline double weight_rhok(const Point& z, std::size_t k, std::size_t n) {
    const double r = detail::radius(z, n);
    const double e = 2.0 * double(k) + 1.0 - double(n);
    if (r == 0.0) return e == 0.0 ? 1.0 + std::pow(10.0, -3.0 * double(k)) : 1.0;
    return 1.0 + std::pow(10.0, -3.0 * double(k)) * std::pow(r, e);
}

namespace detail {

// Repeated spline differentiation of an even field along one axis, with the
// reflection closure picked by the current parity (order <= 2 per pass).
inline void axis_derivative_passes(const TensorMesh& mesh, std::vector<double>& v,
                                   std::size_t axis, std::size_t order) {
    if (order == 0) return;
    const Mesh1D& ax = mesh.axis(axis);
    const std::size_t M = ax.size();
    const std::size_t n = mesh.dim();
    std::size_t stride = 1;
    for (std::size_t i = n; i-- > axis + 1;) stride *= mesh.axis(i).size();
    const std::size_t nlines = v.size() / M;
    std::vector<double> line(M), mom(M), d1(M), d2(M);
    bool odd_parity = false;
    // lazily built solvers; the odd one is only needed for odd intermediate parity
    SplineSolver even_solver(ax, OriginClosure::even);
    std::unique_ptr<SplineSolver> odd_solver;
    std::size_t left = order;
    while (left > 0) {
        const std::size_t take = left >= 2 ? 2 : 1;
        const SplineSolver* solver = &even_solver;
        if (odd_parity) {
            if (!odd_solver) odd_solver = std::make_unique<SplineSolver>(ax, OriginClosure::odd);
            solver = odd_solver.get();
        }
        for (std::size_t l = 0; l < nlines; ++l) {
            const std::size_t base = (l / stride) * stride * M + (l % stride);
            for (std::size_t j = 0; j < M; ++j) line[j] = v[base + j * stride];
            solver->node_derivs(line, mom, d1, d2);
            const std::vector<double>& dv = (take == 2) ? d2 : d1;
            for (std::size_t j = 0; j < M; ++j) v[base + j * stride] = dv[j];
        }
        if (take == 1) odd_parity = !odd_parity;
        left -= take;
    }
}

// D^alpha u for an even field, alpha a per-axis order vector.
inline Field multi_derivative(const Field& u, const std::array<std::size_t, 3>& alpha) {
    Field out = u;
    for (std::size_t i = 0; i < u.mesh().dim(); ++i)
        axis_derivative_passes(u.mesh(), out.values(), i, alpha[i]);
    return out;
}

inline double factorial(std::size_t k) {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= double(i);
    return f;
}

// All multi-indices of total order j in n axes.
inline void enumerate_multi_indices(std::size_t n, std::size_t j,
                                    std::vector<std::array<std::size_t, 3>>& out) {
    out.clear();
    if (n == 1) {
        out.push_back({j, 0, 0});
        return;
    }
    for (std::size_t a = 0; a <= j; ++a) {
        if (n == 2) {
            out.push_back({a, j - a, 0});
        } else {
            for (std::size_t b = 0; a + b <= j; ++b) out.push_back({a, b, j - a - b});
        }
    }
}

// Gauss-Legendre 8-point rule on [0,1].
inline const std::array<double, 8>& gauss_x() {
    static const std::array<double, 8> x = {0.019855071751231884, 0.10166676129318664,
                                            0.2372337950418355,  0.40828267875217505,
                                            0.5917173212478249,  0.7627662049581645,
                                            0.8983332387068134,  0.9801449282487681};
    return x;
}
inline const std::array<double, 8>& gauss_w() {
    static const std::array<double, 8> w = {0.05061426814518838, 0.11119051722668723,
                                            0.15685332293894363, 0.18134189168918097,
                                            0.18134189168918097, 0.15685332293894363,
                                            0.11119051722668723, 0.05061426814518838};
    return w;
}

// Integral of f over the corner box [0,a_1]x...x[0,a_n] for an integrand with
// an integrable power singularity at the origin: dyadic shells toward the
// corner, tensor Gauss on each sub-box.
template <class F>
inline double corner_box_integral(std::array<double, 3> a, std::size_t n, F&& f) {
    double total = 0.0;
    std::array<double, 3> hi = a;
    for (int ring = 0; ring < 60; ++ring) {
        std::array<double, 3> lo{};
        for (std::size_t i = 0; i < n; ++i) lo[i] = hi[i] / 2.0;
        // ring = box(0,hi) minus box(0,lo): decompose into sub-boxes where at
        // least one coordinate lies in [lo_i, hi_i]
        double ring_sum = 0.0;
        const std::size_t combos = (std::size_t(1) << n);
        for (std::size_t mask = 1; mask < combos; ++mask) {
            // coordinates in mask: [lo, hi]; others: [0, lo]
            double vol = 1.0;
            std::array<double, 3> base{}, len{};
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (std::size_t(1) << i)) {
                    base[i] = lo[i];
                    len[i] = hi[i] - lo[i];
                } else {
                    base[i] = 0.0;
                    len[i] = lo[i];
                }
                vol *= len[i];
            }
            if (vol == 0.0) continue;
            const auto& gx = gauss_x();
            const auto& gw = gauss_w();
            double s = 0.0;
            if (n == 1) {
                for (std::size_t p = 0; p < 8; ++p)
                    s += gw[p] * f(Point{base[0] + len[0] * gx[p], 0.0, 0.0});
            } else if (n == 2) {
                for (std::size_t p = 0; p < 8; ++p)
                    for (std::size_t q = 0; q < 8; ++q)
                        s += gw[p] * gw[q] *
                             f(Point{base[0] + len[0] * gx[p], base[1] + len[1] * gx[q], 0.0});
            } else {
                for (std::size_t p = 0; p < 8; ++p)
                    for (std::size_t q = 0; q < 8; ++q)
                        for (std::size_t t = 0; t < 8; ++t)
                            s += gw[p] * gw[q] * gw[t] *
                                 f(Point{base[0] + len[0] * gx[p], base[1] + len[1] * gx[q],
                                         base[2] + len[2] * gx[t]});
            }
            ring_sum += vol * s;
        }
        total += ring_sum;
        if (ring > 6 && std::abs(ring_sum) < 1e-16 * std::abs(total) + 1e-300) break;
        hi = lo;
    }
    return total;
}

// Quartic Taylor model of an even O(|z|^4) perturbation at the origin.
inline double quartic_model(const Point& z, std::size_t n,
                            const std::array<std::array<double, 3>, 3>& d4) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double zi2 = z[i] * z[i];
        s += d4[i][i] * zi2 * zi2 / 24.0;
        for (std::size_t j = i + 1; j < n; ++j) s += d4[i][j] * zi2 * z[j] * z[j] / 4.0;
    }
    return s;
}

}  // namespace detail

// || u ||_rho for the perturbation u = u_hat - ubar. The origin node carries a
// singular weight; its cell is integrated with the local quartic model
// u ~ (quartic jet), making u^2 rho ~ |z|^(3-n) integrable. Sets `warning`
// when |u(0)| exceeds 1% of the sup norm (origin-vanishing drifted).
inline double norm_E0_checked(const Field& u, bool& warning) {
    const std::size_t n = u.mesh().dim();
    double sup = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) sup = std::max(sup, std::abs(u[k]));
    warning = std::abs(u[0]) > 0.01 * sup && sup > 0.0;
    if (sup == 0.0) return 0.0;
    const double core =
        quad_weighted_skip_origin(u, [n](const Point& p) { return weight_rho(p, n); });
    OriginJet jet = origin_jet(u);
    std::array<double, 3> a{};
    for (std::size_t i = 0; i < n; ++i) a[i] = u.mesh().axis(i)[1];
    double cell;
    if (n == 1) {
        const double z1 = a[0];
        const double c = jet.d4[0][0] / 24.0;
        cell = 2.0 * c * c * (std::pow(z1, 3.0) / 3.0 + 1e-3 * std::pow(z1, 9.0) / 9.0);
    } else {
        cell = std::ldexp(detail::corner_box_integral(a, n,
                                                      [&](const Point& p) {
                                                          const double m =
                                                              detail::quartic_model(p, n, jet.d4);
                                                          return m * m * weight_rho(p, n);
                                                      }),
                          static_cast<int>(n));
    }
    return std::sqrt(core + cell);
}

inline double norm_E0(const Field& u) {
    bool warning = false;
    return norm_E0_checked(u, warning);
}

// || nabla^j u <z>^(j+(1-n)/2) ||_2: weighted L2 of the j-th derivative tensor
// (multi-indices counted with multiplicity).
inline double norm_Qj(const Field& u, std::size_t j, std::size_t k_diag = 4) {
    if (j > k_diag) throw domain_error("norm_Qj: order exceeds k_diag");
    const std::size_t n = u.mesh().dim();
    std::vector<std::array<std::size_t, 3>> alphas;
    detail::enumerate_multi_indices(n, j, alphas);
    double acc = 0.0;
    for (const auto& alpha : alphas) {
        Field d = detail::multi_derivative(u, alpha);
        double mult = detail::factorial(j);
        for (std::size_t i = 0; i < n; ++i) mult /= detail::factorial(alpha[i]);
        acc += mult * quad_weighted(d, [&](const Point& p) {
            const double r = detail::radius(p, n);
            return std::pow(1.0 + r * r, double(j) + (1.0 - double(n)) / 2.0);
        });
    }
    return std::sqrt(acc);
}

// E^2 = E0^2 + mu E_k^2 with k = k_diag and the rho_k weight.
inline double norm_E(const Field& u, const WeightSpec& spec) {
    if (spec.k_diag < 1) throw config_error("norm_E: k_diag must be >= 1");
    if (!(spec.mu >= 0.0)) throw config_error("norm_E: mu must be nonnegative");
    const std::size_t n = u.mesh().dim();
    std::vector<std::array<std::size_t, 3>> alphas;
    detail::enumerate_multi_indices(n, spec.k_diag, alphas);
    double ek2 = 0.0;
    for (const auto& alpha : alphas) {
        Field d = detail::multi_derivative(u, alpha);
        double mult = detail::factorial(spec.k_diag);
        for (std::size_t i = 0; i < n; ++i) mult /= detail::factorial(alpha[i]);
        ek2 += mult * quad_weighted(
                          d, [&](const Point& p) { return weight_rhok(p, spec.k_diag, n); });
    }
    const double e0 = norm_E0(u);
    return std::sqrt(e0 * e0 + spec.mu * ek2);
}

// sup_z |u_hat - ubar| over the mesh nodes.
inline double residual_sup(const Field& u_hat) {
    const std::size_t n = u_hat.mesh().dim();
    double sup = 0.0;
    detail::for_each_node(u_hat.mesh(), [&](std::size_t k, const Point& p, double) {
        sup = std::max(sup, std::abs(u_hat[k] - profile_ubar(p, n)));
    });
    return sup;
}

// Law products whose plateaus encode the blowup law constants.
struct LawProducts {
    double law_cu = 0.0;                  // (c_u_hat + 1) tau   -> n/4
    std::array<double, 3> law_cl{};       // (1/2 - c_l_hat,i) tau -> (n+4)/8
    std::array<double, 3> law_lambda{};   // lambda_i tau        -> 1
};

inline LawProducts law_products(const NormalizationConstants& c,
                                const std::array<double, 3>& lambda, double tau) {
    LawProducts lp;
    lp.law_cu = (c.c_u_hat + 1.0) * tau;
    for (std::size_t i = 0; i < c.n; ++i) {
        lp.law_cl[i] = (0.5 - c.c_l_hat[i]) * tau;
        lp.law_lambda[i] = lambda[i] * tau;
    }
    return lp;
}

// C1 cubic smoothstep cutoff: 1 for r <= 1, 0 for r >= 2.
inline double chi_cutoff(double r) {
    if (r <= 1.0) return 1.0;
    if (r >= 2.0) return 0.0;
    const double s = r - 1.0;
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

// || sum_i F_i ||_rho for the simplified error term
//   sum_i F_i = -sum_i lambda_i z_i^2 |z|^2 ubar^3 / 64
//             + sum_j sum_i (lambda_i d4_ij / 2) z_j^2 (chi(|z|) - ubar^2),
// with d4 the perturbation's fourth-derivative jet.
inline double error_term_norm(const std::array<double, 3>& lambda,
                              const std::array<std::array<double, 3>, 3>& d4,
                              const TensorMesh& mesh) {
    const std::size_t n = mesh.dim();
    auto F = [&](const Point& p) {
        const double r = detail::radius(p, n);
        const double ub = profile_ubar_radial(r);
        double s = 0.0;
        const double cut = chi_cutoff(r) - ub * ub;
        for (std::size_t i = 0; i < n; ++i) {
            s += -lambda[i] * p[i] * p[i] * r * r * ub * ub * ub / 64.0;
            for (std::size_t j = 0; j < n; ++j)
                s += 0.5 * lambda[i] * d4[i][j] * p[j] * p[j] * cut;
        }
        return s;
    };
    double acc = 0.0;
    detail::for_each_node(mesh, [&](std::size_t k, const Point& p, double wt) {
        if (k == 0) return;
        const double v = F(p);
        acc += wt * v * v * weight_rho(p, n);
    });
    acc = std::ldexp(acc, static_cast<int>(n));
    std::array<double, 3> a{};
    for (std::size_t i = 0; i < n; ++i) a[i] = mesh.axis(i)[1];
    const double cell = std::ldexp(detail::corner_box_integral(a, n,
                                                               [&](const Point& p) {
                                                                   const double v = F(p);
                                                                   return v * v *
                                                                          weight_rho(p, n);
                                                               }),
                                   static_cast<int>(n));
    return std::sqrt(acc + cell);
}

// gamma_inv = 1/max_i lambda_i, G = E gamma_inv, kappa = sum_i 1/lambda_i.
struct BootstrapMonitor {
    double gamma_inv = 0.0;
    double G = 0.0;
    double kappa = 0.0;
};

inline BootstrapMonitor bootstrap_monitor(const RescaleState& state, double E) {
    BootstrapMonitor b;
    double lmax = 0.0;
    double kappa = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double li = state.lambda(i);
        lmax = std::max(lmax, li);
        kappa += 1.0 / li;
    }
    b.gamma_inv = 1.0 / lmax;
    b.G = E * b.gamma_inv;
    b.kappa = kappa;
    return b;
}

// One time-series row; all entries finite on accepted steps.
struct DiagnosticsRecord {
    std::uint64_t step = 0;
    double tau = 0.0;
    double t_phys = 0.0;
    std::array<double, 3> lambda{};
    double c_u_hat = 0.0;
    std::array<double, 3> c_l_hat{};
    double law_cu = 0.0;
    std::array<double, 3> law_cl{};
    std::array<double, 3> law_lambda{};
    double residual_sup = 0.0;
    double residual_times_tau = 0.0;
    double E0 = 0.0;
    std::vector<double> Qj;  // j = 0..k_diag
    double E = 0.0;
    double G = 0.0;
    double kappa = 0.0;
    double origin_drift_d0 = 0.0;
    double origin_drift_d2 = 0.0;
    double T_est = 0.0;
    double log_correction = 0.0;
    bool origin_vanishing_warning = false;  // not part of the CSV schema
};

// Reference origin observables captured at run start for the drift monitors.
struct OriginReference {
    double d0 = 1.0;
    std::array<double, 3> d2{};
};

inline OriginReference origin_reference(const Field& u_hat) {
    OriginJet jet = origin_jet(u_hat);
    OriginReference ref;
    ref.d0 = jet.d0;
    ref.d2 = jet.d2;
    return ref;
}

// Assemble a full record from a state; pure function of its inputs.
inline DiagnosticsRecord make_record(const RescaleState& state, const NormalizationConstants& c,
                                     const WeightSpec& spec, const OriginReference& ref) {
    DiagnosticsRecord r;
    r.step = state.step;
    r.tau = state.tau;
    r.t_phys = state.t_phys;
    const std::size_t n = state.dim();
    std::array<double, 3> lam{};
    for (std::size_t i = 0; i < n; ++i) {
        lam[i] = state.lambda(i);
        r.lambda[i] = lam[i];
    }
    r.c_u_hat = c.c_u_hat;
    r.c_l_hat = c.c_l_hat;
    const LawProducts lp = law_products(c, lam, state.tau);
    r.law_cu = lp.law_cu;
    r.law_cl = lp.law_cl;
    r.law_lambda = lp.law_lambda;
    r.residual_sup = residual_sup(state.u_hat);
    r.residual_times_tau = r.residual_sup * state.tau;

    Field u = state.u_hat;
    {
        const std::size_t N = u.size();
        Field ub = Field::sample(u.mesh_ptr(),
                                 [n](const Point& p) { return profile_ubar(p, n); });
        for (std::size_t k = 0; k < N; ++k) u[k] -= ub[k];
    }
    r.E0 = norm_E0_checked(u, r.origin_vanishing_warning);
    r.Qj.resize(spec.k_diag + 1);
    for (std::size_t j = 0; j <= spec.k_diag; ++j) r.Qj[j] = norm_Qj(u, j, spec.k_diag);
    r.E = norm_E(u, spec);
    bool inviscid = false;
    for (std::size_t i = 0; i < n; ++i) inviscid = inviscid || lam[i] == 0.0;
    if (!inviscid) {
        const BootstrapMonitor bm = bootstrap_monitor(state, r.E);
        r.G = bm.G;
        r.kappa = bm.kappa;
    }

    const OriginJet jet = origin_jet(state.u_hat);
    r.origin_drift_d0 = std::abs(jet.d0 - ref.d0) / std::abs(ref.d0);
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        dmax = std::max(dmax, std::abs(jet.d2[i] - ref.d2[i]) / std::abs(ref.d2[i]));
    r.origin_drift_d2 = dmax;

    const BlowupEstimate be = blowup_estimate(state);
    r.T_est = be.T_est;
    r.log_correction = be.log_correction;
    return r;
}

}  // namespace rescale
