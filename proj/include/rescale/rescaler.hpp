#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "rescale/field.hpp"
#include "rescale/jet.hpp"
#include "rescale/mesh.hpp"
#include "rescale/profile.hpp"
#include "rescale/spline.hpp"

namespace rescale {

// Per-step scaling rates: c_u_hat near -1, c_l_hat_i near 1/2 once converged.
struct NormalizationConstants {
    std::size_t n = 1;
    double c_u_hat = -1.0;
    std::array<double, 3> c_l_hat{0.5, 0.5, 0.5};
};

// Full dynamic-rescaling state. lambda_i = Cu/Cl_i^2 is kept in log form so
// positivity is structural; lambda = 0 (inviscid runs) is log_lambda = -inf.
struct RescaleState {
    Field u_hat;
    double tau = 0.0;
    double t_phys = 0.0;
    double Cu0 = 1.0;
    double cu_integral = 0.0;                    // int c_u_hat dtau
    std::array<double, 3> cl_integral{};         // int c_l_hat_i dtau
    std::array<double, 3> log_lambda{};
    std::array<double, 3> log_Cl0{};             // initial spatial rescaling offsets
    std::uint64_t step = 0;

    std::size_t dim() const { return u_hat.mesh().dim(); }
    double lambda(std::size_t i) const { return std::exp(log_lambda[i]); }
    double Cu() const { return Cu0 * std::exp(cu_integral); }
    double Cl(std::size_t i) const { return std::exp(log_Cl0[i] - cl_integral[i]); }

    static RescaleState initial(Field u_hat0, std::array<double, 3> lambda0, double Cu0) {
        RescaleState s{std::move(u_hat0)};
        s.Cu0 = Cu0;
        const std::size_t n = s.dim();
        for (std::size_t i = 0; i < n; ++i) {
            s.log_lambda[i] = std::log(lambda0[i]);  // -inf for lambda0 = 0
            s.log_Cl0[i] = 0.5 * (std::log(Cu0) - s.log_lambda[i]);
        }
        return s;
    }
};

// Normalization constants from a given origin jet, solving the stationarity
// of u_hat(0) and u_hat_ii(0) in closed form:
//   c_u_hat   = -u(0) - sum_i lambda_i u_ii(0) / u(0)
//   c_l_hat,i = c_u_hat/2 + u(0) + sum_j lambda_j u_iijj(0) / (2 u_ii(0))
inline NormalizationConstants normalization_from_jet(const OriginJet& jet,
                                                     const std::array<double, 3>& lambda) {
    if (jet.d0 == 0.0)
        throw singular_normalization_error("normalization: u_hat(0) = 0");
    NormalizationConstants c;
    c.n = jet.n;
    double diff = 0.0;
    for (std::size_t i = 0; i < jet.n; ++i) diff += lambda[i] * jet.d2[i];
    c.c_u_hat = -jet.d0 - diff / jet.d0;
    for (std::size_t i = 0; i < jet.n; ++i) {
        if (jet.d2[i] == 0.0)
            throw singular_normalization_error("normalization: u_hat_ii(0) = 0 on axis " +
                                               std::to_string(i));
        double num = 0.0;
        for (std::size_t j = 0; j < jet.n; ++j) num += lambda[j] * jet.d4[i][j];
        c.c_l_hat[i] = c.c_u_hat / 2.0 + jet.d0 + num / (2.0 * jet.d2[i]);
    }
    return c;
}

inline NormalizationConstants normalization(const RescaleState& state, const OriginJet& jet) {
    std::array<double, 3> lam{};
    for (std::size_t i = 0; i < state.dim(); ++i) lam[i] = state.lambda(i);
    return normalization_from_jet(jet, lam);
}

// CFL bound: dt = safety * min over axes and intervals of
//   h_j / max(|c_l_hat,i| z_{j+1}, eps)  and  h_j^2 / (2 sum lambda_i + eps).
inline double cfl_timestep(const RescaleState& state, const NormalizationConstants& c,
                           double safety) {
    constexpr double eps_v = 1e-14;
    const TensorMesh& mesh = state.u_hat.mesh();
    const std::size_t n = mesh.dim();
    double sum_lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_lambda += state.lambda(i);
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Mesh1D& ax = mesh.axis(i);
        const double speed = std::abs(c.c_l_hat[i]);
        for (std::size_t j = 0; j + 1 < ax.size(); ++j) {
            const double h = ax[j + 1] - ax[j];
            dt = std::min(dt, h / std::max(speed * ax[j + 1], eps_v));
            dt = std::min(dt, h * h / (2.0 * sum_lambda + eps_v));
        }
    }
    return safety * dt;
}

struct StepOptions {
    // Re-derive the normalization constants at every RK4 stage. Freezing them
    // at the step start (the classical ordering) leaves an O(dt^2)-per-step drift
    // in u_hat_ii(0) that accumulates past 1e-3 over long runs.
    bool stage_refresh = true;
    // discrete: solve stationarity of the origin observables against the
    //           discrete operators (drift-free by construction).
    // jet_formula: evaluate the printed formula on the fitted origin jet.
    enum class Normalization { discrete, jet_formula } normalization = Normalization::discrete;
};

// The dynamic-rescaling stepper for one mesh. Holds the factored spline
// systems, the origin-window fitters and the profile samples; one instance per
// run (not thread-safe, use one Engine per thread).
class Engine {
  public:
    explicit Engine(MeshPtr mesh) : mesh_(std::move(mesh)), n_(mesh_->dim()) {
        const std::size_t N = mesh_->total_nodes();
        for (std::size_t i = 0; i < n_; ++i) {
            solver_[i] = std::make_unique<SplineSolver>(mesh_->axis(i), OriginClosure::even);
            fitter_[i] = std::make_unique<detail::JetFitter>(mesh_->axis(i));
            stride_[i] = 1;
            for (std::size_t k = n_; k-- > i + 1;) stride_[i] *= mesh_->axis(k).size();
            size_[i] = mesh_->axis(i).size();
        }
        ub_.resize(N);
        for (std::size_t i = 0; i < n_; ++i) {
            ub_d1_[i].resize(N);
            ub_d2_[i].resize(N);
            coord_[i].resize(N);
            d1_[i].resize(N);
            d2_[i].resize(N);
        }
        Field samples = Field::sample(mesh_, [&](const Point& p) { return profile_ubar(p, n_); });
        ub_ = samples.values();
        std::array<std::size_t, 3> idx{0, 0, 0};
        Point p{0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < N; ++k) {
            for (std::size_t i = 0; i < n_; ++i) p[i] = mesh_->axis(i)[idx[i]];
            for (std::size_t i = 0; i < n_; ++i) {
                ub_d1_[i][k] = profile_ubar_d1(p, n_, i);
                ub_d2_[i][k] = profile_ubar_d2(p, n_, i);
                coord_[i][k] = p[i];
            }
            for (std::size_t i = n_; i-- > 0;) {
                if (++idx[i] < mesh_->axis(i).size()) break;
                idx[i] = 0;
            }
        }
        u_.resize(N);
        A1_.resize(N);
        G0_.resize(N);
        for (std::size_t i = 0; i < n_; ++i) B_[i].resize(N);
        for (auto& k : k_) k.resize(N);
        stage_.resize(N);
        line_.resize(maxM());
        mom_.resize(maxM());
        ld1_.resize(maxM());
        ld2_.resize(maxM());
    }

    const MeshPtr& mesh_ptr() const { return mesh_; }
    const TensorMesh& mesh() const { return *mesh_; }
    std::size_t dim() const { return n_; }
    const std::vector<double>& profile_samples() const { return ub_; }

    // Normalization constants for the current state (diagnostic entry point).
    NormalizationConstants constants(const RescaleState& state, const StepOptions& opts = {}) {
        std::array<double, 3> lam{};
        for (std::size_t i = 0; i < n_; ++i) lam[i] = state.lambda(i);
        if (opts.normalization == StepOptions::Normalization::jet_formula)
            return normalization_from_jet(origin_jet(state.u_hat), lam);
        assemble_parts(state.u_hat.values(), lam);
        return solve_constants();
    }

    // One classical RK4 step of (u_hat, log lambda_i) with the scaling
    // bookkeeping; throws step_rejected_error on non-finite values.
    RescaleState rk4_step(const RescaleState& state, double dt, const StepOptions& opts = {}) {
        const std::size_t N = mesh_->total_nodes();
        std::array<double, 3> lam{};
        for (std::size_t i = 0; i < n_; ++i) lam[i] = state.lambda(i);
        const std::vector<double>& y0 = state.u_hat.values();

        NormalizationConstants c1 = stage_rhs(y0, lam, k_[0], nullptr, opts);
        NormalizationConstants cs = c1;
        for (std::size_t k = 0; k < N; ++k) stage_[k] = y0[k] + 0.5 * dt * k_[0][k];
        NormalizationConstants c2 = stage_rhs(stage_, lam, k_[1], &cs, opts);
        for (std::size_t k = 0; k < N; ++k) stage_[k] = y0[k] + 0.5 * dt * k_[1][k];
        NormalizationConstants c3 = stage_rhs(stage_, lam, k_[2], &cs, opts);
        for (std::size_t k = 0; k < N; ++k) stage_[k] = y0[k] + dt * k_[2][k];
        NormalizationConstants c4 = stage_rhs(stage_, lam, k_[3], &cs, opts);

        RescaleState out = state;
        std::vector<double>& y = out.u_hat.values();
        for (std::size_t k = 0; k < N; ++k)
            y[k] = y0[k] + dt / 6.0 * (k_[0][k] + 2.0 * k_[1][k] + 2.0 * k_[2][k] + k_[3][k]);
        if (!out.u_hat.all_finite())
            throw step_rejected_error("rk4_step: non-finite field after stage");

        // RK4-weighted constants; equal to the frozen ones when not refreshed.
        NormalizationConstants ce;
        ce.n = n_;
        ce.c_u_hat = (c1.c_u_hat + 2.0 * c2.c_u_hat + 2.0 * c3.c_u_hat + c4.c_u_hat) / 6.0;
        for (std::size_t i = 0; i < n_; ++i)
            ce.c_l_hat[i] =
                (c1.c_l_hat[i] + 2.0 * c2.c_l_hat[i] + 2.0 * c3.c_l_hat[i] + c4.c_l_hat[i]) / 6.0;

        const double Cu_old = out.Cu();
        out.cu_integral += ce.c_u_hat * dt;
        for (std::size_t i = 0; i < n_; ++i) {
            out.cl_integral[i] += ce.c_l_hat[i] * dt;
            out.log_lambda[i] += (2.0 * ce.c_l_hat[i] + ce.c_u_hat) * dt;
        }
        out.t_phys += 0.5 * dt * (Cu_old + out.Cu());
        out.tau += dt;
        out.step += 1;
        return out;
    }

    // Spline first/second derivatives of `v` along `axis` at every node,
    // using the factored even-closure system.
    void axis_derivatives(const std::vector<double>& v, std::size_t axis, std::vector<double>& d1,
                          std::vector<double>& d2) {
        const std::size_t M = size_[axis];
        const std::size_t stride = stride_[axis];
        const std::size_t N = v.size();
        const std::size_t nlines = N / M;
        for (std::size_t l = 0; l < nlines; ++l) {
            // base index of this line: enumerate all index tuples with axis-th
            // component zero. lines are ordered by the remaining indices.
            const std::size_t block = l / stride;
            const std::size_t rem = l % stride;
            const std::size_t base = block * stride * M + rem;
            for (std::size_t j = 0; j < M; ++j) line_[j] = v[base + j * stride];
            solver_[axis]->node_derivs(std::span<const double>(line_.data(), M),
                                       std::span<double>(mom_.data(), M),
                                       std::span<double>(ld1_.data(), M),
                                       std::span<double>(ld2_.data(), M));
            for (std::size_t j = 0; j < M; ++j) {
                d1[base + j * stride] = ld1_[j];
                d2[base + j * stride] = ld2_[j];
            }
        }
    }

  private:
    std::size_t maxM() const {
        std::size_t m = 0;
        for (std::size_t i = 0; i < n_; ++i) m = std::max(m, mesh_->axis(i).size());
        return m;
    }

    // Build A1 = u_hat, B_i = z_i (ubar_i + d1_i u), and
    // G0 = -u - 1/2 sum z_i d1_i u + 2 ubar u + u^2 + sum lambda_i (ubar_ii + d2_i u)
    // so that rhs = c_u A1 - sum_i c_l,i B_i + G0 with the perturbation
    // u = u_hat - ubar; the profile part of the inviscid flow cancels exactly.
    void assemble_parts(const std::vector<double>& uhat, const std::array<double, 3>& lam) {
        const std::size_t N = uhat.size();
        for (std::size_t k = 0; k < N; ++k) u_[k] = uhat[k] - ub_[k];
        for (std::size_t i = 0; i < n_; ++i) axis_derivatives(u_, i, d1_[i], d2_[i]);
        for (std::size_t k = 0; k < N; ++k) {
            A1_[k] = uhat[k];
            double g = -u_[k] + 2.0 * ub_[k] * u_[k] + u_[k] * u_[k];
            for (std::size_t i = 0; i < n_; ++i) {
                const double zi = coord_[i][k];
                B_[i][k] = zi * (ub_d1_[i][k] + d1_[i][k]);
                g += -0.5 * zi * d1_[i][k] + lam[i] * (ub_d2_[i][k] + d2_[i][k]);
            }
            G0_[k] = g;
        }
    }

    double observable_W(std::size_t axis, const std::vector<double>& f) {
        const std::size_t J = fitter_[axis]->window();
        const std::size_t stride = stride_[axis];
        for (std::size_t j = 0; j < J; ++j) line_[j] = f[j * stride];
        return fitter_[axis]->second_derivative(std::span<const double>(line_.data(), J));
    }

    // Solve V(rhs) = 0 and W_i(rhs) = 0 for the constants; V is the origin
    // value, W_i the windowed second-derivative observable along axis i.
    // W_i(B_j) = 0 for j != i because B_j vanishes on the axis-i line.
    // The modulation system degenerates when u_hat(0) or u_hat_ii(0) sits at
    // the measurement noise floor relative to the field scale.
    NormalizationConstants solve_constants() {
        double scale = 0.0;
        for (double v : A1_) scale = std::max(scale, std::abs(v));
        const double floor = 1e-6 * scale;
        NormalizationConstants c;
        c.n = n_;
        const double a0 = A1_[0];
        if (!std::isfinite(a0) || std::abs(a0) <= floor)
            throw singular_normalization_error("normalization: u_hat(0) = 0");
        const double cu_small = -G0_[0] / a0;
        c.c_u_hat = -1.0 + cu_small;
        for (std::size_t i = 0; i < n_; ++i) {
            const double wa = observable_W(i, A1_);
            const double wb = observable_W(i, B_[i]);
            if (!std::isfinite(wb) || std::abs(wa) <= floor || std::abs(wb) <= floor)
                throw singular_normalization_error("normalization: u_hat_ii(0) = 0 on axis " +
                                                   std::to_string(i));
            const double cl_small = (cu_small * wa + observable_W(i, G0_)) / wb;
            c.c_l_hat[i] = 0.5 + cl_small;
        }
        return c;
    }

    // Assemble the stage RHS; optionally reuse frozen constants. A degenerate
    // normalization on the first stage is a property of the state and aborts;
    // on later stages it is an artifact of the trial dt and rejects the step.
    NormalizationConstants stage_rhs(const std::vector<double>& uhat,
                                     const std::array<double, 3>& lam, std::vector<double>& out,
                                     const NormalizationConstants* frozen,
                                     const StepOptions& opts) {
        for (double v : uhat)
            if (!std::isfinite(v)) throw step_rejected_error("rk4_step: non-finite stage field");
        assemble_parts(uhat, lam);
        NormalizationConstants c;
        const bool first_stage = frozen == nullptr;
        try {
            if (frozen != nullptr && !opts.stage_refresh) {
                c = *frozen;
            } else if (opts.normalization == StepOptions::Normalization::jet_formula) {
                Field tmp(mesh_, uhat);
                c = normalization_from_jet(origin_jet(tmp), lam);
            } else {
                c = solve_constants();
            }
        } catch (const singular_normalization_error&) {
            if (first_stage) throw;
            throw step_rejected_error("rk4_step: degenerate normalization at a trial stage");
        }
        const double cu_small = c.c_u_hat + 1.0;
        const std::size_t N = uhat.size();
        for (std::size_t k = 0; k < N; ++k) {
            double r = cu_small * A1_[k] + G0_[k];
            for (std::size_t i = 0; i < n_; ++i) r -= (c.c_l_hat[i] - 0.5) * B_[i][k];
            out[k] = r;
        }
        return c;
    }

    MeshPtr mesh_;
    std::size_t n_;
    std::array<std::unique_ptr<SplineSolver>, 3> solver_;
    std::array<std::unique_ptr<detail::JetFitter>, 3> fitter_;
    std::array<std::size_t, 3> stride_{1, 1, 1};
    std::array<std::size_t, 3> size_{0, 0, 0};
    std::vector<double> ub_;
    std::array<std::vector<double>, 3> ub_d1_, ub_d2_, coord_, d1_, d2_, B_;
    std::vector<double> u_, A1_, G0_, stage_;
    std::array<std::vector<double>, 4> k_;
    std::vector<double> line_, mom_, ld1_, ld2_;
};

// One step with rejection handling: on non-finite values the step is retried
// with halved dt, up to `max_retries` times.
inline RescaleState advance_with_retry(Engine& engine, const RescaleState& state, double dt,
                                       const StepOptions& opts = {}, int max_retries = 5) {
    for (int attempt = 0;; ++attempt) {
        try {
            return engine.rk4_step(state, dt, opts);
        } catch (const step_rejected_error&) {
            if (attempt >= max_retries)
                throw numerical_blowup_error("step rejected after " +
                                             std::to_string(max_retries) + " halvings");
            dt *= 0.5;
        }
    }
}

// Convenience one-shot step (tests); runs construct an Engine once instead.
inline RescaleState rk4_step(const RescaleState& state, double dt, const StepOptions& opts = {}) {
    Engine engine(state.u_hat.mesh_ptr());
    return engine.rk4_step(state, dt, opts);
}

// The renormalized right-hand side with given constants, evaluated directly on
// u_hat with even splines:
//   c_u_hat u - sum_i c_l_hat,i z_i u_i + u^2 + sum_i lambda_i u_ii.
// At the outer boundary the advection is outflow, so the one-sided spline
// values need no inflow data.
inline Field rhs(const Field& u_hat, const NormalizationConstants& c,
                 const std::array<double, 3>& lambda) {
    if (!u_hat.even_symmetry()) throw symmetry_error("rhs: field is not marked even-symmetric");
    const TensorMesh& mesh = u_hat.mesh();
    const std::size_t n = mesh.dim();
    const std::size_t N = u_hat.size();
    Field out(u_hat.mesh_ptr(), u_hat.even_symmetry());
    for (std::size_t k = 0; k < N; ++k)
        out[k] = c.c_u_hat * u_hat[k] + u_hat[k] * u_hat[k];
    std::vector<double> d1(N), d2(N), line, mom, l1, l2;
    for (std::size_t i = 0; i < n; ++i) {
        const Mesh1D& ax = mesh.axis(i);
        const std::size_t M = ax.size();
        SplineSolver solver(ax, OriginClosure::even);
        std::size_t stride = 1;
        for (std::size_t k = n; k-- > i + 1;) stride *= mesh.axis(k).size();
        line.resize(M);
        mom.resize(M);
        l1.resize(M);
        l2.resize(M);
        const std::size_t nlines = N / M;
        for (std::size_t l = 0; l < nlines; ++l) {
            const std::size_t base = (l / stride) * stride * M + (l % stride);
            for (std::size_t j = 0; j < M; ++j) line[j] = u_hat[base + j * stride];
            solver.node_derivs(line, mom, l1, l2);
            for (std::size_t j = 0; j < M; ++j) {
                const std::size_t k = base + j * stride;
                out[k] += -c.c_l_hat[i] * ax[j] * l1[j] + lambda[i] * l2[j];
            }
        }
    }
    if (!out.all_finite()) throw step_rejected_error("rhs: non-finite value");
    return out;
}

// Blowup-time estimate and the logarithmic-correction monitor:
//   T_est = t + Cu,   log_correction = tau / |log(T_est - t)| -> 1.
struct BlowupEstimate {
    double T_est = 0.0;
    double log_correction = 0.0;
};

inline BlowupEstimate blowup_estimate(const RescaleState& state) {
    BlowupEstimate b;
    const double Cu = state.Cu();
    b.T_est = state.t_phys + Cu;
    const double denom = std::abs(std::log(Cu));
    b.log_correction = denom > 1e-300 ? state.tau / denom : 0.0;
    return b;
}

// Pure-ODE mode: with u_hat frozen at the profile, the modulation system
// reduces to (log lambda_i)_tau = -lambda_i. Classical RK4 with per-stage
// evaluation; fourth-order accurate in dt.
inline std::array<double, 3> integrate_lambda_ode(std::size_t n, std::array<double, 3> lambda0,
                                                  double dt, double tau_end) {
    std::array<double, 3> y{};
    for (std::size_t i = 0; i < n; ++i) y[i] = std::log(lambda0[i]);
    auto f = [n](const std::array<double, 3>& yy, std::array<double, 3>& out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = -std::exp(yy[i]);
    };
    double tau = 0.0;
    std::array<double, 3> k1{}, k2{}, k3{}, k4{}, tmp{};
    while (tau < tau_end - 1e-15) {
        const double h = std::min(dt, tau_end - tau);
        f(y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        f(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        f(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        f(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        tau += h;
    }
    std::array<double, 3> lam{};
    for (std::size_t i = 0; i < n; ++i) lam[i] = std::exp(y[i]);
    return lam;
}

// ---- checkpoint io ---------------------------------------------------------

namespace detail {

inline double parse_double(std::istream& is) {
    std::string tok;
    if (!(is >> tok)) throw io_error("checkpoint: truncated file");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw io_error("checkpoint: bad number '" + tok + "'");
    return v;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const RescaleState& s) {
    const std::size_t n = s.dim();
    os << "rescale-checkpoint 1\n";
    os << "mesh\n";
    write_mesh(os, s.u_hat.mesh());
    os << "scalars\n";
    os << "step " << s.step << '\n';
    os << "tau " << format_g17(s.tau) << '\n';
    os << "t_phys " << format_g17(s.t_phys) << '\n';
    os << "cu0 " << format_g17(s.Cu0) << '\n';
    os << "cu_integral " << format_g17(s.cu_integral) << '\n';
    os << "log_lambda";
    for (std::size_t i = 0; i < n; ++i) os << ' ' << format_g17(s.log_lambda[i]);
    os << '\n';
    os << "cl_integral";
    for (std::size_t i = 0; i < n; ++i) os << ' ' << format_g17(s.cl_integral[i]);
    os << '\n';
    os << "log_cl0";
    for (std::size_t i = 0; i < n; ++i) os << ' ' << format_g17(s.log_Cl0[i]);
    os << '\n';
    os << "field " << s.u_hat.size() << '\n';
    for (double v : s.u_hat.values()) os << format_g17(v) << '\n';
}

inline RescaleState read_checkpoint(std::istream& is) {
    std::string word;
    int version = 0;
    if (!(is >> word >> version) || word != "rescale-checkpoint" || version != 1)
        throw io_error("checkpoint: bad header");
    auto expect = [&](const char* key) {
        if (!(is >> word) || word != key)
            throw io_error(std::string("checkpoint: expected '") + key + "'");
    };
    expect("mesh");
    auto mesh = std::make_shared<TensorMesh>(read_mesh(is));
    const std::size_t n = mesh->dim();
    expect("scalars");
    expect("step");
    std::uint64_t step = 0;
    if (!(is >> step)) throw io_error("checkpoint: bad step");
    expect("tau");
    const double tau = detail::parse_double(is);
    expect("t_phys");
    const double t_phys = detail::parse_double(is);
    expect("cu0");
    const double cu0 = detail::parse_double(is);
    expect("cu_integral");
    const double cu_int = detail::parse_double(is);
    std::array<double, 3> log_lambda{}, cl_int{}, log_cl0{};
    expect("log_lambda");
    for (std::size_t i = 0; i < n; ++i) log_lambda[i] = detail::parse_double(is);
    expect("cl_integral");
    for (std::size_t i = 0; i < n; ++i) cl_int[i] = detail::parse_double(is);
    expect("log_cl0");
    for (std::size_t i = 0; i < n; ++i) log_cl0[i] = detail::parse_double(is);
    expect("field");
    std::size_t count = 0;
    if (!(is >> count) || count != mesh->total_nodes())
        throw io_error("checkpoint: field size mismatch");
    std::vector<double> values(count);
    for (auto& v : values) v = detail::parse_double(is);
    RescaleState s{Field(mesh, std::move(values))};
    s.tau = tau;
    s.t_phys = t_phys;
    s.Cu0 = cu0;
    s.cu_integral = cu_int;
    s.log_lambda = log_lambda;
    s.cl_integral = cl_int;
    s.log_Cl0 = log_cl0;
    s.step = step;
    return s;
}

}  // namespace rescale
