#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <cmath>
#include <span>
#include <vector>

#include "rescale/field.hpp"
#include "rescale/mesh.hpp"

namespace rescale {

namespace detail {

// Least-squares fit of an even polynomial c0 + c2 z^2 + c4 z^4 + c6 z^6 + c8 z^8
// through the first J nodes of a mesh. The window holds the nodes with
// z <= 0.5, clamped to [5, 16]; on coarse graded meshes this degenerates to
// interpolation through the first five nodes, on fine meshes the cap shrinks
// the window so the fit converges under refinement.
class JetFitter {
  public:
    static constexpr std::size_t kTerms = 5;

    explicit JetFitter(const Mesh1D& mesh) {
        const auto& z = mesh.nodes();
        std::size_t J = static_cast<std::size_t>(
            std::upper_bound(z.begin(), z.end(), 0.5) - z.begin());
        J = std::clamp<std::size_t>(J, kTerms, std::min<std::size_t>(16, mesh.size()));
        J_ = J;
        xmax_ = z[J - 1] * z[J - 1];
        // Householder QR of the scaled Vandermonde A(j,k) = (z_j^2/xmax)^k,
        // then P = R^-1 Q1^T so that coefficients = P * values.
        std::vector<double> A(J * kTerms);
        for (std::size_t j = 0; j < J; ++j) {
            const double xi = z[j] * z[j] / xmax_;
            double p = 1.0;
            for (std::size_t k = 0; k < kTerms; ++k) {
                A[j * kTerms + k] = p;
                p *= xi;
            }
        }
        std::array<std::vector<double>, kTerms> vs;  // Householder vectors
        std::array<double, kTerms * kTerms> R{};
        for (std::size_t k = 0; k < kTerms; ++k) {
            double nrm = 0.0;
            for (std::size_t j = k; j < J; ++j) nrm += A[j * kTerms + k] * A[j * kTerms + k];
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) throw config_error("JetFitter: degenerate window");
            double alpha = (A[k * kTerms + k] >= 0.0) ? -nrm : nrm;
            std::vector<double> v(J, 0.0);
            for (std::size_t j = k; j < J; ++j) v[j] = A[j * kTerms + k];
            v[k] -= alpha;
            double vv = 0.0;
            for (std::size_t j = k; j < J; ++j) vv += v[j] * v[j];
            if (vv > 0.0) {
                for (std::size_t c = k; c < kTerms; ++c) {
                    double dot = 0.0;
                    for (std::size_t j = k; j < J; ++j) dot += v[j] * A[j * kTerms + c];
                    const double f = 2.0 * dot / vv;
                    for (std::size_t j = k; j < J; ++j) A[j * kTerms + c] -= f * v[j];
                }
            }
            vs[k] = std::move(v);
            vv_[k] = vv;
            for (std::size_t c = 0; c < kTerms; ++c) R[k * kTerms + c] = A[k * kTerms + c];
        }
        // Columns of P: for each unit vector, apply Q^T then backsolve R.
        P_.assign(kTerms * J, 0.0);
        std::vector<double> y(J);
        for (std::size_t col = 0; col < J; ++col) {
            std::fill(y.begin(), y.end(), 0.0);
            y[col] = 1.0;
            for (std::size_t k = 0; k < kTerms; ++k) {
                if (vv_[k] == 0.0) continue;
                double dot = 0.0;
                for (std::size_t j = k; j < J; ++j) dot += vs[k][j] * y[j];
                const double f = 2.0 * dot / vv_[k];
                for (std::size_t j = k; j < J; ++j) y[j] -= f * vs[k][j];
            }
            std::array<double, kTerms> c{};
            for (std::size_t k = kTerms; k-- > 0;) {
                double s = y[k];
                for (std::size_t c2 = k + 1; c2 < kTerms; ++c2) s -= R[k * kTerms + c2] * c[c2];
                c[k] = s / R[k * kTerms + k];
            }
            for (std::size_t k = 0; k < kTerms; ++k) P_[k * J + col] = c[k];
        }
    }

    std::size_t window() const { return J_; }

    // Coefficients of z^0, z^2, z^4, z^6, z^8 (unscaled).
    std::array<double, kTerms> coeffs(std::span<const double> values) const {
        std::array<double, kTerms> c{};
        double scale = 1.0;
        for (std::size_t k = 0; k < kTerms; ++k) {
            double s = 0.0;
            const double* row = &P_[k * J_];
            for (std::size_t j = 0; j < J_; ++j) s += row[j] * values[j];
            c[k] = s / scale;
            scale *= xmax_;
        }
        return c;
    }

    // Second derivative at the origin of the fitted even polynomial: 2 c2.
    double second_derivative(std::span<const double> values) const {
        double s = 0.0;
        const double* row = &P_[1 * J_];
        for (std::size_t j = 0; j < J_; ++j) s += row[j] * values[j];
        return 2.0 * s / xmax_;
    }

    // Fourth derivative at the origin of the fitted even polynomial: 24 c4.
    double fourth_derivative(std::span<const double> values) const {
        double s = 0.0;
        const double* row = &P_[2 * J_];
        for (std::size_t j = 0; j < J_; ++j) s += row[j] * values[j];
        return 24.0 * s / (xmax_ * xmax_);
    }

  private:
    std::size_t J_ = 0;
    double xmax_ = 1.0;
    std::vector<double> P_;
    std::array<double, kTerms> vv_{};
};

}  // namespace detail

// Value, per-axis second derivatives and per-axis-pair fourth derivatives of an
// even field at the origin.
struct OriginJet {
    std::size_t n = 1;
    double d0 = 0.0;
    std::array<double, 3> d2{};
    std::array<std::array<double, 3>, 3> d4{};
};

namespace detail {

// Gather the mesh line along `axis` through the origin, offset by `shift`
// nodes along `shift_axis`.
inline void gather_axis_line(const Field& f, std::size_t axis, std::size_t shift_axis,
                             std::size_t shift, std::span<double> out) {
    const TensorMesh& mesh = f.mesh();
    const std::size_t n = mesh.dim();
    std::size_t stride = 1;
    for (std::size_t i = n; i-- > axis + 1;) stride *= mesh.axis(i).size();
    std::size_t base = 0;
    if (shift_axis != axis && shift > 0) {
        std::size_t s2 = 1;
        for (std::size_t i = n; i-- > shift_axis + 1;) s2 *= mesh.axis(i).size();
        base = shift * s2;
    }
    const std::size_t len = out.size();
    for (std::size_t j = 0; j < len; ++j) out[j] = f[base + j * stride];
}

}  // namespace detail

// Origin jet of an even field: d0 from the origin node, d2 and d4 from the
// windowed even-polynomial fit, mixed d4 by applying the axis-i estimate to the
// line of axis-j second derivatives (then symmetrized).
inline OriginJet origin_jet(const Field& f) {
    if (!f.even_symmetry()) throw symmetry_error("origin_jet: field is not marked even-symmetric");
    const TensorMesh& mesh = f.mesh();
    const std::size_t n = mesh.dim();
    for (std::size_t i = 0; i < n; ++i)
        if (mesh.axis(i).size() < 8) throw config_error("origin_jet: per-axis M must be >= 8");

    OriginJet jet;
    jet.n = n;
    jet.d0 = f[0];
    std::array<std::unique_ptr<detail::JetFitter>, 3> fit;
    for (std::size_t i = 0; i < n; ++i) fit[i] = std::make_unique<detail::JetFitter>(mesh.axis(i));

    std::vector<double> line;
    for (std::size_t i = 0; i < n; ++i) {
        line.resize(mesh.axis(i).size());
        detail::gather_axis_line(f, i, i, 0, line);
        jet.d2[i] = fit[i]->second_derivative(line);
        jet.d4[i][i] = fit[i]->fourth_derivative(line);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // d2 along axis j, sampled at the first window nodes of axis i
            std::vector<double> g(fit[i]->window());
            std::vector<double> linej(mesh.axis(j).size());
            for (std::size_t a = 0; a < g.size(); ++a) {
                detail::gather_axis_line(f, j, i, a, linej);
                g[a] = fit[j]->second_derivative(linej);
            }
            const double dij = fit[i]->second_derivative(g);
            // and the transpose estimate
            std::vector<double> g2(fit[j]->window());
            std::vector<double> linei(mesh.axis(i).size());
            for (std::size_t a = 0; a < g2.size(); ++a) {
                detail::gather_axis_line(f, i, j, a, linei);
                g2[a] = fit[i]->second_derivative(linei);
            }
            const double dji = fit[j]->second_derivative(g2);
            jet.d4[i][j] = jet.d4[j][i] = 0.5 * (dij + dji);
        }
    }
    return jet;
}

}  // namespace rescale
