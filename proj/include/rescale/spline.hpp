#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "rescale/mesh.hpp"

namespace rescale {

namespace detail {

// Banded LU with partial pivoting (LAPACK-style band storage).
// Factor once per matrix, solve many right-hand sides.
class BandedLU {
  public:
    BandedLU(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), rows_(2 * kl + ku + 1), ab_(rows_ * n, 0.0), ipiv_(n, 0) {}

    // A(i,j) with |i-j| within the band; call before factor().
    double& at(std::size_t i, std::size_t j) { return ab_[(kl_ + ku_ + i - j) * n_ + j]; }

    void factor() {
        const std::size_t kv = kl_ + ku_;  // row offset of the diagonal
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t lm = std::min(kl_, n_ - 1 - k);
            std::size_t piv = k;
            double amax = std::abs(ab_[kv * n_ + k]);
            for (std::size_t i = 1; i <= lm; ++i) {
                const double v = std::abs(ab_[(kv + i) * n_ + k]);
                if (v > amax) {
                    amax = v;
                    piv = k + i;
                }
            }
            ipiv_[k] = piv;
            if (amax == 0.0) throw config_error("BandedLU: singular matrix");
            const std::size_t jmax = std::min(n_ - 1, k + kv);
            if (piv != k) {
                for (std::size_t j = k; j <= jmax; ++j)
                    std::swap(ab_[(kv + k - j) * n_ + j], ab_[(kv + piv - j) * n_ + j]);
            }
            const double pivot = ab_[kv * n_ + k];
            for (std::size_t i = 1; i <= lm; ++i) {
                double& m = ab_[(kv + i) * n_ + k];
                m /= pivot;
                const double mult = m;
                for (std::size_t j = k + 1; j <= jmax; ++j)
                    ab_[(kv + k + i - j) * n_ + j] -= mult * ab_[(kv + k - j) * n_ + j];
            }
        }
        factored_ = true;
    }

    void solve(double* b) const {
        const std::size_t kv = kl_ + ku_;
        for (std::size_t k = 0; k < n_; ++k) {
            if (ipiv_[k] != k) std::swap(b[k], b[ipiv_[k]]);
            const std::size_t lm = std::min(kl_, n_ - 1 - k);
            for (std::size_t i = 1; i <= lm; ++i) b[k + i] -= ab_[(kv + i) * n_ + k] * b[k];
        }
        for (std::size_t k = n_; k-- > 0;) {
            const std::size_t jmax = std::min(n_ - 1, k + kv);
            double s = b[k];
            for (std::size_t j = k + 1; j <= jmax; ++j) s -= ab_[(kv + k - j) * n_ + j] * b[j];
            b[k] = s / ab_[kv * n_ + k];
        }
    }

    bool factored() const { return factored_; }

  private:
    std::size_t n_, kl_, ku_, rows_;
    std::vector<double> ab_;
    std::vector<std::size_t> ipiv_;
    bool factored_ = false;
};

}  // namespace detail

// Closure at z = 0. The outer boundary closure is always not-a-knot.
//   even: the field extends evenly across z = 0, so S'(0) = 0.
//   odd:  the field extends oddly, so S''(0) = 0.
//   none: no symmetry; not-a-knot at z = 0 as well.
enum class OriginClosure { even, odd, none };

// Factored interpolation system for one mesh + closure. Building the matrix
// costs O(M) once; each spline solve is then O(M).
class SplineSolver {
  public:
    SplineSolver(const Mesh1D& mesh, OriginClosure closure)
        : mesh_(&mesh), closure_(closure), lu_(mesh.size(), 2, 2) {
        const std::size_t M = mesh.size();
        if (M < 8) throw config_error("SplineSolver: mesh too coarse (M < 8)");
        h_.resize(M - 1);
        for (std::size_t j = 0; j + 1 < M; ++j) h_[j] = mesh[j + 1] - mesh[j];
        switch (closure_) {
            case OriginClosure::even:  // S'(0) = 0
                lu_.at(0, 0) = h_[0] / 3.0;
                lu_.at(0, 1) = h_[0] / 6.0;
                break;
            case OriginClosure::odd:  // S''(0) = 0
                lu_.at(0, 0) = 1.0;
                break;
            case OriginClosure::none:  // third-derivative continuity at z_1
                lu_.at(0, 0) = 1.0 / h_[0];
                lu_.at(0, 1) = -(1.0 / h_[0] + 1.0 / h_[1]);
                lu_.at(0, 2) = 1.0 / h_[1];
                break;
        }
        for (std::size_t j = 1; j + 1 < M; ++j) {
            lu_.at(j, j - 1) = h_[j - 1] / 6.0;
            lu_.at(j, j) = (h_[j - 1] + h_[j]) / 3.0;
            lu_.at(j, j + 1) = h_[j] / 6.0;
        }
        // not-a-knot at z_{M-2}
        lu_.at(M - 1, M - 3) = 1.0 / h_[M - 3];
        lu_.at(M - 1, M - 2) = -(1.0 / h_[M - 3] + 1.0 / h_[M - 2]);
        lu_.at(M - 1, M - 1) = 1.0 / h_[M - 2];
        lu_.factor();
    }

    const Mesh1D& mesh() const { return *mesh_; }
    OriginClosure closure() const { return closure_; }

    // Node second derivatives (spline moments).
    void moments(std::span<const double> y, std::span<double> mom) const {
        const std::size_t M = mesh_->size();
        double dprev = (y[1] - y[0]) / h_[0];
        switch (closure_) {
            case OriginClosure::even:
                mom[0] = dprev;
                break;
            default:
                mom[0] = 0.0;
                break;
        }
        for (std::size_t j = 1; j + 1 < M; ++j) {
            const double dj = (y[j + 1] - y[j]) / h_[j];
            mom[j] = dj - dprev;
            dprev = dj;
        }
        mom[M - 1] = 0.0;
        lu_.solve(mom.data());
    }

    // First and second derivatives at every node. `mom` is scratch of size M.
    void node_derivs(std::span<const double> y, std::span<double> mom, std::span<double> d1,
                     std::span<double> d2) const {
        const std::size_t M = mesh_->size();
        moments(y, mom);
        for (std::size_t j = 0; j + 1 < M; ++j) {
            const double dj = (y[j + 1] - y[j]) / h_[j];
            d1[j] = dj - h_[j] * (2.0 * mom[j] + mom[j + 1]) / 6.0;
            d2[j] = mom[j];
        }
        const std::size_t e = M - 2;
        const double de = (y[e + 1] - y[e]) / h_[e];
        d1[M - 1] = de + h_[e] * (2.0 * mom[M - 1] + mom[e]) / 6.0;
        d2[M - 1] = mom[M - 1];
    }

  private:
    const Mesh1D* mesh_;
    OriginClosure closure_;
    std::vector<double> h_;
    detail::BandedLU lu_;
};

// Piecewise-cubic interpolant: exact at nodes, C2 at interior nodes.
class SplineCoeffs {
  public:
    SplineCoeffs(std::shared_ptr<const Mesh1D> mesh, std::span<const double> y,
                 const SplineSolver& solver)
        : mesh_(std::move(mesh)) {
        const std::size_t M = mesh_->size();
        closure_ = solver.closure();
        mom_.resize(M);
        solver.moments(y, mom_);
        a_.assign(y.begin(), y.end());
        b_.resize(M - 1);
        for (std::size_t j = 0; j + 1 < M; ++j) {
            const double h = (*mesh_)[j + 1] - (*mesh_)[j];
            b_[j] = (y[j + 1] - y[j]) / h - h * (2.0 * mom_[j] + mom_[j + 1]) / 6.0;
        }
    }

    const Mesh1D& mesh() const { return *mesh_; }
    OriginClosure closure() const { return closure_; }
    const std::vector<double>& moments() const { return mom_; }

    double eval(double z, int order = 0) const {
        const double L = mesh_->L();
        if (!(z >= 0.0 && z <= L)) throw domain_error("spline eval: z outside [0, L]");
        if (order < 0 || order > 2) throw domain_error("spline eval: order must be 0, 1 or 2");
        const auto& nodes = mesh_->nodes();
        std::size_t j = static_cast<std::size_t>(
            std::upper_bound(nodes.begin(), nodes.end(), z) - nodes.begin());
        j = std::clamp<std::size_t>(j, 1, nodes.size() - 1) - 1;
        const double h = nodes[j + 1] - nodes[j];
        const double t = z - nodes[j];
        const double c = mom_[j] / 2.0;
        const double e = (mom_[j + 1] - mom_[j]) / (6.0 * h);
        switch (order) {
            case 0: return a_[j] + t * (b_[j] + t * (c + t * e));
            case 1: return b_[j] + t * (2.0 * c + 3.0 * t * e);
            default: return 2.0 * c + 6.0 * t * e;
        }
    }

  private:
    std::shared_ptr<const Mesh1D> mesh_;
    OriginClosure closure_;
    std::vector<double> a_, b_, mom_;
};

// Convenience one-shot build. `even` selects the even-reflection closure at
// z = 0; otherwise not-a-knot is used at both ends.
inline SplineCoeffs build_spline(std::shared_ptr<const Mesh1D> mesh, std::span<const double> values,
                                 bool even) {
    if (!mesh || mesh->size() < 8) throw config_error("build_spline: mesh too coarse (M < 8)");
    if (values.size() != mesh->size()) throw config_error("build_spline: value count mismatch");
    SplineSolver solver(*mesh, even ? OriginClosure::even : OriginClosure::none);
    return SplineCoeffs(std::move(mesh), values, solver);
}

inline double eval(const SplineCoeffs& s, double z, int order = 0) { return s.eval(z, order); }

}  // namespace rescale
