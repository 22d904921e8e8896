#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "rescale/mesh.hpp"

namespace rescale {

using MeshPtr = std::shared_ptr<const TensorMesh>;

// Point in the rescaled space; only the first dim() entries are meaningful.
using Point = std::array<double, 3>;

// Real-valued samples on a TensorMesh, stored row-major (last axis fastest).
// `even_symmetry` asserts the field is the restriction of a function even in
// each coordinate; differential operators rely on it.
class Field {
  public:
    Field(MeshPtr mesh, bool even_symmetry = true)
        : mesh_(std::move(mesh)),
          values_(mesh_->total_nodes(), 0.0),
          even_symmetry_(even_symmetry) {}

    Field(MeshPtr mesh, std::vector<double> values, bool even_symmetry = true)
        : mesh_(std::move(mesh)), values_(std::move(values)), even_symmetry_(even_symmetry) {
        if (values_.size() != mesh_->total_nodes())
            throw config_error("Field: value count does not match mesh");
    }

    const TensorMesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    std::size_t size() const { return values_.size(); }
    bool even_symmetry() const { return even_symmetry_; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Sample a function of the point coordinates onto every node.
    template <class F>
    static Field sample(MeshPtr mesh, F&& f, bool even_symmetry = true) {
        Field out(mesh, even_symmetry);
        const std::size_t n = out.mesh().dim();
        std::array<std::size_t, 3> idx{0, 0, 0};
        Point p{0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < out.size(); ++k) {
            for (std::size_t i = 0; i < n; ++i) p[i] = out.mesh().axis(i)[idx[i]];
            out[k] = f(p);
            for (std::size_t i = n; i-- > 0;) {
                if (++idx[i] < out.mesh().axis(i).size()) break;
                idx[i] = 0;
            }
        }
        return out;
    }

  private:
    MeshPtr mesh_;
    std::vector<double> values_;
    bool even_symmetry_;
};

namespace detail {

// Composite-trapezoid weights on a 1D mesh.
inline std::vector<double> trapezoid_weights(const Mesh1D& m) {
    const std::size_t M = m.size();
    std::vector<double> w(M, 0.0);
    w[0] = (m[1] - m[0]) / 2.0;
    for (std::size_t j = 1; j + 1 < M; ++j) w[j] = (m[j + 1] - m[j - 1]) / 2.0;
    w[M - 1] = (m[M - 1] - m[M - 2]) / 2.0;
    return w;
}

// Visit every node: index tuple, point coordinates, tensor trapezoid weight.
template <class F>
inline void for_each_node(const TensorMesh& mesh, F&& f) {
    const std::size_t n = mesh.dim();
    std::array<std::vector<double>, 3> w;
    for (std::size_t i = 0; i < n; ++i) w[i] = trapezoid_weights(mesh.axis(i));
    std::array<std::size_t, 3> idx{0, 0, 0};
    const std::size_t total = mesh.total_nodes();
    Point p{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < total; ++k) {
        double wt = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = mesh.axis(i)[idx[i]];
            wt *= w[i][idx[i]];
        }
        f(k, p, wt);
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < mesh.axis(i).size()) break;
            idx[i] = 0;
        }
    }
}

inline double radius(const Point& p, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

}  // namespace detail

// integral of f^2 w over R^n: composite trapezoid on the positive orthant,
// times 2^n for the even extension. The weight must be finite at every node.
template <class W>
inline double quad_weighted(const Field& f, W&& w) {
    const std::size_t n = f.mesh().dim();
    double acc = 0.0;
    detail::for_each_node(f.mesh(), [&](std::size_t k, const Point& p, double wt) {
        const double wv = w(p);
        if (!std::isfinite(wv))
            throw domain_error("quad_weighted: weight not finite at a quadrature node");
        acc += wt * f[k] * f[k] * wv;
    });
    return std::ldexp(acc, static_cast<int>(n));  // * 2^n
}

// Same rule but with the origin node excluded (for weights singular at z = 0).
// The caller adds its own model for the origin cell.
template <class W>
inline double quad_weighted_skip_origin(const Field& f, W&& w) {
    const std::size_t n = f.mesh().dim();
    double acc = 0.0;
    detail::for_each_node(f.mesh(), [&](std::size_t k, const Point& p, double wt) {
        if (k == 0) return;  // origin is node 0 in row-major order
        const double wv = w(p);
        if (!std::isfinite(wv))
            throw domain_error("quad_weighted: weight not finite at a quadrature node");
        acc += wt * f[k] * f[k] * wv;
    });
    return std::ldexp(acc, static_cast<int>(n));
}

}  // namespace rescale
