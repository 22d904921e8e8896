#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "rescale/errors.hpp"

namespace rescale {

// Grading laws for node placement on [0, L].
struct Uniform {};
struct Algebraic {
    double p = 2.0;  // nodes[j] = L (j/(M-1))^p
};
struct Geometric {
    double r = 1.5;  // spacings form a geometric progression with ratio r
};
using Grading = std::variant<Uniform, Algebraic, Geometric>;

// Nonuniform 1D mesh on [0, L], origin included, strictly increasing.
class Mesh1D {
  public:
    Mesh1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 8)
            throw config_error("Mesh1D: need at least 8 nodes, got " + std::to_string(nodes_.size()));
        if (nodes_.front() != 0.0)
            throw config_error("Mesh1D: first node must be 0");
        for (std::size_t j = 1; j < nodes_.size(); ++j)
            if (!(nodes_[j] > nodes_[j - 1]))
                throw config_error("Mesh1D: nodes must be strictly increasing");
        if (!(nodes_.back() > 0.0) || !std::isfinite(nodes_.back()))
            throw config_error("Mesh1D: invalid domain half-width");
    }

    std::size_t size() const { return nodes_.size(); }
    double L() const { return nodes_.back(); }
    double operator[](std::size_t j) const { return nodes_[j]; }
    const std::vector<double>& nodes() const { return nodes_; }

    double min_spacing() const {
        double h = nodes_[1] - nodes_[0];
        for (std::size_t j = 2; j < nodes_.size(); ++j) h = std::min(h, nodes_[j] - nodes_[j - 1]);
        return h;
    }
    double max_spacing() const {
        double h = nodes_[1] - nodes_[0];
        for (std::size_t j = 2; j < nodes_.size(); ++j) h = std::max(h, nodes_[j] - nodes_[j - 1]);
        return h;
    }
    // min_j h_j / z_{j+1}; the mesh-only factor of the advection CFL bound.
    double advection_ratio() const {
        double r = (nodes_[1] - nodes_[0]) / nodes_[1];
        for (std::size_t j = 1; j + 1 < nodes_.size(); ++j)
            r = std::min(r, (nodes_[j + 1] - nodes_[j]) / nodes_[j + 1]);
        return r;
    }

  private:
    std::vector<double> nodes_;
};

inline Mesh1D build_graded_mesh(std::size_t M, double L, const Grading& grading = Algebraic{}) {
    if (M < 8) throw config_error("build_graded_mesh: M must be >= 8");
    if (!(L > 0.0) || !std::isfinite(L)) throw config_error("build_graded_mesh: L must be positive");
    std::vector<double> z(M);
    const double m1 = static_cast<double>(M - 1);
    if (std::holds_alternative<Uniform>(grading)) {
        for (std::size_t j = 0; j < M; ++j) z[j] = L * static_cast<double>(j) / m1;
    } else if (auto* a = std::get_if<Algebraic>(&grading)) {
        if (!(a->p >= 1.0)) throw config_error("build_graded_mesh: algebraic grading needs p >= 1");
        for (std::size_t j = 0; j < M; ++j) z[j] = L * std::pow(static_cast<double>(j) / m1, a->p);
    } else {
        const double r = std::get<Geometric>(grading).r;
        if (!(r > 1.0)) throw config_error("build_graded_mesh: geometric grading needs r > 1");
        // first spacing from the geometric-sum normalization h1 (r^(M-1)-1)/(r-1) = L
        const double h1 = L * (r - 1.0) / (std::pow(r, m1) - 1.0);
        z[0] = 0.0;
        double h = h1;
        for (std::size_t j = 1; j < M; ++j) {
            z[j] = z[j - 1] + h;
            h *= r;
        }
    }
    z[0] = 0.0;
    z[M - 1] = L;
    return Mesh1D(std::move(z));
}

// Tensor-product mesh; one Mesh1D per axis.
class TensorMesh {
  public:
    explicit TensorMesh(std::vector<Mesh1D> axes) : axes_(std::move(axes)) {
        if (axes_.empty()) throw config_error("TensorMesh: need at least one axis");
        if (axes_.size() > 3) throw config_error("TensorMesh: runtime supports n <= 3");
    }
    TensorMesh(Mesh1D axis) : TensorMesh(std::vector<Mesh1D>{std::move(axis)}) {}

    std::size_t dim() const { return axes_.size(); }
    const Mesh1D& axis(std::size_t i) const { return axes_[i]; }
    std::size_t total_nodes() const {
        std::size_t n = 1;
        for (const auto& a : axes_) n *= a.size();
        return n;
    }

  private:
    std::vector<Mesh1D> axes_;
};

inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Plain-text mesh format: header "n M_1 ... M_n", then per-axis node lists,
// one node per line, 17 significant digits.
inline void write_mesh(std::ostream& os, const TensorMesh& mesh) {
    os << mesh.dim();
    for (std::size_t i = 0; i < mesh.dim(); ++i) os << ' ' << mesh.axis(i).size();
    os << '\n';
    for (std::size_t i = 0; i < mesh.dim(); ++i)
        for (double z : mesh.axis(i).nodes()) os << format_g17(z) << '\n';
}

inline TensorMesh read_mesh(std::istream& is) {
    std::size_t n = 0;
    if (!(is >> n) || n == 0 || n > 3) throw io_error("read_mesh: bad dimension in header");
    std::vector<std::size_t> sizes(n);
    for (auto& m : sizes)
        if (!(is >> m)) throw io_error("read_mesh: bad axis size in header");
    std::vector<Mesh1D> axes;
    axes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> z(sizes[i]);
        for (auto& v : z)
            if (!(is >> v)) throw io_error("read_mesh: truncated node list");
        axes.emplace_back(std::move(z));
    }
    return TensorMesh(std::move(axes));
}

}  // namespace rescale
