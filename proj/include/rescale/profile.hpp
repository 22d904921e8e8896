#pragma once

#include <array>
#include <cstddef>

#include "rescale/field.hpp"

namespace rescale {

// Approximate steady state of the inviscid rescaled flow.
inline double profile_ubar(const Point& z, std::size_t n) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) r2 += z[i] * z[i];
    return 1.0 / (1.0 + r2 / 8.0);
}

inline double profile_ubar_radial(double r) {
    return 1.0 / (1.0 + r * r / 8.0);
}

// d/dz_i of the profile: -(z_i/4) ubar^2.
inline double profile_ubar_d1(const Point& z, std::size_t n, std::size_t axis) {
    const double ub = profile_ubar(z, n);
    return -(z[axis] / 4.0) * ub * ub;
}

// d^2/dz_i^2 of the profile: -ubar^2/4 + (z_i^2/8) ubar^3.
inline double profile_ubar_d2(const Point& z, std::size_t n, std::size_t axis) {
    const double ub = profile_ubar(z, n);
    return -ub * ub / 4.0 + (z[axis] * z[axis] / 8.0) * ub * ub * ub;
}

}  // namespace rescale
