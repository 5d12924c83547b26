#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bdmhd/grid.hpp"
#include "bdmhd/util.hpp"

namespace bdmhd {

// All reductions here run serially in index order with compensated summation:
// identical inputs give identical bits on any thread count.

inline double integrate(const Grid& g, const Scalar& f) {
    CompensatedSum s;
    for (double v : f) s.add(v);
    return s.value() * g.cell_volume();
}

inline double max_abs(const Scalar& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs(const Vec3& v) {
    double m = 0.0;
    for (const auto& c : v) m = std::max(m, max_abs(c));
    return m;
}

// (sum weight |f|^p dV)^{1/p}; p = infinity gives the weighted max. A null
// weight means 1; characteristic-function weights are plain 0/1 fields.
inline double lp_norm(const Grid& g, const Scalar& f, double p, const Scalar* weight = nullptr) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    if (weight && weight->size() != f.size())
        throw std::invalid_argument("lp_norm: weight size mismatch");
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double w = weight ? (*weight)[i] : 1.0;
            m = std::max(m, w * std::abs(f[i]));
        }
        return m;
    }
    CompensatedSum s;
    if (p == 2.0) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double w = weight ? (*weight)[i] : 1.0;
            s.add(w * f[i] * f[i]);
        }
    } else if (p == 1.0) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double w = weight ? (*weight)[i] : 1.0;
            s.add(w * std::abs(f[i]));
        }
    } else {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double w = weight ? (*weight)[i] : 1.0;
            s.add(w * std::pow(std::abs(f[i]), p));
        }
    }
    return std::pow(s.value() * g.cell_volume(), 1.0 / p);
}

// Same, over the pointwise Euclidean magnitude of a 3-vector field.
inline double lp_norm(const Grid& g, const Vec3& v, double p, const Scalar* weight = nullptr) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    const std::size_t n = v[0].size();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = weight ? (*weight)[i] : 1.0;
            const double mag =
                std::sqrt(v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i]);
            m = std::max(m, w * mag);
        }
        return m;
    }
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weight ? (*weight)[i] : 1.0;
        const double mag2 = v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i];
        s.add(p == 2.0 ? w * mag2 : w * std::pow(std::sqrt(mag2), p));
    }
    return std::pow(s.value() * g.cell_volume(), 1.0 / p);
}

inline double l2_distance(const Grid& g, const Scalar& a, const Scalar& b) {
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s.add(d * d);
    }
    return std::sqrt(s.value() * g.cell_volume());
}

}  // namespace bdmhd
