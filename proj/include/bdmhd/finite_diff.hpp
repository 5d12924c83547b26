#pragma once

#include <stdexcept>
#include <variant>

#include "bdmhd/grid.hpp"
#include "bdmhd/spectral.hpp"

namespace bdmhd {

// Second-order centered differences with periodic wrap. Cross-check backend
// for the spectral operators; not used by the integrator.
inline Scalar fd_derivative(const Grid& g, const Scalar& f, int ax) {
    Scalar out = make_scalar(g);
    if (ax >= g.d) return out;
    const double inv2h = 1.0 / (2.0 * g.dx(ax));
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k) {
                int ip[3] = {i, j, k}, im[3] = {i, j, k};
                ip[ax] = (ip[ax] + 1) % g.n[ax];
                im[ax] = (im[ax] - 1 + g.n[ax]) % g.n[ax];
                out[g.index(i, j, k)] =
                    (f[g.index(ip[0], ip[1], ip[2])] - f[g.index(im[0], im[1], im[2])]) * inv2h;
            }
    return out;
}

inline Vec3 fd_gradient(const Grid& g, const Scalar& f) {
    return Vec3{fd_derivative(g, f, 0), fd_derivative(g, f, 1), fd_derivative(g, f, 2)};
}

inline Scalar fd_divergence(const Grid& g, const Vec3& v) {
    Scalar out = make_scalar(g);
    for (int ax = 0; ax < g.d; ++ax) {
        Scalar d = fd_derivative(g, v[ax], ax);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
    }
    return out;
}

inline Vec3 fd_curl(const Grid& g, const Vec3& v) {
    const Scalar d1v2 = fd_derivative(g, v[2], 1), d2v1 = fd_derivative(g, v[1], 2);
    const Scalar d2v0 = fd_derivative(g, v[0], 2), d0v2 = fd_derivative(g, v[2], 0);
    const Scalar d0v1 = fd_derivative(g, v[1], 0), d1v0 = fd_derivative(g, v[0], 1);
    Vec3 out = make_vec3(g);
    for (std::size_t i = 0; i < out[0].size(); ++i) {
        out[0][i] = d1v2[i] - d2v1[i];
        out[1][i] = d2v0[i] - d0v2[i];
        out[2][i] = d0v1[i] - d1v0[i];
    }
    return out;
}

inline std::variant<Scalar, Vec3> apply_derivative_fd(const Grid& g, DerivKind kind,
                                                      const std::variant<Scalar, Vec3>& field) {
    switch (kind) {
        case DerivKind::gradient:
            if (!std::holds_alternative<Scalar>(field))
                throw std::invalid_argument("apply_derivative: gradient expects a scalar field");
            return fd_gradient(g, std::get<Scalar>(field));
        case DerivKind::divergence:
            if (!std::holds_alternative<Vec3>(field))
                throw std::invalid_argument("apply_derivative: divergence expects a vector field");
            return fd_divergence(g, std::get<Vec3>(field));
        case DerivKind::curl:
            if (!std::holds_alternative<Vec3>(field))
                throw std::invalid_argument("apply_derivative: curl expects a vector field");
            return fd_curl(g, std::get<Vec3>(field));
    }
    throw std::logic_error("apply_derivative: unknown kind");
}

}  // namespace bdmhd
