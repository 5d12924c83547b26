#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdmhd {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Periodic uniform grid. Axes 0..d-1 are active; trailing axes collapse to a
// single point so every field is stored rank-3 row-major (axis 2 fastest).
// Vector fields always carry 3 components regardless of d.
struct Grid {
    int d = 3;
    std::array<int, 3> n{{1, 1, 1}};
    std::array<double, 3> length{{kTwoPi, kTwoPi, kTwoPi}};

    static bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

    static Grid make(int d, const std::array<int, 3>& n, const std::array<double, 3>& length) {
        if (d < 1 || d > 3) throw std::invalid_argument("grid: dimension must be 1, 2, or 3");
        Grid g;
        g.d = d;
        g.n = n;
        g.length = length;
        for (int ax = 0; ax < 3; ++ax) {
            if (ax < d) {
                if (g.n[ax] < 4 || !power_of_two(g.n[ax]))
                    throw std::invalid_argument("grid: active axis " + std::to_string(ax) +
                                                " needs a power-of-two point count >= 4");
                if (!(g.length[ax] > 0.0))
                    throw std::invalid_argument("grid: axis lengths must be positive");
            } else {
                if (g.n[ax] != 1)
                    throw std::invalid_argument("grid: inactive axes must have a single point");
            }
        }
        return g;
    }

    std::size_t npoints() const {
        return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
               static_cast<std::size_t>(n[2]);
    }
    double dx(int ax) const { return length[ax] / n[ax]; }
    double cell_volume() const {
        double v = 1.0;
        for (int ax = 0; ax < d; ++ax) v *= dx(ax);
        return v;
    }
    double volume() const {
        double v = 1.0;
        for (int ax = 0; ax < d; ++ax) v *= length[ax];
        return v;
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k;
    }
    bool operator==(const Grid&) const = default;
};

using Scalar = std::vector<double>;
using Vec3 = std::array<Scalar, 3>;

inline Scalar make_scalar(const Grid& g, double fill = 0.0) { return Scalar(g.npoints(), fill); }
inline Vec3 make_vec3(const Grid& g, double fill = 0.0) {
    return Vec3{Scalar(g.npoints(), fill), Scalar(g.npoints(), fill), Scalar(g.npoints(), fill)};
}

// Evaluate f(x, y, z) over the grid; coordinates of inactive axes are 0.
template <class F>
Scalar sample_scalar(const Grid& g, F&& f) {
    Scalar out(g.npoints());
    for (int i = 0; i < g.n[0]; ++i)
        for (int j = 0; j < g.n[1]; ++j)
            for (int k = 0; k < g.n[2]; ++k)
                out[g.index(i, j, k)] = f(i * g.dx(0), j * g.dx(1), k * g.dx(2));
    return out;
}

struct FieldState {
    Grid grid;
    double time = 0.0;
    Scalar rho, theta;
    Vec3 u, H;

    static FieldState zeros(const Grid& g) {
        FieldState s;
        s.grid = g;
        s.rho = make_scalar(g);
        s.theta = make_scalar(g);
        s.u = make_vec3(g);
        s.H = make_vec3(g);
        return s;
    }
};

struct FloorCounts {
    std::size_t rho = 0;
    std::size_t theta = 0;
    std::size_t total() const { return rho + theta; }
    FloorCounts& operator+=(const FloorCounts& o) {
        rho += o.rho;
        theta += o.theta;
        return *this;
    }
};

// Raise rho and theta to their floors in place and count raised points. The
// floors fence the vacuum-degenerate regime; a nonzero count flags the run.
inline FloorCounts apply_floors(FieldState& s, double rho_floor, double theta_floor) {
    FloorCounts c;
    for (auto& v : s.rho)
        if (v < rho_floor) {
            v = rho_floor;
            ++c.rho;
        }
    for (auto& v : s.theta)
        if (v < theta_floor) {
            v = theta_floor;
            ++c.theta;
        }
    return c;
}

}  // namespace bdmhd
