#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bdmhd/constitutive.hpp"
#include "bdmhd/grid.hpp"
#include "bdmhd/norms.hpp"
#include "bdmhd/spectral.hpp"
#include "bdmhd/util.hpp"

namespace bdmhd {

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepRejected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// row i holds the gradient of component i, so [i][j] = d u_i / d x_j
using Tensor3 = std::array<Vec3, 3>;

using Mat3 = std::array<std::array<double, 3>, 3>;

struct Tendencies {
    Scalar d_rho;
    Vec3 d_u;
    Scalar d_theta;
    Vec3 d_H;
};

// Volume integrals of the instantaneous production and exchange terms entering
// the balance identities, evaluated at one state. A step combines the three
// stage evaluations with the integrator's quadrature weights.
struct StageIntegrals {
    double diss_two_mu_dd = 0.0;                // int 2 mu |D(u)|^2
    double diss_lambda_div2 = 0.0;              // int lambda (div u)^2
    double diss_ohmic = 0.0;                    // int nu |curl H|^2
    double p_div_u = 0.0;                       // int p div u
    double diss_two_mu_aa = 0.0;                // int 2 mu |A(u)|^2
    double grad_p_dot_grad_phi = 0.0;           // int grad p . grad phi(rho)
    double lorentz_dot_grad_mu_over_rho = 0.0;  // int ((curl H) x H) . grad mu(rho) / rho
    double rho_div_u = 0.0;                     // int rho div u
    double prod_visc = 0.0;                     // int (Psi : grad u) / theta
    double prod_ohmic = 0.0;                    // int nu |curl H|^2 / theta
    double prod_fourier = 0.0;                  // int kappa |grad theta|^2 / theta^2
};

inline StageIntegrals weighted_sum(const StageIntegrals& a, const StageIntegrals& b,
                                   const StageIntegrals& c, double wa, double wb, double wc) {
    StageIntegrals r;
    auto mix = [&](double StageIntegrals::*f) { r.*f = wa * (a.*f) + wb * (b.*f) + wc * (c.*f); };
    mix(&StageIntegrals::diss_two_mu_dd);
    mix(&StageIntegrals::diss_lambda_div2);
    mix(&StageIntegrals::diss_ohmic);
    mix(&StageIntegrals::p_div_u);
    mix(&StageIntegrals::diss_two_mu_aa);
    mix(&StageIntegrals::grad_p_dot_grad_phi);
    mix(&StageIntegrals::lorentz_dot_grad_mu_over_rho);
    mix(&StageIntegrals::rho_div_u);
    mix(&StageIntegrals::prod_visc);
    mix(&StageIntegrals::prod_ohmic);
    mix(&StageIntegrals::prod_fourier);
    return r;
}

// Which equations advance; frozen fields keep their current values. Used by
// decay oracles (frozen velocity) and the convergence lab.
struct EvolveFlags {
    bool rho = true;
    bool u = true;
    bool theta = true;
    bool H = true;
};

// Pointwise viscous stress from a velocity gradient: 2 mu D + lambda (tr D) I
// with D the symmetric part. Skew gradients produce exactly zero stress.
inline Mat3 stress_from_gradients(const Mat3& grad_u, double mu, double lambda) {
    const double div = grad_u[0][0] + grad_u[1][1] + grad_u[2][2];
    Mat3 psi{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            psi[i][j] = mu * (grad_u[i][j] + grad_u[j][i]);
            if (i == j) psi[i][j] += lambda * div;
        }
    return psi;
}

inline Tensor3 grad_tensor(const Vec3& v, const Spectral& sp) {
    return Tensor3{sp.gradient(v[0]), sp.gradient(v[1]), sp.gradient(v[2])};
}

// Viscous stress field Psi = 2 mu(rho) D(u) + lambda(rho) (div u) I.
inline Tensor3 stress_tensor(const FieldState& st, const Coefficients& cf, const Spectral& sp) {
    const Grid& g = st.grid;
    const std::size_t n = g.npoints();
    const Tensor3 gu = grad_tensor(st.u, sp);
    Tensor3 psi{make_vec3(g), make_vec3(g), make_vec3(g)};
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double mu = cf.mu(st.rho[p]);
            const double lam = cf.lambda(st.rho[p]);
            const double div = gu[0][0][p] + gu[1][1][p] + gu[2][2][p];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    double v = mu * (gu[i][j][p] + gu[j][i][p]);
                    if (i == j) v += lam * div;
                    psi[i][j][p] = v;
                }
        }
    });
    return psi;
}

// (curl H) x H evaluated pointwise with the spectral curl.
inline Vec3 lorentz_force(const Vec3& H, const Spectral& sp) {
    const Grid& g = sp.grid();
    const Vec3 c = sp.curl(H);
    Vec3 out = make_vec3(g);
    parallel_for(g.npoints(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            out[0][p] = c[1][p] * H[2][p] - c[2][p] * H[1][p];
            out[1][p] = c[2][p] * H[0][p] - c[0][p] * H[2][p];
            out[2][p] = c[0][p] * H[1][p] - c[1][p] * H[0][p];
        }
    });
    return out;
}

namespace detail {

inline void check_finite(const Scalar& f, const char* what) {
    for (double v : f)
        if (!std::isfinite(v))
            throw NumericError(std::string("rhs: non-finite value in ") + what);
}

inline void check_finite(const Vec3& v, const char* what) {
    for (const auto& c : v) check_finite(c, what);
}

}  // namespace detail

// Instantaneous tendencies of the primitive-variable system. The magnetic
// tendency is assembled from the electric field and projected divergence-free.
// With `integrals` set, also accumulates the balance-identity integrands at
// this state (serial compensated sums; bit-stable under any thread count).
inline Tendencies rhs(const FieldState& st, const Coefficients& cf, const Spectral& sp,
                      StageIntegrals* integrals = nullptr) {
    const Grid& g = st.grid;
    const std::size_t n = g.npoints();
    const double cv = cf.set().cv;

    // pointwise transport coefficients and pressure
    Scalar mu(n), lam(n), kap(n), nuv(n), prs(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double r = st.rho[p], th = st.theta[p];
            mu[p] = cf.mu(r);
            lam[p] = cf.lambda(r);
            kap[p] = cf.kappa(r, th);
            nuv[p] = cf.nu(r, th);
            prs[p] = cf.pressure(r, th);
        }
    });

    const Tensor3 gu = grad_tensor(st.u, sp);
    const Vec3 grad_p = sp.gradient(prs);
    const Vec3 grad_th = sp.gradient(st.theta);
    const Vec3 curl_H = sp.curl(st.H);

    // mass flux divergence
    Vec3 mom = make_vec3(g);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p)
            for (int c = 0; c < 3; ++c) mom[c][p] = st.rho[p] * st.u[c][p];
    });
    Scalar d_rho = sp.divergence(mom);
    for (double& v : d_rho) v = -v;
    sp.dealias(d_rho);

    // viscous stress rows and their divergences
    Tensor3 psi{make_vec3(g), make_vec3(g), make_vec3(g)};
    Scalar divu(n), visc_heat(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double dv = gu[0][0][p] + gu[1][1][p] + gu[2][2][p];
            divu[p] = dv;
            double dev2 = 0.0;  // |D - (div/3) I|^2, nonnegative by construction
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double dij = 0.5 * (gu[i][j][p] + gu[j][i][p]);
                    double v = 2.0 * mu[p] * dij;
                    if (i == j) v += lam[p] * dv;
                    psi[i][j][p] = v;
                    const double dev = (i == j) ? dij - dv / 3.0 : dij;
                    dev2 += dev * dev;
                }
            const double bulk = lam[p] + 2.0 * mu[p] / 3.0;
            visc_heat[p] = 2.0 * mu[p] * dev2 + bulk * dv * dv;
        }
    });
    Vec3 div_psi;
    for (int i = 0; i < 3; ++i) div_psi[i] = sp.divergence(psi[i]);

    // Lorentz force and heat flux
    Vec3 lor = make_vec3(g);
    Vec3 qflux = make_vec3(g);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            lor[0][p] = curl_H[1][p] * st.H[2][p] - curl_H[2][p] * st.H[1][p];
            lor[1][p] = curl_H[2][p] * st.H[0][p] - curl_H[0][p] * st.H[2][p];
            lor[2][p] = curl_H[0][p] * st.H[1][p] - curl_H[1][p] * st.H[0][p];
            for (int c = 0; c < 3; ++c) qflux[c][p] = kap[p] * grad_th[c][p];
        }
    });
    const Scalar div_q = sp.divergence(qflux);

    // momentum in primitive form
    Vec3 d_u = make_vec3(g);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double inv_rho = 1.0 / st.rho[p];
            for (int i = 0; i < 3; ++i) {
                double adv = 0.0;
                for (int j = 0; j < 3; ++j) adv += st.u[j][p] * gu[i][j][p];
                d_u[i][p] = -adv + (-grad_p[i][p] + lor[i][p] + div_psi[i][p]) * inv_rho;
            }
        }
    });
    sp.dealias(d_u);

    // temperature in primitive form
    Scalar d_theta(n);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double r = st.rho[p], th = st.theta[p];
            double ch2 = 0.0;
            for (int c = 0; c < 3; ++c) ch2 += curl_H[c][p] * curl_H[c][p];
            double adv = 0.0;
            for (int c = 0; c < 3; ++c) adv += st.u[c][p] * grad_th[c][p];
            d_theta[p] =
                (div_q[p] + nuv[p] * ch2 + visc_heat[p] - th * r * divu[p]) / (cv * r) - adv;
        }
    });
    sp.dealias(d_theta);

    // induction: d_H = -curl E, then projected
    Vec3 efield = make_vec3(g);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double ux = st.u[0][p], uy = st.u[1][p], uz = st.u[2][p];
            const double hx = st.H[0][p], hy = st.H[1][p], hz = st.H[2][p];
            efield[0][p] = nuv[p] * curl_H[0][p] - (uy * hz - uz * hy);
            efield[1][p] = nuv[p] * curl_H[1][p] - (uz * hx - ux * hz);
            efield[2][p] = nuv[p] * curl_H[2][p] - (ux * hy - uy * hx);
        }
    });
    Vec3 d_H = sp.curl(efield);
    for (auto& c : d_H)
        for (double& v : c) v = -v;
    d_H = sp.project_div_free(d_H);

    detail::check_finite(d_rho, "mass tendency");
    detail::check_finite(d_u, "momentum tendency");
    detail::check_finite(d_theta, "temperature tendency");
    detail::check_finite(d_H, "induction tendency");

    if (integrals) {
        Scalar phi_f(n), mu_f(n);
        for (std::size_t p = 0; p < n; ++p) {
            phi_f[p] = cf.phi(st.rho[p]);
            mu_f[p] = mu[p];
        }
        const Vec3 grad_phi = sp.gradient(phi_f);
        const Vec3 grad_mu = sp.gradient(mu_f);

        CompensatedSum s_dd, s_ld, s_oh, s_pdiv, s_aa, s_gpgf, s_lgm, s_rdiv, s_pv, s_po, s_pf;
        for (std::size_t p = 0; p < n; ++p) {
            const double dv = divu[p];
            double d2 = 0.0, a2 = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double dij = 0.5 * (gu[i][j][p] + gu[j][i][p]);
                    const double aij = 0.5 * (gu[i][j][p] - gu[j][i][p]);
                    d2 += dij * dij;
                    a2 += aij * aij;
                }
            double ch2 = 0.0, gth2 = 0.0, gpgf = 0.0, lgm = 0.0;
            for (int c = 0; c < 3; ++c) {
                ch2 += curl_H[c][p] * curl_H[c][p];
                gth2 += grad_th[c][p] * grad_th[c][p];
                gpgf += grad_p[c][p] * grad_phi[c][p];
                lgm += lor[c][p] * grad_mu[c][p];
            }
            const double th = st.theta[p];
            s_dd.add(2.0 * mu[p] * d2);
            s_ld.add(lam[p] * dv * dv);
            s_oh.add(nuv[p] * ch2);
            s_pdiv.add(prs[p] * dv);
            s_aa.add(2.0 * mu[p] * a2);
            s_gpgf.add(gpgf);
            s_lgm.add(lgm / st.rho[p]);
            s_rdiv.add(st.rho[p] * dv);
            s_pv.add(visc_heat[p] / th);
            s_po.add(nuv[p] * ch2 / th);
            s_pf.add(kap[p] * gth2 / (th * th));
        }
        const double dV = g.cell_volume();
        integrals->diss_two_mu_dd = dV * s_dd.value();
        integrals->diss_lambda_div2 = dV * s_ld.value();
        integrals->diss_ohmic = dV * s_oh.value();
        integrals->p_div_u = dV * s_pdiv.value();
        integrals->diss_two_mu_aa = dV * s_aa.value();
        integrals->grad_p_dot_grad_phi = dV * s_gpgf.value();
        integrals->lorentz_dot_grad_mu_over_rho = dV * s_lgm.value();
        integrals->rho_div_u = dV * s_rdiv.value();
        integrals->prod_visc = dV * s_pv.value();
        integrals->prod_ohmic = dV * s_po.value();
        integrals->prod_fourier = dV * s_pf.value();
    }

    return Tendencies{std::move(d_rho), std::move(d_u), std::move(d_theta), std::move(d_H)};
}

// The induction tendency before projection; the electric-field diagnostic
// recomputes -curl E independently and compares against this.
inline Vec3 induction_tendency_unprojected(const FieldState& st, const Coefficients& cf,
                                           const Spectral& sp) {
    const Grid& g = st.grid;
    const std::size_t n = g.npoints();
    const Vec3 curl_H = sp.curl(st.H);
    Vec3 efield = make_vec3(g);
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            const double nu = cf.nu(st.rho[p], st.theta[p]);
            const double ux = st.u[0][p], uy = st.u[1][p], uz = st.u[2][p];
            const double hx = st.H[0][p], hy = st.H[1][p], hz = st.H[2][p];
            efield[0][p] = nu * curl_H[0][p] - (uy * hz - uz * hy);
            efield[1][p] = nu * curl_H[1][p] - (uz * hx - ux * hz);
            efield[2][p] = nu * curl_H[2][p] - (ux * hy - uy * hx);
        }
    });
    Vec3 out = sp.curl(efield);
    for (auto& c : out)
        for (double& v : c) v = -v;
    sp.dealias(out);
    return out;
}

struct DtBounds {
    double advective;  // min over grid of dx / (|u| + c_fast)
    double diffusive;  // min over grid of dx^2 / (2 d max-diffusivity)
};

inline DtBounds dt_bounds(const FieldState& st, const Coefficients& cf) {
    const Grid& g = st.grid;
    double dx_min = std::numeric_limits<double>::infinity();
    for (int ax = 0; ax < g.d; ++ax) dx_min = std::min(dx_min, g.dx(ax));
    const double cv = cf.set().cv;
    double adv = std::numeric_limits<double>::infinity();
    double dif = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < g.npoints(); ++p) {
        const double r = st.rho[p], th = st.theta[p];
        double u2 = 0.0, h2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            u2 += st.u[c][p] * st.u[c][p];
            h2 += st.H[c][p] * st.H[c][p];
        }
        const double c_fast = std::sqrt(cf.dp_drho(r, th) + th + h2 / r);
        if (!std::isfinite(c_fast)) throw NumericError("stable_dt: non-finite wave speed");
        adv = std::min(adv, dx_min / (std::sqrt(u2) + c_fast));
        const double mu = cf.mu(r);
        const double diff = std::max({mu / r, (3.0 * cf.lambda(r) + 2.0 * mu) / r,
                                      cf.kappa(r, th) / (cv * r), cf.nu(r, th)});
        if (diff > 0.0) dif = std::min(dif, dx_min * dx_min / (2.0 * g.d * diff));
    }
    return DtBounds{adv, dif};
}

inline double stable_dt(const FieldState& st, const Coefficients& cf, double cfl) {
    if (!(cfl > 0.0 && cfl <= 1.0))
        throw std::invalid_argument("stable_dt: cfl must lie in (0, 1]");
    const DtBounds b = dt_bounds(st, cf);
    return cfl * std::min(b.advective, b.diffusive);
}

struct StepResult {
    FieldState state;
    StageIntegrals quad;  // integrator-weighted time quadrature over the step
    FloorCounts floors;
};

namespace detail {

// state := wa * a + wb * b + wdt * tendency, honoring the freeze flags
inline FieldState combine(const FieldState& a, const FieldState& b, const Tendencies& t,
                          double wa, double wb, double wdt, const EvolveFlags& ev) {
    const Grid& g = a.grid;
    const std::size_t n = g.npoints();
    FieldState out = FieldState::zeros(g);
    out.time = a.time;
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) {
            out.rho[p] = ev.rho ? wa * a.rho[p] + wb * b.rho[p] + wdt * t.d_rho[p] : a.rho[p];
            out.theta[p] =
                ev.theta ? wa * a.theta[p] + wb * b.theta[p] + wdt * t.d_theta[p] : a.theta[p];
            for (int c = 0; c < 3; ++c) {
                out.u[c][p] = ev.u ? wa * a.u[c][p] + wb * b.u[c][p] + wdt * t.d_u[c][p]
                                   : a.u[c][p];
                out.H[c][p] = ev.H ? wa * a.H[c][p] + wb * b.H[c][p] + wdt * t.d_H[c][p]
                                   : a.H[c][p];
            }
        }
    });
    return out;
}

inline void check_growth(const FieldState& before, const FieldState& after) {
    const auto check = [](double old_max, double new_max, const char* name) {
        if (!std::isfinite(new_max))
            throw StepRejected(std::string("step rejected: non-finite ") + name);
        if (new_max > 10.0 * (old_max + 1.0))
            throw StepRejected(std::string("step rejected: ") + name +
                               " grew by more than a factor of ten in one step");
    };
    check(max_abs(before.rho), max_abs(after.rho), "density");
    check(max_abs(before.u), max_abs(after.u), "velocity");
    check(max_abs(before.theta), max_abs(after.theta), "temperature");
    check(max_abs(before.H), max_abs(after.H), "magnetic field");
}

}  // namespace detail

// One strong-stability-preserving third-order Runge-Kutta step. Floors are
// applied after every stage combination; the magnetic field is re-projected
// after the full step; growth beyond 10x in any field rejects the step.
inline StepResult step_with_quadrature(const FieldState& st, const Coefficients& cf,
                                       const Spectral& sp, double dt, double rho_floor = 1e-8,
                                       double theta_floor = 1e-8, const EvolveFlags& ev = {}) {
    if (!(dt >= 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("step: dt must be finite and nonnegative");
    FloorCounts floors;

    StageIntegrals i0, i1, i2;
    const Tendencies t0 = rhs(st, cf, sp, &i0);
    FieldState y1 = detail::combine(st, st, t0, 1.0, 0.0, dt, ev);
    floors += apply_floors(y1, rho_floor, theta_floor);

    const Tendencies t1 = rhs(y1, cf, sp, &i1);
    FieldState y2 = detail::combine(st, y1, t1, 0.75, 0.25, 0.25 * dt, ev);
    floors += apply_floors(y2, rho_floor, theta_floor);

    const Tendencies t2 = rhs(y2, cf, sp, &i2);
    FieldState out = detail::combine(st, y2, t2, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0 * dt, ev);
    floors += apply_floors(out, rho_floor, theta_floor);

    if (ev.H) out.H = sp.project_div_free(out.H);
    detail::check_growth(st, out);
    out.time = st.time + dt;

    StepResult r;
    r.state = std::move(out);
    r.quad = weighted_sum(i0, i1, i2, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0);
    r.floors = floors;
    return r;
}

inline FieldState step(const FieldState& st, const Coefficients& cf, const Spectral& sp,
                       double dt, double rho_floor = 1e-8, double theta_floor = 1e-8,
                       const EvolveFlags& ev = {}) {
    return step_with_quadrature(st, cf, sp, dt, rho_floor, theta_floor, ev).state;
}

}  // namespace bdmhd
