#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdmhd/constitutive.hpp"
#include "bdmhd/dynamics.hpp"
#include "bdmhd/grid.hpp"
#include "bdmhd/norms.hpp"
#include "bdmhd/spectral.hpp"

namespace bdmhd {

// A family of progressively sharper mollifications of one smooth base datum,
// integrated under shared coefficients to probe Cauchy behavior in the limit
// spaces. Mollification scale eps_n = eps0 / 2^n corresponds to a sharp
// spectral cutoff at wavenumber 1/eps_n.
struct SequenceSpec {
    FieldState base;
    double eps0 = 0.5;
    int levels = 4;
    CoefficientSet coeffs;
    double T = 0.1;
    double dt = 1e-3;     // target step; adjusted so outputs land on exact times
    int outputs = 9;      // stored states per member, t = j T/(outputs-1)
    double rho_floor = 1e-8;
    double theta_floor = 1e-8;
    // largest admissible fraction of points pushed below floor by mollification
    double max_floor_fraction = 0.1;
};

inline double cutoff_wavenumber(const SequenceSpec& spec, int n) {
    return std::ldexp(1.0, n) / spec.eps0;  // 2^n / eps0
}

// Mollifies the base at scale eps_n: sharp low-pass on every component, then
// floors, then magnetic re-projection. The filter is exact, so applying the
// same scale twice is the identity on the member.
inline FieldState make_member(const SequenceSpec& spec, const Spectral& sp, int n) {
    const double k_cut = cutoff_wavenumber(spec, n);
    FieldState st = spec.base;
    sp.low_pass(st.rho, k_cut);
    sp.low_pass(st.theta, k_cut);
    for (int c = 0; c < 3; ++c) {
        sp.low_pass(st.u[c], k_cut);
        sp.low_pass(st.H[c], k_cut);
    }
    std::size_t below = 0;
    for (std::size_t p = 0; p < st.grid.npoints(); ++p) {
        if (st.rho[p] < spec.rho_floor) ++below;
        if (st.theta[p] < spec.theta_floor) ++below;
    }
    const double fraction = static_cast<double>(below) / (2.0 * st.grid.npoints());
    if (fraction > spec.max_floor_fraction)
        throw std::invalid_argument(
            "make_sequence: mollification pushed " + std::to_string(fraction) +
            " of samples below floor; base data too close to vacuum for this scale");
    apply_floors(st, spec.rho_floor, spec.theta_floor);
    st.H = sp.project_div_free(st.H);
    st.time = 0.0;
    return st;
}

inline std::vector<FieldState> make_sequence(const SequenceSpec& spec, const Spectral& sp) {
    if (spec.levels < 1) throw std::invalid_argument("make_sequence: need at least one level");
    if (!(spec.eps0 > 0.0)) throw std::invalid_argument("make_sequence: eps0 must be positive");
    std::vector<FieldState> members;
    members.reserve(spec.levels);
    for (int n = 0; n < spec.levels; ++n) members.push_back(make_member(spec, sp, n));
    return members;
}

struct Trajectory {
    std::vector<FieldState> outputs;
    bool failed = false;
    std::string failure;
    double max_abs_H = 0.0;  // sup over stored outputs; the theorem assumes an
                             // L-infinity bound it provides no mechanism for
};

// Integrates one member to time T with outputs at exact equispaced times.
// A stability rejection ends the run early; the partial trajectory survives
// with the failure recorded.
inline Trajectory run_member(const FieldState& initial, const Coefficients& cf,
                             const Spectral& sp, const SequenceSpec& spec) {
    if (spec.outputs < 2) throw std::invalid_argument("run_member: need at least two outputs");
    if (spec.T < 0.0 || !(spec.dt > 0.0))
        throw std::invalid_argument("run_member: T must be nonnegative and dt positive");
    if (spec.T == 0.0) {
        // frozen dynamics: the trajectory is the initial datum alone
        Trajectory traj;
        traj.outputs.push_back(initial);
        traj.max_abs_H = max_abs(initial.H);
        return traj;
    }
    const int segments = spec.outputs - 1;
    const double seg_T = spec.T / segments;
    const int stride = std::max(1, static_cast<int>(std::lround(seg_T / spec.dt)));
    const double dt = seg_T / stride;

    Trajectory traj;
    FieldState st = initial;
    traj.outputs.push_back(st);
    traj.max_abs_H = max_abs(st.H);
    for (int j = 0; j < segments; ++j) {
        try {
            for (int s = 0; s < stride; ++s)
                st = step(st, cf, sp, dt, spec.rho_floor, spec.theta_floor);
        } catch (const StepRejected& e) {
            traj.failed = true;
            traj.failure = e.what();
            return traj;
        } catch (const NumericError& e) {
            traj.failed = true;
            traj.failure = e.what();
            return traj;
        }
        st.time = (j + 1) * seg_T;  // pin against accumulated roundoff
        traj.outputs.push_back(st);
        traj.max_abs_H = std::max(traj.max_abs_H, max_abs(st.H));
    }
    return traj;
}

// Lp-in-space norm of a scalar difference at one output.
inline double diff_lp(const Grid& g, const Scalar& a, const Scalar& b, double p) {
    Scalar d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return lp_norm(g, d, p);
}

inline double diff_lp(const Grid& g, const Vec3& a, const Vec3& b, double p) {
    Vec3 d = make_vec3(g);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < a[c].size(); ++i) d[c][i] = a[c][i] - b[c][i];
    return lp_norm(g, d, p);
}

// Distances between two trajectories in the theorem's limit spaces, with the
// desk-checkable exponent choices: density as max-over-time L2, momentum as
// L2-in-time L3/2, temperature as L2-in-time L3, magnetic field L2-in-time L2.
// Time integrals use the trapezoid rule on the output grid; a single common
// output degenerates them to the instantaneous norm.
struct PairDistances {
    double rho = 0.0;
    double momentum = 0.0;
    double theta = 0.0;
    double H = 0.0;
    bool partial = false;  // either trajectory ended early
};

inline PairDistances pair_distances(const Trajectory& a, const Trajectory& b) {
    PairDistances d;
    const std::size_t m = std::min(a.outputs.size(), b.outputs.size());
    if (m == 0) {
        d.partial = true;
        return d;
    }
    d.partial = a.failed || b.failed || a.outputs.size() != b.outputs.size();
    const Grid& g = a.outputs[0].grid;

    std::vector<double> f_mom(m), f_th(m), f_H(m);
    for (std::size_t j = 0; j < m; ++j) {
        const FieldState& sa = a.outputs[j];
        const FieldState& sb = b.outputs[j];
        d.rho = std::max(d.rho, diff_lp(g, sa.rho, sb.rho, 2.0));
        Vec3 ma = make_vec3(g), mb = make_vec3(g);
        for (int c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < g.npoints(); ++p) {
                ma[c][p] = sa.rho[p] * sa.u[c][p];
                mb[c][p] = sb.rho[p] * sb.u[c][p];
            }
        f_mom[j] = diff_lp(g, ma, mb, 1.5);
        f_th[j] = diff_lp(g, sa.theta, sb.theta, 3.0);
        f_H[j] = diff_lp(g, sa.H, sb.H, 2.0);
    }
    if (m == 1) {
        d.momentum = f_mom[0];
        d.theta = f_th[0];
        d.H = f_H[0];
        return d;
    }
    auto l2_in_time = [&](const std::vector<double>& f) {
        CompensatedSum s;
        for (std::size_t j = 0; j + 1 < m; ++j) {
            const double dt_j = a.outputs[j + 1].time - a.outputs[j].time;
            s.add(0.5 * dt_j * (f[j] * f[j] + f[j + 1] * f[j + 1]));
        }
        return std::sqrt(s.value());
    };
    d.momentum = l2_in_time(f_mom);
    d.theta = l2_in_time(f_th);
    d.H = l2_in_time(f_H);
    return d;
}

struct CompactnessModuli {
    double time_modulus = 0.0;   // max_j || solve(-lap) applied to momentum
                                 // increments ||_2 / dt  (H^-1 proxy at s = 1)
    double space_modulus = 0.0;  // max_j || grad(rho u) ||_L1
};

inline CompactnessModuli compactness_check(const Trajectory& traj, const Spectral& sp) {
    if (traj.outputs.size() < 8)
        throw std::invalid_argument("compactness_check: need at least 8 stored outputs");
    const Grid& g = traj.outputs[0].grid;
    const std::size_t n = g.npoints();
    CompactnessModuli mod;

    auto momentum = [&](const FieldState& st) {
        Vec3 m = make_vec3(g);
        for (int c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < n; ++p) m[c][p] = st.rho[p] * st.u[c][p];
        return m;
    };

    Vec3 prev_m = momentum(traj.outputs[0]);
    for (std::size_t j = 0; j + 1 < traj.outputs.size(); ++j) {
        Vec3 next_m = momentum(traj.outputs[j + 1]);
        const double delta = traj.outputs[j + 1].time - traj.outputs[j].time;
        CompensatedSum s;
        for (int c = 0; c < 3; ++c) {
            Scalar diff(n);
            for (std::size_t p = 0; p < n; ++p) diff[p] = next_m[c][p] - prev_m[c][p];
            const Scalar psi = sp.poisson_solve(diff);
            for (std::size_t p = 0; p < n; ++p) s.add(psi[p] * psi[p]);
        }
        const double h_minus_one = std::sqrt(g.cell_volume() * s.value());
        if (delta > 0.0) mod.time_modulus = std::max(mod.time_modulus, h_minus_one / delta);
        prev_m = std::move(next_m);
    }

    for (const FieldState& st : traj.outputs) {
        const Vec3 m = momentum(st);
        const Tensor3 gm = grad_tensor(m, sp);
        CompensatedSum s;
        for (std::size_t p = 0; p < n; ++p) {
            double fro2 = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int c = 0; c < 3; ++c) fro2 += gm[i][c][p] * gm[i][c][p];
            s.add(std::sqrt(fro2));
        }
        mod.space_modulus = std::max(mod.space_modulus, g.cell_volume() * s.value());
    }
    return mod;
}

struct MemberSummary {
    CompactnessModuli moduli;
    double max_abs_H = 0.0;
    bool failed = false;
    std::string failure;
};

struct ConvergenceReport {
    std::vector<PairDistances> pairs;    // levels-1 consecutive-pair distances
    std::vector<MemberSummary> members;  // one per sequence member
    struct Verdicts {
        std::string rho, momentum, theta, H;
    } verdicts;
};

namespace detail {

// "contracting" needs monotone non-increase over the trailing window of up to
// three pairs with a genuine decrease (or identically zero distances); any
// unusable pair in the window stalls the verdict.
inline std::string verdict(const std::vector<double>& d, const std::vector<bool>& usable) {
    if (d.empty()) return "stalled";
    const std::size_t w = std::min<std::size_t>(3, d.size());
    const std::size_t lo = d.size() - w;
    for (std::size_t i = lo; i < d.size(); ++i)
        if (!usable[i] || !std::isfinite(d[i])) return "stalled";
    for (std::size_t i = lo; i + 1 < d.size(); ++i)
        if (d[i + 1] > d[i]) return "stalled";
    if (d[lo] == 0.0) return "contracting";  // identical members, vacuous
    return (d.back() < d[lo]) ? "contracting" : "stalled";
}

}  // namespace detail

// Integrates every member and assembles distances, moduli, and verdicts.
// Members run serially in a fixed order; the report is deterministic.
inline ConvergenceReport run_sequence(const SequenceSpec& spec, const Spectral& sp) {
    const std::vector<FieldState> members = make_sequence(spec, sp);
    const Coefficients cf{spec.coeffs};

    std::vector<Trajectory> trajs;
    trajs.reserve(members.size());
    for (const FieldState& m : members) trajs.push_back(run_member(m, cf, sp, spec));

    ConvergenceReport rep;
    for (const Trajectory& t : trajs) {
        MemberSummary ms;
        ms.failed = t.failed;
        ms.failure = t.failure;
        ms.max_abs_H = t.max_abs_H;
        if (!t.failed && t.outputs.size() >= 8) ms.moduli = compactness_check(t, sp);
        rep.members.push_back(std::move(ms));
    }
    std::vector<double> d_rho, d_mom, d_th, d_H;
    std::vector<bool> usable;
    for (std::size_t i = 0; i + 1 < trajs.size(); ++i) {
        PairDistances pd = pair_distances(trajs[i], trajs[i + 1]);
        usable.push_back(!pd.partial);
        d_rho.push_back(pd.rho);
        d_mom.push_back(pd.momentum);
        d_th.push_back(pd.theta);
        d_H.push_back(pd.H);
        rep.pairs.push_back(std::move(pd));
    }
    rep.verdicts.rho = detail::verdict(d_rho, usable);
    rep.verdicts.momentum = detail::verdict(d_mom, usable);
    rep.verdicts.theta = detail::verdict(d_th, usable);
    rep.verdicts.H = detail::verdict(d_H, usable);
    return rep;
}

// Largest ratio of successive mollification-band magnitudes across the base
// components; with frozen dynamics the pairwise L2 distances contract at
// least this fast, because the cutoff filter is exact.
inline double spectral_tail_ratio(const SequenceSpec& spec, const Spectral& sp) {
    if (spec.levels < 3) throw std::invalid_argument("spectral_tail_ratio: need three levels");
    auto band = [&](const Scalar& f, int n) {
        return sp.band_l2(f, cutoff_wavenumber(spec, n), cutoff_wavenumber(spec, n + 1));
    };
    const double huge_k = std::numeric_limits<double>::infinity();
    double worst = 0.0;
    auto consider = [&](const Scalar& f) {
        // Analytically empty bands hold only transform round-off; ratios of
        // round-off to round-off would swamp the genuine contraction rate.
        const double floor = 1e-12 * sp.band_l2(f, 0.0, huge_k);
        for (int n = 0; n + 2 < spec.levels; ++n) {
            const double b0 = band(f, n), b1 = band(f, n + 1);
            if (b0 <= floor) continue;  // empty band carries no constraint
            worst = std::max(worst, b1 / b0);
        }
    };
    consider(spec.base.rho);
    consider(spec.base.theta);
    for (int c = 0; c < 3; ++c) {
        consider(spec.base.u[c]);
        consider(spec.base.H[c]);
    }
    return worst;
}

}  // namespace bdmhd
