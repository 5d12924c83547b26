#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdmhd/util.hpp"

namespace bdmhd {

enum class MuFamily { blend, power, linear };
enum class Kappa0Family { constant };
enum class NuFamily { clamp, constant };
enum class PeFamily { matched, power };

// All scalar inputs of the transport and thermodynamic closure. Shear
// viscosity grows like s^beta near vacuum and s^m for large density, with a
// matching window around the scale A; the cold pressure derivative decays like
// s^{-l-1} near vacuum and is bounded by c4 s^{k-1} above the scale A0.
struct CoefficientSet {
    double beta = 0.8;
    double m = 2.0;
    double A = 1.0;
    double c0 = 0.5;
    double c1 = 0.2;

    double a = 2.0;
    double c2 = 0.5;

    double l = 6.0;
    double k = 7.0;
    double A0 = 1.0;
    double c3 = 0.5;
    double c4 = 2.0;

    double c5 = 0.1;
    double c6 = 0.5;

    double cv = 1.0;

    MuFamily mu_family = MuFamily::blend;
    Kappa0Family kappa0_family = Kappa0Family::constant;
    NuFamily nu_family = NuFamily::clamp;
    PeFamily pe_family = PeFamily::matched;

    bool operator==(const CoefficientSet&) const = default;

    double l_lower_bound() const { return 2.0 * beta * (3.0 * m - 2.0) / (m - 1.0) - 1.0; }
    double k_upper_bound() const { return (m - 0.5) * (5.0 * (l + 1.0) - 6.0 * beta) / (l + 1.0 - beta); }
    double A1() const { return std::min(A, A0); }

    // Throws on any violated structural constraint. Kept separate from
    // construction so out-of-range candidate sets can still be run through
    // validate_hypotheses to obtain a failing report with a witness.
    void validate() const {
        auto fail = [](const std::string& msg) { throw std::invalid_argument("coefficients: " + msg); };
        if (!(beta > 2.0 / 3.0 && beta < 1.0))
            fail("beta must lie in (2/3, 1), got " + std::to_string(beta));
        if (!(m > 1.0)) fail("m must exceed 1, got " + std::to_string(m));
        if (!(a >= 2.0)) fail("a must be >= 2, got " + std::to_string(a));
        if (!(A > 0.0)) fail("A must be positive");
        if (!(A0 > 0.0)) fail("A0 must be positive");
        if (!(cv > 0.0)) fail("cv must be positive");
        for (double c : {c0, c1, c2, c3, c4, c5, c6})
            if (!(c > 0.0)) fail("growth constants c0..c6 must all be positive");
        if (!(l > l_lower_bound()))
            fail("l must exceed 2*beta*(3m-2)/(m-1) - 1 = " + std::to_string(l_lower_bound()) +
                 ", got " + std::to_string(l));
        if (!(k <= k_upper_bound()))
            fail("k must not exceed (m-1/2)(5(l+1)-6beta)/(l+1-beta) = " +
                 std::to_string(k_upper_bound()) + ", got " + std::to_string(k));
    }
};

struct CoefficientValues {
    double mu = 0, mu_prime = 0, lambda = 0, three_lambda_plus_two_mu = 0;
    double kappa = 0, nu = 0, p = 0, e = 0, phi = 0, P_e = 0;
};

// Integrability exponents implied by (beta, l, m).
struct ExponentTable {
    double j = 0, j1 = 0, q1 = 0, q2 = 0, q3 = 0;
    double s_exp = 0, r_exp = 0, p_density = 0, delta_floor = 0;
};

inline ExponentTable derived_exponents(const CoefficientSet& c) {
    ExponentTable t;
    t.j = (c.l + 1.0 - c.beta) / c.beta;
    t.j1 = (c.l + 1.0 - c.beta) / (2.0 * c.l);
    t.q1 = 2.0 * (1.0 - c.beta / (c.l + 1.0));
    t.q3 = 1.0 / (1.0 / (6.0 * t.j) + 0.5);
    t.q2 = 3.0 * t.q1;
    t.s_exp = 6.0 * (c.l + 1.0 - c.beta) / (5.0 * c.l + 3.0);
    t.r_exp = 18.0 * (c.l + 1.0 - c.beta) / (17.0 * c.l + 15.0 - 12.0 * c.beta);
    t.p_density = 6.0 * c.m - 3.0;
    t.delta_floor = 3.0;
    return t;
}

// Realized coefficient functions. The shear viscosity derivative is s^{beta-1}
// below A/2 and s^{m-1} above 2A, bridged by a C1 cubic Hermite on [A/2, 2A];
// mu and phi come from closed-form antiderivatives of that piecewise function,
// so lambda = 2(s mu' - mu) and phi' = mu'/s hold by construction. Positivity
// of mu' on the bridge is checked once here by dense sampling.
class Coefficients {
  public:
    explicit Coefficients(const CoefficientSet& set) : c_(set) {
        if (c_.mu_family == MuFamily::blend) init_blend();
        if (std::abs(c_.k - 1.0) < 1e-12)
            throw std::invalid_argument("coefficients: k = 1 is not representable in closed form");
    }

    const CoefficientSet& set() const { return c_; }

    double mu_prime(double s) const {
        switch (c_.mu_family) {
            case MuFamily::power: return c_.beta * safe_pow(s, c_.beta - 1.0);
            case MuFamily::linear: return 1.0;
            case MuFamily::blend: break;
        }
        if (s <= sL_) return safe_pow(s, c_.beta - 1.0);
        if (s >= sR_) return safe_pow(s, c_.m - 1.0);
        return ((ma_[3] * s + ma_[2]) * s + ma_[1]) * s + ma_[0];
    }

    double mu(double s) const {
        switch (c_.mu_family) {
            case MuFamily::power: return safe_pow(s, c_.beta);
            case MuFamily::linear: return s;
            case MuFamily::blend: break;
        }
        if (s <= sL_) return safe_pow(s, c_.beta) / c_.beta;
        if (s >= sR_) return mu_end_ + (safe_pow(s, c_.m) - safe_pow(sR_, c_.m)) / c_.m;
        return mu_at_sL_ + blend_integral(s) - blend_integral(sL_);
    }

    double lambda(double s) const { return 2.0 * (s * mu_prime(s) - mu(s)); }

    // phi' = mu'/s with the normalization phi(A) = 0.
    double phi(double s) const {
        switch (c_.mu_family) {
            case MuFamily::power:
                return pow_ratio_antiderivative(s, c_.beta) - pow_ratio_antiderivative(c_.A, c_.beta);
            case MuFamily::linear: return std::log(s / c_.A);
            case MuFamily::blend: break;
        }
        if (s <= sL_) return phi_low_antider(s) - phi_low_antider(sL_) + phi_at_sL_;
        if (s >= sR_) return phi_high_antider(s) - phi_high_antider(sR_) + phi_at_sR_;
        return phi_blend_antider(s) - phi_blend_at_A_;
    }

    double phi_prime(double s) const { return mu_prime(s) / s; }

    double kappa0(double /*rho*/, double /*theta*/) const {
        return 1.0;  // the constant family; c2 <= 1 <= 1/c2 is the validator's business
    }

    double kappa(double rho, double theta) const {
        return kappa0(rho, theta) * (rho + 1.0) * (std::pow(theta, c_.a) + 1.0);
    }

    double nu(double rho, double theta) const {
        if (c_.nu_family == NuFamily::constant) return c_.c6;
        return std::clamp(c_.c5 * theta / rho, c_.c6, 1.0 / c_.c6);
    }

    double pe_prime(double s) const {
        if (c_.pe_family == PeFamily::power) return c_.c4 * c_.k * safe_pow(s, c_.k - 1.0);
        if (s <= c_.A0) return safe_pow(s, -c_.l - 1.0);
        return safe_pow(c_.A0, -c_.l - c_.k) * safe_pow(s, c_.k - 1.0);
    }

    double pe(double s) const {
        if (c_.pe_family == PeFamily::power) return c_.c4 * safe_pow(s, c_.k);
        if (s <= c_.A0) return (safe_pow(c_.A0, -c_.l) - safe_pow(s, -c_.l)) / c_.l;
        return safe_pow(c_.A0, -c_.l - c_.k) * (safe_pow(s, c_.k) - safe_pow(c_.A0, c_.k)) / c_.k;
    }

    // P_e(rho) = int_1^rho p_e(xi)/xi^2 dxi, closed form (both families are
    // piecewise powers). Pe_quadrature cross-checks it in the tests.
    double Pe(double s) const {
        if (c_.pe_family == PeFamily::power)
            return c_.c4 * (safe_pow(s, c_.k - 1.0) - 1.0) / (c_.k - 1.0);
        return pe_Q(s) - pe_Q(1.0);
    }

    double Pe_quadrature(double s, double rel_tol = 1e-10) const {
        const auto f = [this](double xi) { return pe(xi) / (xi * xi); };
        // scale the tolerance to the integrand so steep cold-pressure profiles
        // near vacuum stay resolvable in double precision
        const double lo = std::min(1.0, s), hi = std::max(1.0, s);
        double mass = 0.0;
        const int n = 64;
        for (int i = 0; i <= n; ++i) {
            const double x = lo + (hi - lo) * i / n;
            mass += std::abs(f(x)) * ((i == 0 || i == n) ? 0.5 : 1.0);
        }
        mass *= (hi - lo) / n;
        return adaptive_simpson(f, 1.0, s, rel_tol * std::max(1.0, mass));
    }

    double pressure(double rho, double theta) const { return rho * theta + pe(rho); }
    double internal_energy(double rho, double theta) const { return c_.cv * theta + Pe(rho); }
    double dp_drho(double rho, double theta) const { return theta + pe_prime(rho); }

  private:
    static double safe_pow(double s, double e) { return std::pow(s, e); }

    double pow_ratio_antiderivative(double s, double beta) const {
        // antiderivative of beta * s^{beta-2}
        if (std::abs(beta - 1.0) < 1e-12) return std::log(s);
        return beta * safe_pow(s, beta - 1.0) / (beta - 1.0);
    }

    void init_blend() {
        sL_ = 0.5 * c_.A;
        sR_ = 2.0 * c_.A;
        const double w = sR_ - sL_;
        const double f0 = safe_pow(sL_, c_.beta - 1.0);
        const double d0 = (c_.beta - 1.0) * safe_pow(sL_, c_.beta - 2.0);
        const double f1 = safe_pow(sR_, c_.m - 1.0);
        const double d1 = (c_.m - 1.0) * safe_pow(sR_, c_.m - 2.0);
        const double b0 = f0;
        const double b1 = w * d0;
        const double b2 = 3.0 * (f1 - f0) - 2.0 * w * d0 - w * d1;
        const double b3 = 2.0 * (f0 - f1) + w * d0 + w * d1;
        // convert from the unit-interval basis t = (s - sL)/w to s-monomials
        const double iw = 1.0 / w;
        ma_[0] = b0 - b1 * sL_ * iw + b2 * sL_ * sL_ * iw * iw - b3 * sL_ * sL_ * sL_ * iw * iw * iw;
        ma_[1] = b1 * iw - 2.0 * b2 * sL_ * iw * iw + 3.0 * b3 * sL_ * sL_ * iw * iw * iw;
        ma_[2] = b2 * iw * iw - 3.0 * b3 * sL_ * iw * iw * iw;
        ma_[3] = b3 * iw * iw * iw;

        for (int i = 0; i <= 512; ++i) {
            const double s = sL_ + (w * i) / 512.0;
            const double v = ((ma_[3] * s + ma_[2]) * s + ma_[1]) * s + ma_[0];
            if (!(v > 0.0))
                throw std::runtime_error("coefficients: viscosity bridge loses positivity at s = " +
                                         std::to_string(s));
        }

        mu_at_sL_ = safe_pow(sL_, c_.beta) / c_.beta;
        mu_end_ = mu_at_sL_ + blend_integral(sR_) - blend_integral(sL_);
        phi_blend_at_A_ = phi_blend_antider(c_.A);
        phi_at_sL_ = phi_blend_antider(sL_) - phi_blend_at_A_;
        phi_at_sR_ = phi_blend_antider(sR_) - phi_blend_at_A_;
    }

    double blend_integral(double s) const {
        return s * (ma_[0] + s * (ma_[1] / 2.0 + s * (ma_[2] / 3.0 + s * ma_[3] / 4.0)));
    }

    double phi_blend_antider(double s) const {
        return ma_[0] * std::log(s) + s * (ma_[1] + s * (ma_[2] / 2.0 + s * ma_[3] / 3.0));
    }

    double phi_low_antider(double s) const {
        // antiderivative of s^{beta-2}
        if (std::abs(c_.beta - 1.0) < 1e-12) return std::log(s);
        return safe_pow(s, c_.beta - 1.0) / (c_.beta - 1.0);
    }

    double phi_high_antider(double s) const {
        // antiderivative of s^{m-2}
        if (std::abs(c_.m - 1.0) < 1e-12) return std::log(s);
        return safe_pow(s, c_.m - 1.0) / (c_.m - 1.0);
    }

    // continuous antiderivative of p_e(xi)/xi^2 for the matched family
    double pe_Q(double s) const {
        const double l = c_.l, k = c_.k, A0 = c_.A0;
        auto q_lo = [&](double x) {
            return -safe_pow(A0, -l) / (l * x) + safe_pow(x, -l - 1.0) / (l * (l + 1.0));
        };
        auto q_hi = [&](double x) {
            return safe_pow(A0, -l - k) * safe_pow(x, k - 1.0) / (k * (k - 1.0)) +
                   safe_pow(A0, -l) / (k * x);
        };
        if (s <= A0) return q_lo(s);
        return q_hi(s) + (q_lo(A0) - q_hi(A0));
    }

    CoefficientSet c_;
    double sL_ = 0, sR_ = 0;
    std::array<double, 4> ma_{};  // bridge polynomial for mu' in s-monomials
    double mu_at_sL_ = 0, mu_end_ = 0;
    double phi_blend_at_A_ = 0, phi_at_sL_ = 0, phi_at_sR_ = 0;
};

inline CoefficientValues eval_coefficients(double rho, double theta, const Coefficients& cf) {
    if (!(rho > 0.0) || !(theta > 0.0))
        throw std::domain_error("eval_coefficients: rho and theta must be positive, got rho=" +
                                std::to_string(rho) + " theta=" + std::to_string(theta));
    CoefficientValues v;
    v.mu = cf.mu(rho);
    v.mu_prime = cf.mu_prime(rho);
    v.lambda = 2.0 * (rho * v.mu_prime - v.mu);
    v.three_lambda_plus_two_mu = 3.0 * v.lambda + 2.0 * v.mu;
    v.kappa = cf.kappa(rho, theta);
    v.nu = cf.nu(rho, theta);
    v.p = cf.pressure(rho, theta);
    v.e = cf.internal_energy(rho, theta);
    v.phi = cf.phi(rho);
    v.P_e = cf.Pe(rho);
    for (double x : {v.mu, v.mu_prime, v.lambda, v.kappa, v.nu, v.p, v.e, v.phi, v.P_e})
        if (!std::isfinite(x))
            throw std::runtime_error("eval_coefficients: non-finite value at rho=" +
                                     std::to_string(rho) + " theta=" + std::to_string(theta));
    return v;
}

enum class HypothesisId { H31, H32_low, H32_high, H33, H34, H35_low, H35_high, H36 };

inline const char* hypothesis_name(HypothesisId id) {
    switch (id) {
        case HypothesisId::H31: return "H31";
        case HypothesisId::H32_low: return "H32_low";
        case HypothesisId::H32_high: return "H32_high";
        case HypothesisId::H33: return "H33";
        case HypothesisId::H34: return "H34";
        case HypothesisId::H35_low: return "H35_low";
        case HypothesisId::H35_high: return "H35_high";
        case HypothesisId::H36: return "H36";
    }
    return "?";
}

struct HypothesisEntry {
    HypothesisId id{};
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    // (rho, theta) of the worst sample; analytic parameter-range checks store
    // (offending value, bound) instead.
    std::array<double, 2> worst_sample{{std::numeric_limits<double>::quiet_NaN(),
                                        std::numeric_limits<double>::quiet_NaN()}};
    std::string note;
};

struct HypothesisReport {
    std::vector<HypothesisEntry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }

    const HypothesisEntry& entry(HypothesisId id) const {
        for (const auto& e : entries)
            if (e.id == id) return e;
        throw std::logic_error("hypothesis report: missing entry");
    }

    std::string table() const;
};

struct SampleSpec {
    double rho_min = 1e-6, rho_max = 1e6;
    double theta_min = 1e-2, theta_max = 1e2;
    int n_samples = 1000;
};

namespace detail {

class InequalityAcc {
  public:
    // record the requirement lhs <= rhs, witnessed at (x0, x1)
    void le(double lhs, double rhs, double x0, double x1) {
        const double margin = (rhs - lhs) / std::max(1.0, std::abs(rhs));
        if (margin < worst_) {
            worst_ = margin;
            at_ = {x0, x1};
        }
    }
    // strict requirement lhs < rhs; margin 0 counts as failure
    void lt(double lhs, double rhs, double x0, double x1) {
        le(lhs, rhs, x0, x1);
        if (rhs - lhs <= 0.0) forced_fail_ = true;
    }

    HypothesisEntry finish(HypothesisId id, std::string note = {}) const {
        HypothesisEntry e;
        e.id = id;
        e.worst_margin = worst_;
        e.worst_sample = at_;
        e.pass = !forced_fail_ && worst_ >= 0.0;
        e.note = std::move(note);
        return e;
    }

  private:
    double worst_ = std::numeric_limits<double>::infinity();
    std::array<double, 2> at_{{std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN()}};
    bool forced_fail_ = false;
};

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    if (n == 1) {
        out.push_back(lo);
        return out;
    }
    const double la = std::log(lo), lb = std::log(hi);
    for (int i = 0; i < n; ++i)
        out.push_back(std::exp(la + (lb - la) * i / (n - 1)));
    return out;
}

}  // namespace detail

// Samples every defining inequality of the coefficient hypotheses on log-spaced
// grids and reports per-hypothesis worst margins. Parameter-range constraints
// are folded into the hypothesis that owns the parameter, with the witness
// recorded as (value, bound). Works on out-of-range candidate sets by design.
inline HypothesisReport validate_hypotheses(const CoefficientSet& set, const SampleSpec& spec) {
    if (!(spec.rho_min > 0.0 && spec.rho_max >= spec.rho_min && spec.theta_min > 0.0 &&
          spec.theta_max >= spec.theta_min))
        throw std::invalid_argument("validate_hypotheses: sample ranges must be positive and ordered");
    if (spec.n_samples < 2)
        throw std::invalid_argument("validate_hypotheses: need at least 2 samples per decade range");

    const Coefficients cf(set);
    const auto rho_s = detail::log_spaced(spec.rho_min, spec.rho_max, spec.n_samples);
    const auto theta_s = detail::log_spaced(spec.theta_min, spec.theta_max, spec.n_samples);
    const double idtol = 1e-12;

    HypothesisReport rep;

    {   // H31: lambda = 2(rho mu' - mu) as an identity over density samples
        detail::InequalityAcc acc;
        for (double s : rho_s) {
            const double lam = cf.lambda(s);
            const double dev = std::abs(lam - 2.0 * (s * cf.mu_prime(s) - cf.mu(s)));
            acc.le(dev, idtol * std::max(1.0, std::abs(lam)), s, 0.0);
        }
        rep.entries.push_back(acc.finish(HypothesisId::H31));
    }

    {   // H32 low regime: beta range, mu' band and 3*lambda+2*mu floor below A
        detail::InequalityAcc acc;
        acc.lt(2.0 / 3.0, set.beta, set.beta, 2.0 / 3.0);
        acc.lt(set.beta, 1.0, set.beta, 1.0);
        for (double c : {set.c0})
            acc.lt(0.0, c, c, 0.0);
        for (double s : rho_s) {
            if (s >= set.A) continue;
            const double mp = cf.mu_prime(s);
            const double band = std::pow(s, set.beta - 1.0);
            acc.le(set.c0 * band, mp, s, 0.0);
            acc.le(mp, band / set.c0, s, 0.0);
            acc.le(set.c0 * std::pow(s, set.beta), 3.0 * cf.lambda(s) + 2.0 * cf.mu(s), s, 0.0);
            if (s <= 0.5 * set.A)
                acc.le(cf.mu(s), std::pow(s, set.beta) / (set.beta * set.c0), s, 0.0);
        }
        rep.entries.push_back(acc.finish(HypothesisId::H32_low));
    }

    {   // H32 high regime: m range, mu' band and 3*lambda+2*mu band above A
        detail::InequalityAcc acc;
        acc.lt(1.0, set.m, set.m, 1.0);
        for (double c : {set.c1})
            acc.lt(0.0, c, c, 0.0);
        for (double s : rho_s) {
            if (s < set.A) continue;
            const double mp = cf.mu_prime(s);
            const double band = std::pow(s, set.m - 1.0);
            const double tl = 3.0 * cf.lambda(s) + 2.0 * cf.mu(s);
            acc.le(set.c1 * band, mp, s, 0.0);
            acc.le(mp, band / set.c1, s, 0.0);
            acc.le(set.c1 * std::pow(s, set.m), tl, s, 0.0);
            acc.le(tl, std::pow(s, set.m) / set.c1, s, 0.0);
        }
        rep.entries.push_back(acc.finish(HypothesisId::H32_high));
    }

    {   // H33: a range and kappa0 band over the (rho, theta) lattice
        detail::InequalityAcc acc;
        acc.le(2.0, set.a, set.a, 2.0);
        acc.lt(0.0, set.c2, set.c2, 0.0);
        for (double r : rho_s)
            for (double t : theta_s) {
                const double k0 = cf.kappa(r, t) / ((r + 1.0) * (std::pow(t, set.a) + 1.0));
                acc.le(set.c2, k0, r, t);
                acc.le(k0, 1.0 / set.c2, r, t);
            }
        rep.entries.push_back(acc.finish(HypothesisId::H33));
    }

    {   // H34: p = rho theta + p_e and e = cv theta + P_e as identities
        detail::InequalityAcc acc;
        acc.lt(0.0, set.cv, set.cv, 0.0);
        for (std::size_t i = 0; i < rho_s.size(); ++i) {
            const double r = rho_s[i];
            const double t = theta_s[i % theta_s.size()];
            const double p = cf.pressure(r, t);
            const double e = cf.internal_energy(r, t);
            acc.le(std::abs(p - (r * t + cf.pe(r))), idtol * std::max(1.0, std::abs(p)), r, t);
            acc.le(std::abs(e - (set.cv * t + cf.Pe(r))), idtol * std::max(1.0, std::abs(e)), r, t);
        }
        rep.entries.push_back(acc.finish(HypothesisId::H34));
    }

    {   // H35 low regime: the exponent floor on l and the p_e' band below A0
        detail::InequalityAcc acc;
        acc.lt(0.0, set.c3, set.c3, 0.0);
        acc.lt(set.l_lower_bound(), set.l, set.l, set.l_lower_bound());
        for (double s : rho_s) {
            if (s >= set.A0) continue;
            const double pp = cf.pe_prime(s);
            const double band = std::pow(s, -set.l - 1.0);
            acc.le(set.c3 * band, pp, s, 0.0);
            acc.le(pp, band / set.c3, s, 0.0);
        }
        rep.entries.push_back(acc.finish(HypothesisId::H35_low));
    }

    {   // H35 high regime: the exponent ceiling on k and the p_e' bound above A0
        detail::InequalityAcc acc;
        acc.lt(0.0, set.c4, set.c4, 0.0);
        acc.le(set.k, set.k_upper_bound(), set.k, set.k_upper_bound());
        for (double s : rho_s) {
            if (s <= set.A0) continue;
            acc.le(cf.pe_prime(s), set.c4 * std::pow(s, set.k - 1.0), s, 0.0);
        }
        rep.entries.push_back(acc.finish(HypothesisId::H35_high));
    }

    {   // H36: constant band everywhere; the theta/rho floor only where it is
        // jointly satisfiable with the upper clamp (reported as a fraction)
        detail::InequalityAcc acc;
        acc.lt(0.0, set.c5, set.c5, 0.0);
        acc.lt(0.0, set.c6, set.c6, 0.0);
        std::size_t active = 0, total = 0;
        for (double r : rho_s)
            for (double t : theta_s) {
                const double n = cf.nu(r, t);
                acc.le(set.c6, n, r, t);
                acc.le(n, 1.0 / set.c6, r, t);
                ++total;
                const double floor = set.c5 * t / r;
                if (floor <= set.c6) {
                    ++active;
                    acc.le(floor, n, r, t);
                }
            }
        const double frac = total ? static_cast<double>(active) / static_cast<double>(total) : 0.0;
        char buf[64];
        std::snprintf(buf, sizeof buf, "theta/rho floor active on %.1f%% of samples", 100.0 * frac);
        rep.entries.push_back(acc.finish(HypothesisId::H36, buf));
    }

    return rep;
}

inline std::string HypothesisReport::table() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-9s %-6s %14s %14s %14s  %s\n", "check", "pass",
                  "worst_margin", "sample_0", "sample_1", "note");
    out += line;
    out += std::string(78, '-') + "\n";
    for (const auto& e : entries) {
        std::snprintf(line, sizeof line, "%-9s %-6s %14.6e %14.6e %14.6e  %s\n",
                      hypothesis_name(e.id), e.pass ? "yes" : "NO", e.worst_margin,
                      e.worst_sample[0], e.worst_sample[1], e.note.c_str());
        out += line;
    }
    return out;
}

}  // namespace bdmhd
