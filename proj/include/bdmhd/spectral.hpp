#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <variant>
#include <vector>

#include "bdmhd/grid.hpp"
#include "bdmhd/util.hpp"

namespace bdmhd {

// Fourier pseudo-spectral operators on one grid. Differentiation applies the
// 2/3-rule mask, so discrete integration by parts between any two masked grid
// functions holds to round-off (Parseval pairing). Plans use FFTW_ESTIMATE and
// run single-threaded: transform results are bit-reproducible and independent
// of the caller's thread count. Transform execution on distinct buffers is
// thread-safe; only planning needs the global lock.
class Spectral {
  public:
    explicit Spectral(const Grid& g) : g_(g) {
        nc_ = static_cast<std::size_t>(g_.n[0]) * g_.n[1] * (g_.n[2] / 2 + 1);
        std::vector<double> r(g_.npoints());
        std::vector<std::complex<double>> c(nc_);
        std::lock_guard<std::mutex> lock(planner_mutex());
        fwd_ = fftw_plan_dft_r2c_3d(g_.n[0], g_.n[1], g_.n[2], r.data(),
                                    reinterpret_cast<fftw_complex*>(c.data()),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_c2r_3d(g_.n[0], g_.n[1], g_.n[2],
                                    reinterpret_cast<fftw_complex*>(c.data()), r.data(),
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!fwd_ || !bwd_) throw std::runtime_error("spectral: plan creation failed");
        init_tables();
    }
    ~Spectral() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    const Grid& grid() const { return g_; }
    double dealias_kmax() const { return dealias_kmax_; }

    using Complex = std::complex<double>;
    using Modes = std::vector<Complex>;

    Modes forward(const Scalar& f) const {
        check_size(f);
        Scalar tmp = f;  // r2c may destroy its input
        Modes out(nc_);
        fftw_execute_dft_r2c(fwd_, tmp.data(), reinterpret_cast<fftw_complex*>(out.data()));
        const double scale = 1.0 / static_cast<double>(g_.npoints());
        for (auto& z : out) z *= scale;
        return out;
    }

    Scalar backward(Modes m) const {
        Scalar out(g_.npoints());
        fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(m.data()), out.data());
        return out;
    }

    // d/dx_ax with the 2/3 mask; inactive axes return the zero field.
    Scalar derivative(const Scalar& f, int ax) const {
        if (ax >= g_.d) return make_scalar(g_);
        Modes m = forward_centered(f);
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            const double k = ktab_[ax][axis_index(idx, ax)];
            m[idx] = mask_[idx] ? Complex(0.0, k) * m[idx] : Complex(0.0, 0.0);
        }
        return backward(std::move(m));
    }

    Vec3 gradient(const Scalar& f) const {
        Vec3 out = make_vec3(g_);
        Modes m = forward_centered(f);
        for (int ax = 0; ax < g_.d; ++ax) {
            Modes d(nc_);
            for (std::size_t idx = 0; idx < nc_; ++idx) {
                const double k = ktab_[ax][axis_index(idx, ax)];
                d[idx] = mask_[idx] ? Complex(0.0, k) * m[idx] : Complex(0.0, 0.0);
            }
            out[ax] = backward(std::move(d));
        }
        return out;
    }

    Scalar divergence(const Vec3& v) const {
        Modes acc(nc_, Complex(0.0, 0.0));
        for (int ax = 0; ax < g_.d; ++ax) {
            Modes m = forward_centered(v[ax]);
            for (std::size_t idx = 0; idx < nc_; ++idx) {
                const double k = ktab_[ax][axis_index(idx, ax)];
                if (mask_[idx]) acc[idx] += Complex(0.0, k) * m[idx];
            }
        }
        return backward(std::move(acc));
    }

    Vec3 curl(const Vec3& v) const {
        std::array<Modes, 3> m;
        for (int c = 0; c < 3; ++c) m[c] = forward_centered(v[c]);
        std::array<Modes, 3> out;
        for (int c = 0; c < 3; ++c) out[c].assign(nc_, Complex(0.0, 0.0));
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            if (!mask_[idx]) continue;
            const Complex ikx(0.0, kat(idx, 0)), iky(0.0, kat(idx, 1)), ikz(0.0, kat(idx, 2));
            out[0][idx] = iky * m[2][idx] - ikz * m[1][idx];
            out[1][idx] = ikz * m[0][idx] - ikx * m[2][idx];
            out[2][idx] = ikx * m[1][idx] - iky * m[0][idx];
        }
        Vec3 r;
        for (int c = 0; c < 3; ++c) r[c] = backward(std::move(out[c]));
        return r;
    }

    void dealias(Scalar& f) const {
        Modes m = forward(f);
        for (std::size_t idx = 0; idx < nc_; ++idx)
            if (!mask_[idx]) m[idx] = Complex(0.0, 0.0);
        f = backward(std::move(m));
    }

    void dealias(Vec3& v) const {
        for (auto& c : v) dealias(c);
    }

    // Leray-Helmholtz projection onto divergence-free fields; the mean mode is
    // untouched (constants are divergence-free). Idempotent to round-off.
    Vec3 project_div_free(const Vec3& v) const {
        std::array<Modes, 3> m;
        for (int c = 0; c < 3; ++c) m[c] = forward(v[c]);
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            if (!mask_[idx]) {
                for (int c = 0; c < 3; ++c) m[c][idx] = Complex(0.0, 0.0);
                continue;
            }
            const double kx = kat(idx, 0), ky = kat(idx, 1), kz = kat(idx, 2);
            const double k2 = kx * kx + ky * ky + kz * kz;
            if (k2 == 0.0) continue;
            const Complex kdot = (kx * m[0][idx] + ky * m[1][idx] + kz * m[2][idx]) / k2;
            m[0][idx] -= kx * kdot;
            m[1][idx] -= ky * kdot;
            m[2][idx] -= kz * kdot;
        }
        Vec3 out;
        for (int c = 0; c < 3; ++c) out[c] = backward(std::move(m[c]));
        return out;
    }

    // Zero-mean inverse Laplacian: solves -lap(w) = f - mean(f).
    Scalar poisson_solve(const Scalar& f) const {
        Modes m = forward(f);
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            if (!mask_[idx]) {
                m[idx] = Complex(0.0, 0.0);
                continue;
            }
            const double kx = kat(idx, 0), ky = kat(idx, 1), kz = kat(idx, 2);
            const double k2 = kx * kx + ky * ky + kz * kz;
            m[idx] = (k2 == 0.0) ? Complex(0.0, 0.0) : m[idx] / k2;
        }
        return backward(std::move(m));
    }

    // Sharp low-pass: zero every mode with |k| > k_cut. Exact and idempotent;
    // this is the mollifier realization (cutoff k_cut = 1/epsilon).
    void low_pass(Scalar& f, double k_cut) const {
        Modes m = forward(f);
        for (std::size_t idx = 0; idx < nc_; ++idx)
            if (!mask_[idx] || kmag(idx) > k_cut) m[idx] = Complex(0.0, 0.0);
        f = backward(std::move(m));
    }

    // L2 norm of the spectral content with k_lo < |k| <= k_hi (Parseval).
    double band_l2(const Scalar& f, double k_lo, double k_hi) const {
        Modes m = forward(f);
        CompensatedSum s;
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            const double km = kmag(idx);
            if (!(km > k_lo && km <= k_hi)) continue;
            s.add(conj_weight(idx) * std::norm(m[idx]));
        }
        return std::sqrt(g_.volume() * s.value());
    }

    double tail_l2(const Scalar& f, double k_cut) const {
        return band_l2(f, k_cut, std::numeric_limits<double>::infinity());
    }

    // Fraction of non-mean L2 content sitting in the top third of the retained
    // band; the steepening indicator.
    double tail_fraction(const Scalar& f) const {
        Modes m = forward(f);
        CompensatedSum all, tail;
        const double k_hi = dealias_kmax_ * (2.0 / 3.0);
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            if (!mask_[idx]) continue;
            const double km = kmag(idx);
            if (km == 0.0) continue;
            const double e = conj_weight(idx) * std::norm(m[idx]);
            all.add(e);
            if (km > k_hi) tail.add(e);
        }
        const double denom = all.value();
        return denom > 0.0 ? std::sqrt(tail.value() / denom) : 0.0;
    }

  private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    void check_size(const Scalar& f) const {
        if (f.size() != g_.npoints())
            throw std::invalid_argument("spectral: field size does not match grid");
    }

    // Forward transform of f minus its mean. The ik-weighted operators drop the
    // mean mode anyway, and transform round-off scales with the input magnitude,
    // so centering keeps derivative noise proportional to the fluctuation size
    // rather than the field size.
    Modes forward_centered(const Scalar& f) const {
        check_size(f);
        CompensatedSum s;
        for (double v : f) s.add(v);
        const double mean = s.value() / static_cast<double>(f.size());
        Scalar tmp(f.size());
        for (std::size_t p = 0; p < f.size(); ++p) tmp[p] = f[p] - mean;
        Modes out(nc_);
        fftw_execute_dft_r2c(fwd_, tmp.data(), reinterpret_cast<fftw_complex*>(out.data()));
        const double scale = 1.0 / static_cast<double>(g_.npoints());
        for (auto& z : out) z *= scale;
        return out;
    }

    void init_tables() {
        const int nck = g_.n[2] / 2 + 1;
        for (int ax = 0; ax < 3; ++ax) {
            const int n = g_.n[ax];
            const int nfreq = (ax == 2) ? nck : n;
            ktab_[ax].resize(nfreq);
            ftab_[ax].resize(nfreq);
            for (int i = 0; i < nfreq; ++i) {
                const int f = (ax == 2) ? i : ((i <= n / 2) ? i : i - n);
                ftab_[ax][i] = f;
                ktab_[ax][i] = kTwoPi * f / g_.length[ax];
            }
        }
        mask_.resize(nc_);
        double kmax2 = 0.0;
        for (std::size_t idx = 0; idx < nc_; ++idx) {
            bool keep = true;
            for (int ax = 0; ax < 3; ++ax) {
                const int n = g_.n[ax];
                if (n == 1) continue;
                const int f = ftab_[ax][axis_index(idx, ax)];
                if (std::abs(f) > n / 3) keep = false;
            }
            mask_[idx] = keep;
            if (keep) {
                const double kx = kat(idx, 0), ky = kat(idx, 1), kz = kat(idx, 2);
                kmax2 = std::max(kmax2, kx * kx + ky * ky + kz * kz);
            }
        }
        dealias_kmax_ = std::sqrt(kmax2);
    }

    std::size_t axis_index(std::size_t idx, int ax) const {
        const std::size_t nck = static_cast<std::size_t>(g_.n[2] / 2 + 1);
        if (ax == 2) return idx % nck;
        if (ax == 1) return (idx / nck) % static_cast<std::size_t>(g_.n[1]);
        return idx / (nck * static_cast<std::size_t>(g_.n[1]));
    }

    double kat(std::size_t idx, int ax) const { return ktab_[ax][axis_index(idx, ax)]; }

    double kmag(std::size_t idx) const {
        const double kx = kat(idx, 0), ky = kat(idx, 1), kz = kat(idx, 2);
        return std::sqrt(kx * kx + ky * ky + kz * kz);
    }

    // r2c stores only half the spectrum; interior planes stand for a conjugate
    // pair and count twice in Parseval sums.
    double conj_weight(std::size_t idx) const {
        const int f2 = ftab_[2][axis_index(idx, 2)];
        return (f2 == 0 || 2 * f2 == g_.n[2]) ? 1.0 : 2.0;
    }

    Grid g_;
    std::size_t nc_ = 0;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
    std::array<std::vector<double>, 3> ktab_;
    std::array<std::vector<int>, 3> ftab_;
    std::vector<char> mask_;
    double dealias_kmax_ = 0.0;
};

enum class DerivKind { gradient, divergence, curl };

// Shape-checked dispatcher over the three derivative kinds: gradient maps a
// scalar to a vector; divergence and curl map vectors.
inline std::variant<Scalar, Vec3> apply_derivative(const Spectral& sp, DerivKind kind,
                                                   const std::variant<Scalar, Vec3>& field) {
    switch (kind) {
        case DerivKind::gradient:
            if (!std::holds_alternative<Scalar>(field))
                throw std::invalid_argument("apply_derivative: gradient expects a scalar field");
            return sp.gradient(std::get<Scalar>(field));
        case DerivKind::divergence:
            if (!std::holds_alternative<Vec3>(field))
                throw std::invalid_argument("apply_derivative: divergence expects a vector field");
            return sp.divergence(std::get<Vec3>(field));
        case DerivKind::curl:
            if (!std::holds_alternative<Vec3>(field))
                throw std::invalid_argument("apply_derivative: curl expects a vector field");
            return sp.curl(std::get<Vec3>(field));
    }
    throw std::logic_error("apply_derivative: unknown kind");
}

}  // namespace bdmhd
