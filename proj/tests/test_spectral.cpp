#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bdmhd/finite_diff.hpp"
#include "bdmhd/norms.hpp"
#include "bdmhd/spectral.hpp"

using namespace bdmhd;

namespace {
const double pi = 3.14159265358979323846;

Grid grid1d(int n = 32) { return Grid::make(1, {n, 1, 1}, {kTwoPi, kTwoPi, kTwoPi}); }
Grid grid3d(int n = 16) { return Grid::make(3, {n, n, n}, {kTwoPi, kTwoPi, kTwoPi}); }

// random band-limited field with content well inside the dealias cutoff
Scalar random_smooth(const Grid& g, std::mt19937_64& rng, int kmax = 3) {
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    Scalar f = make_scalar(g);
    for (int kx = 0; kx <= (g.d >= 1 ? kmax : 0); ++kx)
        for (int ky = 0; ky <= (g.d >= 2 ? kmax : 0); ++ky)
            for (int kz = 0; kz <= (g.d >= 3 ? kmax : 0); ++kz) {
                const double a = amp(rng), b = amp(rng);
                for (int i = 0; i < g.n[0]; ++i)
                    for (int j = 0; j < g.n[1]; ++j)
                        for (int k = 0; k < g.n[2]; ++k) {
                            const double ph =
                                kx * i * g.dx(0) + ky * j * g.dx(1) + kz * k * g.dx(2);
                            f[g.index(i, j, k)] += a * std::cos(ph) + b * std::sin(ph);
                        }
            }
    return f;
}
}  // namespace

TEST_CASE("gradient of a constant vanishes") {
    const Grid g = grid3d(8);
    const Spectral sp(g);
    const Scalar c = make_scalar(g, 3.7);
    const Vec3 grad = sp.gradient(c);
    CHECK(max_abs(grad) < 1e-13);
}

TEST_CASE("curl of a single-mode field matches the symbolic curl") {
    const Grid g = grid1d();
    const Spectral sp(g);
    Vec3 H = make_vec3(g);
    H[1] = sample_scalar(g, [](double x, double, double) { return std::sin(x); });
    const Vec3 c = sp.curl(H);
    const Scalar expect = sample_scalar(g, [](double x, double, double) { return std::cos(x); });
    double err = 0.0;
    for (std::size_t i = 0; i < expect.size(); ++i)
        err = std::max(err, std::abs(c[2][i] - expect[i]));
    CHECK(err <= 1e-10);
    CHECK(max_abs(c[0]) <= 1e-12);
    CHECK(max_abs(c[1]) <= 1e-12);
}

TEST_CASE("divergence of a single-mode field is spectrally exact") {
    const Grid g = grid1d();
    const Spectral sp(g);
    Vec3 u = make_vec3(g);
    u[0] = sample_scalar(g, [](double x, double, double) { return std::sin(x); });
    const Scalar d = sp.divergence(u);
    const Scalar expect = sample_scalar(g, [](double x, double, double) { return std::cos(x); });
    double err = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) err = std::max(err, std::abs(d[i] - expect[i]));
    CHECK(err <= 1e-10);
}

TEST_CASE("projection removes pure gradients and fixes divergence-free fields") {
    const Grid g = grid1d();
    const Spectral sp(g);

    Vec3 grad_part = make_vec3(g);
    grad_part[0] = sample_scalar(g, [](double x, double, double) { return std::sin(x); });
    const Vec3 p1 = sp.project_div_free(grad_part);
    CHECK(max_abs(p1) <= 1e-12);

    Vec3 solenoidal = make_vec3(g);
    solenoidal[1] = sample_scalar(g, [](double x, double, double) { return std::sin(x); });
    const Vec3 p2 = sp.project_div_free(solenoidal);
    double err = 0.0;
    for (std::size_t i = 0; i < p2[1].size(); ++i)
        err = std::max(err, std::abs(p2[1][i] - solenoidal[1][i]));
    CHECK(err <= 1e-12);

    Vec3 mixed = make_vec3(g);
    mixed[0] = solenoidal[1];
    mixed[1] = solenoidal[1];
    const Vec3 p3 = sp.project_div_free(mixed);
    CHECK(max_abs(p3[0]) <= 1e-12);
    err = 0.0;
    for (std::size_t i = 0; i < p3[1].size(); ++i)
        err = std::max(err, std::abs(p3[1][i] - solenoidal[1][i]));
    CHECK(err <= 1e-12);
}

TEST_CASE("projection is idempotent and kills divergence") {
    const Grid g = grid3d(16);
    const Spectral sp(g);
    std::mt19937_64 rng(42);
    Vec3 v{random_smooth(g, rng), random_smooth(g, rng), random_smooth(g, rng)};
    const Vec3 p = sp.project_div_free(v);
    const Vec3 pp = sp.project_div_free(p);
    double scale = std::max(1e-300, max_abs(v));
    double err = 0.0;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < p[c].size(); ++i)
            err = std::max(err, std::abs(pp[c][i] - p[c][i]));
    CHECK(err <= 1e-12 * scale);
    CHECK(max_abs(sp.divergence(p)) <= 1e-12 * scale);
}

TEST_CASE("divergence of a curl vanishes to round-off") {
    const Grid g = grid3d(16);
    const Spectral sp(g);
    std::mt19937_64 rng(7);
    Vec3 v{random_smooth(g, rng), random_smooth(g, rng), random_smooth(g, rng)};
    const Vec3 c = sp.curl(v);
    CHECK(max_abs(sp.divergence(c)) <= 1e-12 * std::max(1.0, max_abs(v)));
}

TEST_CASE("discrete integration by parts holds to round-off") {
    const Grid g = grid3d(16);
    const Spectral sp(g);
    std::mt19937_64 rng(99);
    const Scalar f = random_smooth(g, rng);
    Vec3 v{random_smooth(g, rng), random_smooth(g, rng), random_smooth(g, rng)};
    const Scalar div_v = sp.divergence(v);
    const Vec3 grad_f = sp.gradient(f);
    CompensatedSum s;
    for (std::size_t i = 0; i < f.size(); ++i) {
        s.add(f[i] * div_v[i]);
        s.add(grad_f[0][i] * v[0][i] + grad_f[1][i] * v[1][i] + grad_f[2][i] * v[2][i]);
    }
    const double resid = std::abs(s.value() * g.cell_volume());
    const double scale = lp_norm(g, f, 2.0) * lp_norm(g, v, 2.0);
    CHECK(resid <= 1e-10 * std::max(1.0, scale));
}

TEST_CASE("derivatives are exact below the dealias cutoff and zero above it") {
    const Grid g = grid1d(32);  // keeps |f| <= 10
    const Spectral sp(g);
    for (int k : {1, 5, 10}) {
        const Scalar f =
            sample_scalar(g, [k](double x, double, double) { return std::sin(k * x); });
        const Scalar d = sp.derivative(f, 0);
        const Scalar expect =
            sample_scalar(g, [k](double x, double, double) { return k * std::cos(k * x); });
        double err = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
            err = std::max(err, std::abs(d[i] - expect[i]));
        CHECK(err <= 1e-10 * k);
    }
    const Scalar above =
        sample_scalar(g, [](double x, double, double) { return std::sin(12.0 * x); });
    CHECK(max_abs(sp.derivative(above, 0)) <= 1e-11);
}

TEST_CASE("norm examples: constants, single modes, empty supports") {
    const Grid g3 = grid3d(8);
    const Scalar c = make_scalar(g3, -2.5);
    CHECK(lp_norm(g3, c, 2.0) == Catch::Approx(2.5 * std::sqrt(g3.volume())).epsilon(1e-13));
    CHECK(lp_norm(g3, c, std::numeric_limits<double>::infinity()) == 2.5);
    CHECK(lp_norm(g3, c, 1.0) == Catch::Approx(2.5 * g3.volume()).epsilon(1e-13));

    const Grid g1 = grid1d();
    const Scalar s = sample_scalar(g1, [](double x, double, double) { return std::sin(x); });
    CHECK(lp_norm(g1, s, 2.0) == Catch::Approx(std::sqrt(pi)).epsilon(1e-13));

    // characteristic weight with empty support
    const Scalar w = make_scalar(g1, 0.0);
    CHECK(lp_norm(g1, s, 2.0, &w) == 0.0);

    CHECK_THROWS_AS(lp_norm(g1, s, 0.5), std::invalid_argument);
}

TEST_CASE("centered-difference backend converges at second order to the spectral one") {
    double prev_err = 0.0;
    for (int n : {32, 64, 128}) {
        const Grid g = grid1d(n);
        const Spectral sp(g);
        const Scalar f =
            sample_scalar(g, [](double x, double, double) { return std::sin(3.0 * x); });
        const Scalar ds = sp.derivative(f, 0);
        const Scalar dfd = fd_derivative(g, f, 0);
        double err = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i)
            err = std::max(err, std::abs(ds[i] - dfd[i]));
        if (prev_err > 0.0) CHECK(prev_err / err > 3.5);  // ~4 for second order
        prev_err = err;
    }
}

TEST_CASE("finite-difference kinds agree with spectral kinds on smooth fields") {
    const Grid g = grid3d(32);
    const Spectral sp(g);
    std::mt19937_64 rng(5);
    Vec3 v{random_smooth(g, rng, 2), random_smooth(g, rng, 2), random_smooth(g, rng, 2)};
    const Scalar ds = sp.divergence(v);
    const Scalar dfd = fd_divergence(g, v);
    double err = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) err = std::max(err, std::abs(ds[i] - dfd[i]));
    CHECK(err < 0.05 * std::max(1.0, max_abs(ds)));
}

TEST_CASE("derivative dispatcher enforces shapes") {
    const Grid g = grid1d(8);
    const Spectral sp(g);
    const Scalar f = make_scalar(g, 1.0);
    const Vec3 v = make_vec3(g, 1.0);
    CHECK_THROWS_AS(apply_derivative(sp, DerivKind::gradient, std::variant<Scalar, Vec3>(v)),
                    std::invalid_argument);
    CHECK_THROWS_AS(apply_derivative(sp, DerivKind::curl, std::variant<Scalar, Vec3>(f)),
                    std::invalid_argument);
    CHECK_NOTHROW(apply_derivative(sp, DerivKind::divergence, std::variant<Scalar, Vec3>(v)));
}

TEST_CASE("sharp low-pass keeps only modes at or below the cutoff and is idempotent") {
    const Grid g = grid1d(64);
    const Spectral sp(g);
    Scalar f = make_scalar(g);
    for (int k = 1; k <= 8; ++k) {
        const Scalar mode =
            sample_scalar(g, [k](double x, double, double) { return std::cos(k * x) / k; });
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += mode[i];
    }
    Scalar cut = f;
    sp.low_pass(cut, 2.0);
    Scalar expect = make_scalar(g);
    for (int k = 1; k <= 2; ++k)
        for (int i = 0; i < g.n[0]; ++i)
            expect[i] += std::cos(k * i * g.dx(0)) / k;
    double err = 0.0;
    for (std::size_t i = 0; i < cut.size(); ++i)
        err = std::max(err, std::abs(cut[i] - expect[i]));
    CHECK(err <= 1e-12);

    Scalar twice = cut;
    sp.low_pass(twice, 2.0);
    err = 0.0;
    for (std::size_t i = 0; i < cut.size(); ++i)
        err = std::max(err, std::abs(twice[i] - cut[i]));
    CHECK(err <= 1e-14);
}

TEST_CASE("band and tail norms follow Parseval") {
    const Grid g = grid1d(64);
    const Spectral sp(g);
    // f = cos(x) + cos(5x): each mode carries L2 energy pi*L... norm sqrt(pi*2pi/2pi)...
    const Scalar f = sample_scalar(
        g, [](double x, double, double) { return std::cos(x) + std::cos(5.0 * x); });
    const double one_mode = std::sqrt(pi);  // ||cos kx||_2 on [0, 2pi)
    CHECK(sp.tail_l2(f, 3.0) == Catch::Approx(one_mode).epsilon(1e-12));
    CHECK(sp.band_l2(f, 0.5, 3.0) == Catch::Approx(one_mode).epsilon(1e-12));
    CHECK(sp.tail_l2(f, 6.0) <= 1e-13);
    const double total = sp.band_l2(f, -1.0, 1e9);
    CHECK(total == Catch::Approx(std::sqrt(2.0) * one_mode).epsilon(1e-12));
}
