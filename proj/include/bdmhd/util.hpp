#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace bdmhd {

// Neumaier variant of compensated summation. Results are a function of the
// addend sequence only, so any reduction that feeds values in a fixed index
// order is bit-reproducible regardless of thread count.
class CompensatedSum {
  public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_total(const std::vector<double>& v) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    return s.value();
}

// FNV-1a, 64-bit. Used for config content hashes; stable across platforms.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace detail {

// shortest decimal form that parses back to the same double; the single
// number formatter behind CSV rows and canonical config text
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

// Adaptive Simpson quadrature with absolute tolerance. The recursion depth cap
// makes pathological integrands fail loudly instead of hanging.
namespace detail {
inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth, long long& budget) {
    if (depth > 60)
        throw std::runtime_error("adaptive_simpson: recursion depth exceeded on [" +
                                 std::to_string(a) + ", " + std::to_string(b) + "]");
    if ((budget -= 2) < 0)
        throw std::runtime_error("adaptive_simpson: evaluation budget exhausted; "
                                 "tolerance too tight for the integrand scale");
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, long long max_evals = 2000000) {
    if (a == b) return 0.0;
    const double sign = (a < b) ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double m = 0.5 * (lo + hi);
    const double fa = f(lo), fm = f(m), fb = f(hi);
    const double whole = detail::simpson(lo, hi, fa, fm, fb);
    long long budget = max_evals;
    return sign * detail::adaptive_simpson_rec(f, lo, hi, fa, fm, fb, whole, tol, 0, budget);
}

// Static-partition parallel map over [0, n). Each worker owns a disjoint index
// range and no reduction happens here, so results cannot depend on the thread
// count. Intended for pointwise field loops only.
class ThreadPool {
  public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    void set_threads(int n) { threads_ = (n < 1) ? 1 : n; }
    int threads() const { return threads_; }

    void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) const {
        const std::size_t nt = static_cast<std::size_t>(threads_);
        if (nt <= 1 || n < 2048) {
            body(0, n);
            return;
        }
        const std::size_t chunk = (n + nt - 1) / nt;
        std::vector<std::thread> workers;
        workers.reserve(nt);
        for (std::size_t t = 0; t < nt; ++t) {
            const std::size_t lo = t * chunk;
            if (lo >= n) break;
            const std::size_t hi = std::min(n, lo + chunk);
            workers.emplace_back([&body, lo, hi] { body(lo, hi); });
        }
        for (auto& w : workers) w.join();
    }

  private:
    int threads_ = 1;
};

inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    ThreadPool::instance().parallel_for(n, body);
}

}  // namespace bdmhd
