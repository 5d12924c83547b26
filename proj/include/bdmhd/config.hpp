#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdmhd/constitutive.hpp"
#include "bdmhd/grid.hpp"
#include "bdmhd/util.hpp"

namespace bdmhd {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full description of a run: discretization, coefficient family, initial
// data, time horizon, output policy. Parsed from dotted-key text; unknown
// keys are rejected so typos cannot silently change an experiment.
struct RunConfig {
    int d = 1;
    std::array<int, 3> n = {64, 1, 1};
    std::array<double, 3> length = {kTwoPi, kTwoPi, kTwoPi};

    CoefficientSet coeffs;

    std::string profile = "constant";  // constant|smooth1d|single_mode_H|multimode|snapshot
    std::string snapshot_path;
    double rho0 = 1.0, theta0 = 1.0;
    std::array<double, 3> u0 = {0.0, 0.0, 0.0};
    std::array<double, 3> H0 = {0.0, 0.0, 0.0};
    double rho_amp = 0.15, theta_amp = 0.1, u_amp = 0.15, H_amp = 0.2;
    int mode_k = 1;

    double T_final = 0.0;
    double dt = 0.0;  // 0 selects the stability-bound step, recomputed each step
    double cfl = 0.4;

    std::string out_dir = "out";
    int snapshot_every = 0;  // extra snapshots every this many steps; 0 = ends only

    double rho_floor = 1e-8;
    double theta_floor = 1e-8;

    bool ev_rho = true, ev_u = true, ev_theta = true, ev_H = true;

    std::uint64_t seed = 0;  // consumed only by randomized property tests

    double conv_eps0 = 0.5;
    int conv_levels = 4;
    double conv_T = 0.1;
    double conv_dt = 1e-3;
    int conv_outputs = 9;
    double conv_max_floor_fraction = 0.1;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct KeyParser {
    std::function<void(RunConfig&, const std::string&, int)> apply;
};

inline double parse_double_or(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": " + key +
                          " expects a number, got '" + v + "'");
    }
}

inline long long parse_int_or(const std::string& v, int line, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": " + key +
                          " expects an integer, got '" + v + "'");
    }
}

inline bool parse_bool_or(const std::string& v, int line, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("line " + std::to_string(line) + ": " + key +
                      " expects true/false, got '" + v + "'");
}

// up to three whitespace-separated values, missing entries filled with `fill`
template <typename T, typename Parse>
inline std::array<T, 3> parse_triple(const std::string& v, int line, const std::string& key,
                                     T fill, Parse parse_one) {
    std::istringstream ss(v);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (toks.empty() || toks.size() > 3)
        throw ConfigError("line " + std::to_string(line) + ": " + key +
                          " expects 1 to 3 values");
    std::array<T, 3> out = {fill, fill, fill};
    for (std::size_t i = 0; i < toks.size(); ++i) out[i] = parse_one(toks[i], line, key);
    return out;
}

inline const std::map<std::string, KeyParser>& key_table() {
    static const std::map<std::string, KeyParser> table = [] {
        std::map<std::string, KeyParser> t;
        auto dbl = [&](const std::string& key, double RunConfig::* field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v, int line) {
                c.*field = parse_double_or(v, line, key);
            }};
        };
        auto intf = [&](const std::string& key, int RunConfig::* field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v, int line) {
                c.*field = static_cast<int>(parse_int_or(v, line, key));
            }};
        };
        auto boolf = [&](const std::string& key, bool RunConfig::* field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v, int line) {
                c.*field = parse_bool_or(v, line, key);
            }};
        };
        auto cdbl = [&](const std::string& key, double CoefficientSet::* field) {
            t[key] = {[key, field](RunConfig& c, const std::string& v, int line) {
                c.coeffs.*field = parse_double_or(v, line, key);
            }};
        };

        intf("grid.d", &RunConfig::d);
        t["grid.n"] = {[](RunConfig& c, const std::string& v, int line) {
            c.n = parse_triple<int>(v, line, "grid.n", 1,
                                    [](const std::string& s, int ln, const std::string& k) {
                                        return static_cast<int>(parse_int_or(s, ln, k));
                                    });
        }};
        t["grid.length"] = {[](RunConfig& c, const std::string& v, int line) {
            c.length = parse_triple<double>(v, line, "grid.length", kTwoPi, parse_double_or);
        }};

        cdbl("coeffs.beta", &CoefficientSet::beta);
        cdbl("coeffs.m", &CoefficientSet::m);
        cdbl("coeffs.A", &CoefficientSet::A);
        cdbl("coeffs.c0", &CoefficientSet::c0);
        cdbl("coeffs.c1", &CoefficientSet::c1);
        cdbl("coeffs.a", &CoefficientSet::a);
        cdbl("coeffs.c2", &CoefficientSet::c2);
        cdbl("coeffs.l", &CoefficientSet::l);
        cdbl("coeffs.k", &CoefficientSet::k);
        cdbl("coeffs.A0", &CoefficientSet::A0);
        cdbl("coeffs.c3", &CoefficientSet::c3);
        cdbl("coeffs.c4", &CoefficientSet::c4);
        cdbl("coeffs.c5", &CoefficientSet::c5);
        cdbl("coeffs.c6", &CoefficientSet::c6);
        cdbl("coeffs.cv", &CoefficientSet::cv);
        t["coeffs.mu_family"] = {[](RunConfig& c, const std::string& v, int line) {
            if (v == "blend") c.coeffs.mu_family = MuFamily::blend;
            else if (v == "power") c.coeffs.mu_family = MuFamily::power;
            else if (v == "linear") c.coeffs.mu_family = MuFamily::linear;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": coeffs.mu_family must be blend, power, or linear");
        }};
        t["coeffs.kappa0_family"] = {[](RunConfig& c, const std::string& v, int line) {
            if (v == "constant") c.coeffs.kappa0_family = Kappa0Family::constant;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": coeffs.kappa0_family must be constant");
        }};
        t["coeffs.nu_family"] = {[](RunConfig& c, const std::string& v, int line) {
            if (v == "clamp") c.coeffs.nu_family = NuFamily::clamp;
            else if (v == "constant") c.coeffs.nu_family = NuFamily::constant;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": coeffs.nu_family must be clamp or constant");
        }};
        t["coeffs.pe_family"] = {[](RunConfig& c, const std::string& v, int line) {
            if (v == "matched") c.coeffs.pe_family = PeFamily::matched;
            else if (v == "power") c.coeffs.pe_family = PeFamily::power;
            else
                throw ConfigError("line " + std::to_string(line) +
                                  ": coeffs.pe_family must be matched or power");
        }};

        t["init.profile"] = {[](RunConfig& c, const std::string& v, int) { c.profile = v; }};
        t["init.snapshot"] = {[](RunConfig& c, const std::string& v, int) { c.snapshot_path = v; }};
        dbl("init.rho0", &RunConfig::rho0);
        dbl("init.theta0", &RunConfig::theta0);
        t["init.u0"] = {[](RunConfig& c, const std::string& v, int line) {
            c.u0 = parse_triple<double>(v, line, "init.u0", 0.0, parse_double_or);
        }};
        t["init.H0"] = {[](RunConfig& c, const std::string& v, int line) {
            c.H0 = parse_triple<double>(v, line, "init.H0", 0.0, parse_double_or);
        }};
        dbl("init.rho_amp", &RunConfig::rho_amp);
        dbl("init.theta_amp", &RunConfig::theta_amp);
        dbl("init.u_amp", &RunConfig::u_amp);
        dbl("init.H_amp", &RunConfig::H_amp);
        intf("init.mode_k", &RunConfig::mode_k);

        dbl("time.T_final", &RunConfig::T_final);
        dbl("time.dt", &RunConfig::dt);
        dbl("time.cfl", &RunConfig::cfl);

        t["output.dir"] = {[](RunConfig& c, const std::string& v, int) { c.out_dir = v; }};
        intf("output.snapshot_every", &RunConfig::snapshot_every);

        dbl("floors.rho", &RunConfig::rho_floor);
        dbl("floors.theta", &RunConfig::theta_floor);

        boolf("evolve.rho", &RunConfig::ev_rho);
        boolf("evolve.u", &RunConfig::ev_u);
        boolf("evolve.theta", &RunConfig::ev_theta);
        boolf("evolve.H", &RunConfig::ev_H);

        t["run.seed"] = {[](RunConfig& c, const std::string& v, int line) {
            c.seed = static_cast<std::uint64_t>(parse_int_or(v, line, "run.seed"));
        }};

        dbl("converge.eps0", &RunConfig::conv_eps0);
        intf("converge.levels", &RunConfig::conv_levels);
        dbl("converge.T", &RunConfig::conv_T);
        dbl("converge.dt", &RunConfig::conv_dt);
        intf("converge.outputs", &RunConfig::conv_outputs);
        dbl("converge.max_floor_fraction", &RunConfig::conv_max_floor_fraction);
        return t;
    }();
    return table;
}

}  // namespace detail

// Validation shared by parse and by programmatic construction. Throws
// ConfigError naming the offending field. Range checks that belong to the
// hypothesis gate (validate-coeffs) are not duplicated here, except the
// viscosity growth exponent whose admissible interval shapes every family.
inline void validate_config(const RunConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    try {
        (void)Grid::make(c.d, c.n, c.length);
    } catch (const std::exception& e) {
        fail(e.what());
    }
    if (!(c.coeffs.beta > 2.0 / 3.0 && c.coeffs.beta < 1.0))
        fail("coeffs.beta = " + detail::format_double(c.coeffs.beta) +
             " outside the admissible range (2/3, 1)");
    if (!(c.T_final > 0.0)) fail("time.T_final must be positive");
    if (!(c.dt >= 0.0)) fail("time.dt must be nonnegative (0 selects the stability bound)");
    if (!(c.cfl > 0.0 && c.cfl <= 1.0)) fail("time.cfl must lie in (0, 1]");
    if (c.snapshot_every < 0) fail("output.snapshot_every must be nonnegative");
    if (!(c.rho_floor > 0.0) || !(c.theta_floor > 0.0)) fail("floors must be positive");
    static const char* profiles[] = {"constant", "smooth1d", "single_mode_H", "multimode",
                                     "snapshot"};
    bool known = false;
    for (const char* p : profiles) known = known || (c.profile == p);
    if (!known) fail("init.profile '" + c.profile + "' does not name a known profile");
    if (c.profile == "snapshot" && c.snapshot_path.empty())
        fail("init.profile snapshot requires init.snapshot = <path>");
    if (c.mode_k < 1) fail("init.mode_k must be at least 1");
    if (c.conv_levels < 1) fail("converge.levels must be at least 1");
    if (c.conv_outputs < 2) fail("converge.outputs must be at least 2");
    if (!(c.conv_eps0 > 0.0)) fail("converge.eps0 must be positive");
    if (!(c.conv_dt > 0.0)) fail("converge.dt must be positive");
    if (c.conv_T < 0.0) fail("converge.T must be nonnegative");
    if (!(c.conv_max_floor_fraction >= 0.0 && c.conv_max_floor_fraction <= 1.0))
        fail("converge.max_floor_fraction must lie in [0, 1]");
    try {
        Coefficients probe{c.coeffs};
        (void)probe;
    } catch (const std::exception& e) {
        fail(std::string("coefficient family rejected: ") + e.what());
    }
}

// Parses dotted-key `key = value` text with `#` comments. Required keys:
// grid.d, grid.n, time.T_final; everything else is defaulted. Every error
// carries the offending line number.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = detail::trim(raw);
        if (s.empty()) continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string value = detail::trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line) + ": empty key");
        const auto& table = detail::key_table();
        const auto it = table.find(key);
        if (it == table.end())
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
        if (const auto prev = seen.find(key); prev != seen.end())
            throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                              "' already set on line " + std::to_string(prev->second));
        seen[key] = line;
        it->second.apply(cfg, value, line);
    }
    for (const char* req : {"grid.d", "grid.n", "time.T_final"})
        if (!seen.count(req))
            throw ConfigError(std::string("missing required key '") + req + "'");
    validate_config(cfg);
    return cfg;
}

// Canonical text: every key in a fixed order with shortest round-trip
// numbers; comments, ordering, and formatting of the source wash out, so the
// content hash changes exactly when a semantic field changes.
inline std::string serialize_config(const RunConfig& c) {
    std::string out;
    auto kv = [&](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    auto num = [&](const std::string& key, double v) { kv(key, detail::format_double(v)); };
    auto integer = [&](const std::string& key, long long v) { kv(key, std::to_string(v)); };
    auto flag = [&](const std::string& key, bool v) { kv(key, v ? "true" : "false"); };

    integer("grid.d", c.d);
    kv("grid.n", std::to_string(c.n[0]) + " " + std::to_string(c.n[1]) + " " +
                     std::to_string(c.n[2]));
    kv("grid.length", detail::format_double(c.length[0]) + " " +
                          detail::format_double(c.length[1]) + " " +
                          detail::format_double(c.length[2]));
    const CoefficientSet& s = c.coeffs;
    num("coeffs.beta", s.beta);
    num("coeffs.m", s.m);
    num("coeffs.A", s.A);
    num("coeffs.c0", s.c0);
    num("coeffs.c1", s.c1);
    num("coeffs.a", s.a);
    num("coeffs.c2", s.c2);
    num("coeffs.l", s.l);
    num("coeffs.k", s.k);
    num("coeffs.A0", s.A0);
    num("coeffs.c3", s.c3);
    num("coeffs.c4", s.c4);
    num("coeffs.c5", s.c5);
    num("coeffs.c6", s.c6);
    num("coeffs.cv", s.cv);
    kv("coeffs.mu_family", s.mu_family == MuFamily::blend    ? "blend"
                           : s.mu_family == MuFamily::power ? "power"
                                                            : "linear");
    kv("coeffs.kappa0_family", "constant");
    kv("coeffs.nu_family", s.nu_family == NuFamily::clamp ? "clamp" : "constant");
    kv("coeffs.pe_family", s.pe_family == PeFamily::matched ? "matched" : "power");
    kv("init.profile", c.profile);
    if (!c.snapshot_path.empty()) kv("init.snapshot", c.snapshot_path);
    num("init.rho0", c.rho0);
    num("init.theta0", c.theta0);
    kv("init.u0", detail::format_double(c.u0[0]) + " " + detail::format_double(c.u0[1]) + " " +
                      detail::format_double(c.u0[2]));
    kv("init.H0", detail::format_double(c.H0[0]) + " " + detail::format_double(c.H0[1]) + " " +
                      detail::format_double(c.H0[2]));
    num("init.rho_amp", c.rho_amp);
    num("init.theta_amp", c.theta_amp);
    num("init.u_amp", c.u_amp);
    num("init.H_amp", c.H_amp);
    integer("init.mode_k", c.mode_k);
    num("time.T_final", c.T_final);
    num("time.dt", c.dt);
    num("time.cfl", c.cfl);
    kv("output.dir", c.out_dir);
    integer("output.snapshot_every", c.snapshot_every);
    num("floors.rho", c.rho_floor);
    num("floors.theta", c.theta_floor);
    flag("evolve.rho", c.ev_rho);
    flag("evolve.u", c.ev_u);
    flag("evolve.theta", c.ev_theta);
    flag("evolve.H", c.ev_H);
    integer("run.seed", static_cast<long long>(c.seed));
    num("converge.eps0", c.conv_eps0);
    integer("converge.levels", c.conv_levels);
    num("converge.T", c.conv_T);
    num("converge.dt", c.conv_dt);
    integer("converge.outputs", c.conv_outputs);
    num("converge.max_floor_fraction", c.conv_max_floor_fraction);
    return out;
}

inline std::string config_hash(const RunConfig& c) {
    const std::uint64_t h = fnv1a64(serialize_config(c));
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) buf[i] = hex[(h >> (60 - 4 * i)) & 0xf];
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace bdmhd
