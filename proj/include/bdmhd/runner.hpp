#pragma once

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdmhd/config.hpp"
#include "bdmhd/constitutive.hpp"
#include "bdmhd/convergence.hpp"
#include "bdmhd/diagnostics.hpp"
#include "bdmhd/dynamics.hpp"
#include "bdmhd/snapshot_io.hpp"

namespace bdmhd {

inline constexpr const char* kCodeVersion = "bdmhd 1.0.0";

struct RunnerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed-form initial data. Every profile varies along x only, which keeps
// the magnetic field divergence-free by construction (no x component, or a
// uniform one), and stays meaningful in 1, 2, or 3 active dimensions.
inline FieldState make_initial_state(const RunConfig& cfg, const Grid& g) {
    if (cfg.profile == "snapshot") {
        FieldState st = read_snapshot(cfg.snapshot_path, g);
        st.time = 0.0;  // snapshot used as fresh initial data, not a resume
        for (double v : st.rho)
            if (!(v > 0.0)) throw ConfigError("init.snapshot: density must be positive");
        for (double v : st.theta)
            if (!(v > 0.0)) throw ConfigError("init.snapshot: temperature must be positive");
        return st;
    }
    FieldState st = FieldState::zeros(g);
    const double kx = kTwoPi * cfg.mode_k / g.length[0];
    auto fill = [&](auto rho_f, auto theta_f, auto u_f, auto H_f) {
        for (int i = 0; i < g.n[0]; ++i)
            for (int j = 0; j < g.n[1]; ++j)
                for (int k = 0; k < g.n[2]; ++k) {
                    const std::size_t p = g.index(i, j, k);
                    const double x = kx * (i * g.dx(0));
                    st.rho[p] = rho_f(x);
                    st.theta[p] = theta_f(x);
                    const auto uv = u_f(x);
                    const auto Hv = H_f(x);
                    for (int c = 0; c < 3; ++c) {
                        st.u[c][p] = uv[c];
                        st.H[c][p] = Hv[c];
                    }
                }
    };
    using A3 = std::array<double, 3>;
    if (cfg.profile == "constant") {
        fill([&](double) { return cfg.rho0; }, [&](double) { return cfg.theta0; },
             [&](double) { return cfg.u0; }, [&](double) { return cfg.H0; });
    } else if (cfg.profile == "smooth1d") {
        fill([&](double x) { return cfg.rho0 + cfg.rho_amp * std::sin(x); },
             [&](double x) { return cfg.theta0 + cfg.theta_amp * std::cos(x); },
             [&](double x) {
                 return A3{cfg.u_amp * std::sin(x), (2.0 / 3.0) * cfg.u_amp * std::cos(x),
                           (1.0 / 3.0) * cfg.u_amp * std::sin(x)};
             },
             [&](double x) {
                 return A3{0.0, cfg.H_amp * std::sin(x), 0.75 * cfg.H_amp * std::cos(x)};
             });
    } else if (cfg.profile == "single_mode_H") {
        fill([&](double) { return cfg.rho0; }, [&](double) { return cfg.theta0; },
             [&](double) { return cfg.u0; },
             [&](double x) { return A3{0.0, cfg.H_amp * std::sin(x), 0.0}; });
    } else if (cfg.profile == "multimode") {
        // analytic but spectrally broad: exp(trig) excites every harmonic
        const double inv_e = 1.0 / std::exp(1.0);
        fill([&](double x) { return cfg.rho0 + cfg.rho_amp * std::exp(std::sin(x)) * inv_e; },
             [&](double x) { return cfg.theta0 + cfg.theta_amp * std::exp(std::cos(x)) * inv_e; },
             [&](double x) {
                 return A3{cfg.u_amp * std::exp(std::sin(x)) * inv_e,
                           0.5 * cfg.u_amp * std::cos(x), 0.0};
             },
             [&](double x) {
                 return A3{0.0, cfg.H_amp * std::exp(std::cos(x)) * inv_e,
                           0.5 * cfg.H_amp * std::sin(x)};
             });
    } else {
        throw ConfigError("init.profile '" + cfg.profile + "' does not name a known profile");
    }
    for (double v : st.rho)
        if (!(v > 0.0)) throw ConfigError("initial density must be positive; lower init.rho_amp");
    for (double v : st.theta)
        if (!(v > 0.0))
            throw ConfigError("initial temperature must be positive; lower init.theta_amp");
    return st;
}

inline void write_timeseries(const std::vector<DiagnosticRecord>& records,
                             const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RunnerError("cannot open " + path.string() + " for writing");
    out << csv_header() << '\n';
    for (const DiagnosticRecord& rec : records) out << csv_row(rec) << '\n';
    out.flush();
    if (!out) throw RunnerError("write failed for " + path.string());
}

// Audit sidecar for a run directory. Written on completion and on
// failure alike, so a crashed run still records what it was and why it died.
struct RunManifest {
    std::string config_hash;
    std::string code_version = kCodeVersion;
    std::string start_time;
    std::string end_time;
    std::string status = "failed";
    std::string failure;
    std::size_t step_count = 0;
    std::size_t floor_rho_total = 0;
    std::size_t floor_theta_total = 0;
    std::vector<std::pair<std::string, std::string>> final_record;  // column, value
    std::vector<std::string> files;
};

namespace detail {

inline std::string iso8601_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::vector<std::pair<std::string, std::string>> record_summary(
    const DiagnosticRecord& rec) {
    const std::string row = csv_row(rec);
    std::vector<std::pair<std::string, std::string>> out;
    const auto& cols = csv_columns();
    std::size_t start = 0, col = 0;
    while (col < cols.size()) {
        std::size_t end = row.find(',', start);
        if (end == std::string::npos) end = row.size();
        out.emplace_back(cols[col], row.substr(start, end - start));
        start = end + 1;
        ++col;
    }
    return out;
}

inline std::string snapshot_name(std::size_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%08zu.bin", step);
    return buf;
}

// Step size the run loop uses: the configured fixed step, or the stability
// bound recomputed from the current state, clipped to land exactly on T_final.
inline double scheduled_dt(const FieldState& st, const Coefficients& cf, const RunConfig& cfg) {
    double dt = cfg.dt > 0.0 ? cfg.dt : stable_dt(st, cf, cfg.cfl);
    const double rem = cfg.T_final - st.time;
    if (dt > rem) dt = rem;
    return dt;
}

inline bool run_done(const FieldState& st, const RunConfig& cfg) {
    return cfg.T_final - st.time <= 1e-12 * std::max(1.0, std::abs(cfg.T_final));
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RunnerError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

inline nlohmann::json manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["config_hash"] = m.config_hash;
    j["code_version"] = m.code_version;
    j["start_time"] = m.start_time;
    j["end_time"] = m.end_time;
    j["status"] = m.status;
    j["failure"] = m.failure;
    j["step_count"] = m.step_count;
    j["flooring"] = {{"rho", m.floor_rho_total},
                     {"theta", m.floor_theta_total},
                     {"total", m.floor_rho_total + m.floor_theta_total}};
    nlohmann::json rec = nlohmann::json::object();
    for (const auto& kv : m.final_record) rec[kv.first] = kv.second;
    j["final_record"] = rec;
    j["files"] = m.files;
    return j;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RunnerError("cannot open " + path.string() + " for writing");
    out << manifest_json(m).dump(2) << '\n';
}

struct RunOptions {
    std::string out_dir;          // overrides config output.dir when nonempty
    std::string resume_snapshot;  // continue from this state instead of the profile
};

// Integrates the configured run, streaming one CSV row per step, writing
// snapshots at the configured cadence (always including the first and final
// states), and finishing with a manifest. The manifest is also written when
// the run dies, carrying the failure cause; the original error is rethrown.
inline RunManifest run_driver(const RunConfig& cfg_in, const RunOptions& opt = {}) {
    namespace fs = std::filesystem;
    RunConfig cfg = cfg_in;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    validate_config(cfg);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);

    RunManifest man;
    man.config_hash = config_hash(cfg);
    man.start_time = detail::iso8601_utc_now();

    {
        std::ofstream cfg_out(dir / "config.cfg", std::ios::binary | std::ios::trunc);
        if (!cfg_out) throw RunnerError("cannot write " + (dir / "config.cfg").string());
        cfg_out << serialize_config(cfg);
    }
    man.files.push_back("config.cfg");
    man.files.push_back("manifest.json");

    const Grid g = Grid::make(cfg.d, cfg.n, cfg.length);
    const Coefficients cf{cfg.coeffs};
    const EvolveFlags ev{cfg.ev_rho, cfg.ev_u, cfg.ev_theta, cfg.ev_H};
    const Spectral sp(g);

    try {
        FieldState st = opt.resume_snapshot.empty()
                            ? make_initial_state(cfg, g)
                            : read_snapshot(opt.resume_snapshot, g);
        if (!opt.resume_snapshot.empty() && detail::run_done(st, cfg))
            throw RunnerError("resume snapshot already at or beyond time.T_final");
        const FloorCounts init_floors = apply_floors(st, cfg.rho_floor, cfg.theta_floor);
        man.floor_rho_total += init_floors.rho;
        man.floor_theta_total += init_floors.theta;

        std::ofstream csv(dir / "timeseries.csv", std::ios::binary | std::ios::trunc);
        if (!csv) throw RunnerError("cannot write " + (dir / "timeseries.csv").string());
        man.files.push_back("timeseries.csv");
        csv << csv_header() << '\n';

        DiagnosticRecord rec = diagnostic_record(st, cf, sp);
        csv << csv_row(rec) << '\n';
        write_snapshot(st, dir / detail::snapshot_name(0));
        man.files.push_back(detail::snapshot_name(0));

        std::size_t step_idx = 0, last_snapshot = 0;
        while (!detail::run_done(st, cfg)) {
            const double dt = detail::scheduled_dt(st, cf, cfg);
            StepResult r = step_with_quadrature(st, cf, sp, dt, cfg.rho_floor, cfg.theta_floor,
                                                ev);
            const StepWindow w{&st, r.quad, dt, r.floors.total()};
            rec = diagnostic_record(r.state, cf, sp, &w);
            csv << csv_row(rec) << '\n';
            st = std::move(r.state);
            ++step_idx;
            man.floor_rho_total += r.floors.rho;
            man.floor_theta_total += r.floors.theta;
            const bool due = cfg.snapshot_every > 0 && step_idx % cfg.snapshot_every == 0;
            if (due || detail::run_done(st, cfg)) {
                write_snapshot(st, dir / detail::snapshot_name(step_idx));
                man.files.push_back(detail::snapshot_name(step_idx));
                last_snapshot = step_idx;
            }
        }
        (void)last_snapshot;
        csv.flush();
        if (!csv) throw RunnerError("write failed for " + (dir / "timeseries.csv").string());

        man.step_count = step_idx;
        man.status = "completed";
        man.final_record = detail::record_summary(rec);
        man.end_time = detail::iso8601_utc_now();
        write_manifest(man, dir / "manifest.json");
        return man;
    } catch (const std::exception& e) {
        man.failure = e.what();
        man.end_time = detail::iso8601_utc_now();
        try {
            write_manifest(man, dir / "manifest.json");
        } catch (...) {
            // the original failure is the one worth reporting
        }
        throw;
    }
}

// Recomputes the full time series of a completed run from its stored
// snapshots alone: each inter-snapshot segment is re-integrated from its
// anchor with the same schedule, and the arrival state must match the next
// snapshot bit for bit. Writes diagnose.csv next to the original CSV.
inline std::size_t diagnose_driver(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    const RunConfig cfg = parse_config(detail::read_text_file(dir / "config.cfg"));

    std::vector<std::pair<std::size_t, fs::path>> snaps;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() != 21 || name.rfind("snapshot_", 0) != 0 ||
            name.compare(17, 4, ".bin") != 0)
            continue;
        bool digits = true;
        for (int i = 9; i < 17; ++i)
            digits = digits && name[i] >= '0' && name[i] <= '9';
        if (digits) snaps.emplace_back(std::stoull(name.substr(9, 8)), entry.path());
    }
    if (snaps.empty()) throw RunnerError("no snapshots found in " + dir.string());
    std::sort(snaps.begin(), snaps.end());
    if (snaps.front().first != 0)
        throw RunnerError("diagnose requires the step-0 snapshot");

    const Grid g = Grid::make(cfg.d, cfg.n, cfg.length);
    const Coefficients cf{cfg.coeffs};
    const EvolveFlags ev{cfg.ev_rho, cfg.ev_u, cfg.ev_theta, cfg.ev_H};
    const Spectral sp(g);

    const auto bits_equal = [](const Scalar& a, const Scalar& b) {
        return a.size() == b.size() &&
               std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
    };

    std::ofstream csv(dir / "diagnose.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw RunnerError("cannot write " + (dir / "diagnose.csv").string());
    csv << csv_header() << '\n';

    FieldState st = read_snapshot(snaps.front().second, g);
    csv << csv_row(diagnostic_record(st, cf, sp)) << '\n';
    std::size_t rows = 1;

    for (std::size_t s = 0; s + 1 < snaps.size(); ++s) {
        const std::size_t span = snaps[s + 1].first - snaps[s].first;
        for (std::size_t k = 0; k < span; ++k) {
            const double dt = detail::scheduled_dt(st, cf, cfg);
            StepResult r = step_with_quadrature(st, cf, sp, dt, cfg.rho_floor, cfg.theta_floor,
                                                ev);
            const StepWindow w{&st, r.quad, dt, r.floors.total()};
            csv << csv_row(diagnostic_record(r.state, cf, sp, &w)) << '\n';
            st = std::move(r.state);
            ++rows;
        }
        const FieldState stored = read_snapshot(snaps[s + 1].second, g);
        const bool match = bits_equal(st.rho, stored.rho) && bits_equal(st.theta, stored.theta) &&
                           bits_equal(st.u[0], stored.u[0]) && bits_equal(st.u[1], stored.u[1]) &&
                           bits_equal(st.u[2], stored.u[2]) && bits_equal(st.H[0], stored.H[0]) &&
                           bits_equal(st.H[1], stored.H[1]) && bits_equal(st.H[2], stored.H[2]);
        if (!match)
            throw RunnerError("recomputed state does not match " +
                              snaps[s + 1].second.filename().string() +
                              "; code or config differs from the original run");
    }
    csv.flush();
    if (!csv) throw RunnerError("write failed for " + (dir / "diagnose.csv").string());
    return rows;
}

// Builds the mollification sequence from the configured base profile, runs
// it, and writes a sectioned CSV report plus a verdict block on the stream.
inline ConvergenceReport converge_driver(const RunConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    validate_config(cfg);
    const Grid g = Grid::make(cfg.d, cfg.n, cfg.length);
    const Spectral sp(g);

    SequenceSpec spec;
    spec.base = make_initial_state(cfg, g);
    spec.eps0 = cfg.conv_eps0;
    spec.levels = cfg.conv_levels;
    spec.coeffs = cfg.coeffs;
    spec.T = cfg.conv_T;
    spec.dt = cfg.conv_dt;
    spec.outputs = cfg.conv_outputs;
    spec.rho_floor = cfg.rho_floor;
    spec.theta_floor = cfg.theta_floor;
    spec.max_floor_fraction = cfg.conv_max_floor_fraction;

    const ConvergenceReport rep = run_sequence(spec, sp);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    std::ofstream out(dir / "converge.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw RunnerError("cannot write " + (dir / "converge.csv").string());
    out << "# mollification convergence report\n";
    out << "# levels = " << spec.levels << ", eps0 = " << detail::format_double(spec.eps0)
        << ", T = " << detail::format_double(spec.T)
        << ", outputs per member = " << spec.outputs << '\n';
    out << "# distance proxies: rho sup-in-time L2; momentum L2-in-time L3/2; "
           "theta L2-in-time L3; H L2-in-time L2\n";
    out << "# pair rows: index, d_rho, d_momentum, d_theta, d_H, partial\n";
    for (std::size_t i = 0; i < rep.pairs.size(); ++i) {
        const PairDistances& p = rep.pairs[i];
        out << "pair," << i << ',' << detail::format_double(p.rho) << ','
            << detail::format_double(p.momentum) << ',' << detail::format_double(p.theta) << ','
            << detail::format_double(p.H) << ',' << (p.partial ? 1 : 0) << '\n';
    }
    out << "# member rows: index, cutoff_k, time_modulus, space_modulus, max_abs_H, failed\n";
    for (std::size_t i = 0; i < rep.members.size(); ++i) {
        const MemberSummary& m = rep.members[i];
        out << "member," << i << ','
            << detail::format_double(cutoff_wavenumber(spec, static_cast<int>(i))) << ','
            << detail::format_double(m.moduli.time_modulus) << ','
            << detail::format_double(m.moduli.space_modulus) << ','
            << detail::format_double(m.max_abs_H) << ',' << (m.failed ? 1 : 0) << '\n';
    }
    out << "verdict,rho," << rep.verdicts.rho << '\n';
    out << "verdict,momentum," << rep.verdicts.momentum << '\n';
    out << "verdict,theta," << rep.verdicts.theta << '\n';
    out << "verdict,H," << rep.verdicts.H << '\n';
    out.flush();
    if (!out) throw RunnerError("write failed for " + (dir / "converge.csv").string());

    log << "convergence verdicts: rho " << rep.verdicts.rho << ", momentum "
        << rep.verdicts.momentum << ", theta " << rep.verdicts.theta << ", H " << rep.verdicts.H
        << '\n';
    for (std::size_t i = 0; i < rep.members.size(); ++i)
        if (rep.members[i].failed)
            log << "member " << i << " failed: " << rep.members[i].failure << '\n';
    return rep;
}

namespace detail {

inline const char* kUsage =
    "usage: bdmhd <subcommand> [options]\n"
    "\n"
    "subcommands:\n"
    "  validate-coeffs <config>   check the coefficient family against the\n"
    "                             structural hypotheses; exit 1 on any failure\n"
    "  run <config>               integrate the configured run, writing\n"
    "                             timeseries.csv, snapshots, and manifest.json\n"
    "  diagnose <run-dir>         recompute the time series of a completed run\n"
    "                             from its snapshots into diagnose.csv\n"
    "  converge <config>          drive the mollification convergence study\n"
    "\n"
    "options:\n"
    "  --config <path>   config file (alternative to the positional argument)\n"
    "  --out <dir>       override the configured output directory\n"
    "  --threads <n>     worker threads; affects speed only, never results\n"
    "  --resume <snap>   continue a run from this snapshot file\n"
    "  --help            this text (also per subcommand)\n"
    "\n"
    "exit codes: 0 success; 1 runtime failure (manifest still written);\n"
    "            2 usage or configuration error\n";

struct CliArgs {
    std::string subcommand;
    std::string positional;
    std::string config;
    std::string out;
    std::string resume;
    int threads = 0;
    bool help = false;
};

// Returns false on malformed flags; the caller prints usage and exits 2.
inline bool parse_cli(int argc, const char* const* argv, CliArgs& args, std::string& err) {
    if (argc < 2) {
        err = "missing subcommand";
        return false;
    }
    args.subcommand = argv[1];
    if (args.subcommand == "--help" || args.subcommand == "-h") {
        args.help = true;
        return true;
    }
    for (int i = 2; i < argc; ++i) {
        const std::string a = argv[i];
        auto value = [&](const char* flag) -> std::string {
            if (i + 1 >= argc) {
                err = std::string(flag) + " requires a value";
                return {};
            }
            return argv[++i];
        };
        if (a == "--help" || a == "-h") {
            args.help = true;
        } else if (a == "--config") {
            args.config = value("--config");
            if (!err.empty()) return false;
        } else if (a == "--out") {
            args.out = value("--out");
            if (!err.empty()) return false;
        } else if (a == "--resume") {
            args.resume = value("--resume");
            if (!err.empty()) return false;
        } else if (a == "--threads") {
            const std::string v = value("--threads");
            if (!err.empty()) return false;
            try {
                std::size_t pos = 0;
                const int n = std::stoi(v, &pos);
                if (pos != v.size() || n < 1) throw std::invalid_argument("range");
                args.threads = n;
            } catch (const std::exception&) {
                err = "--threads expects a positive integer, got '" + v + "'";
                return false;
            }
        } else if (!a.empty() && a[0] == '-') {
            err = "unknown flag '" + a + "'";
            return false;
        } else if (args.positional.empty()) {
            args.positional = a;
        } else {
            err = "unexpected extra argument '" + a + "'";
            return false;
        }
    }
    return true;
}

}  // namespace detail

// Entry point behind main. Subcommand dispatch with the documented exit
// codes: 0 success, 1 runtime failure, 2 usage or configuration error.
inline int cli(int argc, const char* const* argv) {
    detail::CliArgs args;
    std::string err;
    if (!detail::parse_cli(argc, argv, args, err)) {
        std::cerr << "error: " << err << "\n\n" << detail::kUsage;
        return 2;
    }
    if (args.help) {
        std::cout << detail::kUsage;
        return 0;
    }
    const std::string& sub = args.subcommand;
    if (sub != "validate-coeffs" && sub != "run" && sub != "diagnose" && sub != "converge") {
        std::cerr << "error: unknown subcommand '" << sub << "'\n\n" << detail::kUsage;
        return 2;
    }
    if (args.threads > 0) ThreadPool::instance().set_threads(args.threads);

    const std::string target = !args.config.empty() ? args.config : args.positional;
    if (target.empty()) {
        std::cerr << "error: " << sub << " needs a "
                  << (sub == "diagnose" ? "run directory" : "config file") << "\n\n"
                  << detail::kUsage;
        return 2;
    }

    try {
        if (sub == "diagnose") {
            const std::size_t rows = diagnose_driver(target);
            std::cout << "diagnose: reproduced " << rows << " rows in " << target
                      << "/diagnose.csv\n";
            return 0;
        }

        RunConfig cfg;
        try {
            cfg = parse_config(detail::read_text_file(target));
        } catch (const ConfigError& e) {
            std::cerr << "config error in " << target << ": " << e.what() << '\n';
            return 2;
        }
        if (!args.out.empty()) cfg.out_dir = args.out;

        if (sub == "validate-coeffs") {
            const HypothesisReport rep = validate_hypotheses(cfg.coeffs, SampleSpec{});
            std::cout << rep.table();
            return rep.all_pass() ? 0 : 1;
        }
        if (sub == "run") {
            RunOptions opt;
            opt.resume_snapshot = args.resume;
            const RunManifest man = run_driver(cfg, opt);
            std::cout << "run: " << man.step_count << " steps, flooring "
                      << (man.floor_rho_total + man.floor_theta_total) << ", outputs in "
                      << cfg.out_dir << '\n';
            return 0;
        }
        // converge
        (void)converge_driver(cfg, std::cout);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace bdmhd
