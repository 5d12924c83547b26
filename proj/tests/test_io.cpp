#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdmhd/config.hpp"
#include "bdmhd/runner.hpp"
#include "bdmhd/snapshot_io.hpp"

namespace fs = std::filesystem;
using namespace bdmhd;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path p =
        fs::temp_directory_path() / ("bdmhd_io_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        if (end == std::string::npos) {
            if (start < s.size()) out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    FAIL("column not found: " << name);
    return 0;
}

const char* kMinimalConfig =
    "grid.d = 1\n"
    "grid.n = 32\n"
    "time.T_final = 0.01\n";

FieldState scrambled_state(const Grid& g, std::uint64_t seed) {
    FieldState st = FieldState::zeros(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (std::size_t p = 0; p < g.npoints(); ++p) {
        st.rho[p] = 1.5 + 0.3 * dist(rng);
        st.theta[p] = 1.0 + 0.2 * dist(rng);
        for (int c = 0; c < 3; ++c) {
            st.u[c][p] = dist(rng);
            st.H[c][p] = dist(rng);
        }
    }
    st.time = 0.625;
    return st;
}

bool scalar_bits_equal(const Scalar& a, const Scalar& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct StreamCapture {
    std::ostringstream out, err;
    std::streambuf* old_out;
    std::streambuf* old_err;
    StreamCapture()
        : old_out(std::cout.rdbuf(out.rdbuf())), old_err(std::cerr.rdbuf(err.rdbuf())) {}
    ~StreamCapture() {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
    }
};

int run_cli(std::initializer_list<const char*> args, std::string* err_text = nullptr) {
    std::vector<const char*> argv{"bdmhd"};
    argv.insert(argv.end(), args.begin(), args.end());
    StreamCapture cap;
    const int code = cli(static_cast<int>(argv.size()), argv.data());
    if (err_text) *err_text = cap.err.str();
    return code;
}

}  // namespace

TEST_CASE("config parse fills documented defaults") {
    const RunConfig cfg = parse_config(kMinimalConfig);
    CHECK(cfg.d == 1);
    CHECK(cfg.n == std::array<int, 3>{32, 1, 1});
    CHECK(cfg.length[0] == Catch::Approx(kTwoPi));
    CHECK(cfg.T_final == 0.01);
    CHECK(cfg.dt == 0.0);
    CHECK(cfg.cfl == 0.4);
    CHECK(cfg.profile == "constant");
    CHECK(cfg.rho0 == 1.0);
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.snapshot_every == 0);
    CHECK(cfg.rho_floor == 1e-8);
    CHECK(cfg.theta_floor == 1e-8);
    CHECK(cfg.coeffs.beta == 0.8);
    CHECK(cfg.coeffs.mu_family == MuFamily::blend);
    CHECK(cfg.ev_rho);
    CHECK(cfg.ev_H);
    CHECK(cfg.conv_levels == 4);
    CHECK(cfg.conv_outputs == 9);
}

TEST_CASE("config parse reads every section") {
    const RunConfig cfg = parse_config(
        "grid.d = 3\n"
        "grid.n = 64 4 4\n"
        "grid.length = 6.283185307179586 1.0 2.0\n"
        "coeffs.beta = 0.75   # viscosity growth exponent\n"
        "coeffs.mu_family = power\n"
        "coeffs.nu_family = constant\n"
        "coeffs.pe_family = power\n"
        "coeffs.c6 = 0.25\n"
        "init.profile = smooth1d\n"
        "init.rho0 = 1.4\n"
        "init.u0 = 0.1 0.2 0.3\n"
        "init.mode_k = 2\n"
        "time.T_final = 0.5\n"
        "time.dt = 2e-4\n"
        "time.cfl = 0.25\n"
        "output.dir = /tmp/somewhere\n"
        "output.snapshot_every = 25\n"
        "floors.rho = 1e-6\n"
        "evolve.u = false\n"
        "run.seed = 42\n"
        "converge.levels = 3\n"
        "converge.T = 0.0\n");
    CHECK(cfg.d == 3);
    CHECK(cfg.n == std::array<int, 3>{64, 4, 4});
    CHECK(cfg.length[1] == 1.0);
    CHECK(cfg.coeffs.beta == 0.75);
    CHECK(cfg.coeffs.mu_family == MuFamily::power);
    CHECK(cfg.coeffs.nu_family == NuFamily::constant);
    CHECK(cfg.coeffs.pe_family == PeFamily::power);
    CHECK(cfg.coeffs.c6 == 0.25);
    CHECK(cfg.profile == "smooth1d");
    CHECK(cfg.rho0 == 1.4);
    CHECK(cfg.u0 == std::array<double, 3>{0.1, 0.2, 0.3});
    CHECK(cfg.mode_k == 2);
    CHECK(cfg.T_final == 0.5);
    CHECK(cfg.dt == 2e-4);
    CHECK(cfg.cfl == 0.25);
    CHECK(cfg.out_dir == "/tmp/somewhere");
    CHECK(cfg.snapshot_every == 25);
    CHECK(cfg.rho_floor == 1e-6);
    CHECK_FALSE(cfg.ev_u);
    CHECK(cfg.ev_theta);
    CHECK(cfg.seed == 42);
    CHECK(cfg.conv_levels == 3);
    CHECK(cfg.conv_T == 0.0);
}

TEST_CASE("unknown keys are rejected with their line number") {
    const std::string text =
        "grid.d = 1\n"
        "grid.n = 32\n"
        "# comment line\n"
        "grid.resolution = 64\n"
        "time.T_final = 0.01\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 4") != std::string::npos);
        CHECK(msg.find("grid.resolution") != std::string::npos);
    }
}

TEST_CASE("viscosity exponent outside its admissible interval fails at parse") {
    const std::string text =
        "grid.d = 1\n"
        "grid.n = 32\n"
        "coeffs.beta = 0.5\n"
        "time.T_final = 0.01\n";
    try {
        parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("(2/3, 1)") != std::string::npos);
    }
}

TEST_CASE("type mismatches carry line numbers") {
    try {
        parse_config("grid.d = 1\ngrid.n = many\ntime.T_final = 0.01\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("grid.n") != std::string::npos);
    }
    try {
        parse_config("grid.d = 1\ngrid.n = 32\ntime.T_final = 0.01\nevolve.u = maybe\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("duplicate keys are rejected") {
    try {
        parse_config("grid.d = 1\ngrid.n = 32\ngrid.n = 64\ntime.T_final = 0.01\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("already set on line 2") != std::string::npos);
    }
}

TEST_CASE("missing required keys are named") {
    try {
        parse_config("grid.d = 1\ngrid.n = 32\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("time.T_final") != std::string::npos);
    }
}

TEST_CASE("serialized config reparses equal and hashes stably") {
    const RunConfig cfg = parse_config(
        "grid.d = 2\n"
        "grid.n = 32 16\n"
        "init.profile = multimode\n"
        "init.H_amp = 0.05\n"
        "time.T_final = 0.25\n"
        "time.dt = 1e-3\n");
    const std::string canon = serialize_config(cfg);
    const RunConfig again = parse_config(canon);
    CHECK(cfg == again);
    CHECK(serialize_config(again) == canon);
    CHECK(config_hash(cfg) == config_hash(again));

    // comments, blank lines, and key order wash out of the hash
    const RunConfig variant = parse_config(
        "# reordered with commentary\n"
        "time.dt = 1e-3\n"
        "\n"
        "time.T_final = 0.25\n"
        "init.H_amp = 0.05   # trailing note\n"
        "init.profile = multimode\n"
        "grid.n = 32 16\n"
        "grid.d = 2\n");
    CHECK(variant == cfg);
    CHECK(config_hash(variant) == config_hash(cfg));
}

TEST_CASE("config hash tracks semantic changes only") {
    RunConfig a = parse_config(kMinimalConfig);
    RunConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.theta0 = 1.0000001;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    b.coeffs.nu_family = NuFamily::constant;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("snapshot round-trip is bit-identical") {
    const fs::path dir = fresh_dir("roundtrip");
    const Grid g = Grid::make(2, {16, 8, 1}, {kTwoPi, kTwoPi, kTwoPi});
    const FieldState st = scrambled_state(g, 7u);
    const std::string path = (dir / "state.bin").string();
    write_snapshot(st, path);

    const FieldState back = read_snapshot(path);
    CHECK(back.grid == g);
    CHECK(back.time == st.time);
    CHECK(scalar_bits_equal(back.rho, st.rho));
    CHECK(scalar_bits_equal(back.theta, st.theta));
    for (int c = 0; c < 3; ++c) {
        CHECK(scalar_bits_equal(back.u[c], st.u[c]));
        CHECK(scalar_bits_equal(back.H[c], st.H[c]));
    }
    CHECK_NOTHROW(read_snapshot(path, g));
}

TEST_CASE("snapshot errors are distinct types") {
    const fs::path dir = fresh_dir("snaperr");
    const Grid g = Grid::make(1, {16, 1, 1}, {kTwoPi, kTwoPi, kTwoPi});
    const FieldState st = scrambled_state(g, 11u);
    const std::string good = (dir / "good.bin").string();
    write_snapshot(st, good);
    const std::string bytes = slurp(good);

    auto write_bytes = [&](const std::string& name, const std::string& content) {
        const std::string p = (dir / name).string();
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out << content;
        return p;
    };

    std::string corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(read_snapshot(write_bytes("magic.bin", corrupt)), SnapshotMagicError);

    corrupt = bytes;
    corrupt[4] = 2;  // version field, little-endian low byte
    CHECK_THROWS_AS(read_snapshot(write_bytes("version.bin", corrupt)), SnapshotVersionError);

    CHECK_THROWS_AS(read_snapshot(write_bytes("short.bin", bytes.substr(0, bytes.size() / 2))),
                    SnapshotTruncatedError);

    const Grid other = Grid::make(1, {32, 1, 1}, {kTwoPi, kTwoPi, kTwoPi});
    CHECK_THROWS_AS(read_snapshot(good, other), SnapshotDimensionError);

    // every failure is also catchable at the family root
    CHECK_THROWS_AS(read_snapshot(write_bytes("magic2.bin", corrupt)), SnapshotError);
}

TEST_CASE("timeseries writer emits one header and one row per record") {
    const fs::path dir = fresh_dir("timeseries");
    const Grid g = Grid::make(1, {32, 1, 1}, {kTwoPi, kTwoPi, kTwoPi});
    const Spectral sp(g);
    const RunConfig cfg = parse_config(kMinimalConfig);
    const Coefficients cf{cfg.coeffs};

    FieldState st = FieldState::zeros(g);
    st.rho = sample_scalar(g, [](double x, double, double) { return 1.3 + 0.1 * std::sin(x); });
    st.theta = sample_scalar(g, [](double x, double, double) { return 1.0 + 0.1 * std::cos(x); });
    st.u[0] = sample_scalar(g, [](double x, double, double) { return 0.1 * std::sin(x); });

    std::vector<DiagnosticRecord> records;
    records.push_back(diagnostic_record(st, cf, sp));
    for (int i = 0; i < 2; ++i) {
        const StepResult r = step_with_quadrature(st, cf, sp, 1e-3);
        const StepWindow w{&st, r.quad, 1e-3, r.floors.total()};
        records.push_back(diagnostic_record(r.state, cf, sp, &w));
        st = r.state;
    }
    const fs::path path = dir / "series.csv";
    write_timeseries(records, path);

    const std::vector<std::string> lines = split(slurp(path), '\n');
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == csv_header());
    const std::vector<std::string> header = split(lines[0], ',');
    for (std::size_t i = 1; i < lines.size(); ++i)
        CHECK(split(lines[i], ',').size() == header.size());

    // numbers survive the trip through text exactly
    const std::size_t bd_col = column_index(header, "bd_functional_eq23");
    const std::vector<std::string> row2 = split(lines[2], ',');
    CHECK(std::strtod(row2[bd_col].c_str(), nullptr) == records[1].bd);
    CHECK(std::strtod(split(lines[1], ',')[0].c_str(), nullptr) == records[0].time);
}

TEST_CASE("initial profiles realize their closed forms") {
    const Grid g = Grid::make(1, {32, 1, 1}, {kTwoPi, kTwoPi, kTwoPi});
    const Spectral sp(g);
    RunConfig cfg = parse_config(kMinimalConfig);

    cfg.profile = "constant";
    cfg.rho0 = 1.7;
    cfg.u0 = {0.1, -0.2, 0.3};
    cfg.H0 = {0.0, 0.4, 0.0};
    FieldState st = make_initial_state(cfg, g);
    CHECK(st.rho[5] == 1.7);
    CHECK(st.u[1][9] == -0.2);
    CHECK(st.H[1][0] == 0.4);
    CHECK(st.time == 0.0);

    cfg = parse_config(kMinimalConfig);
    cfg.profile = "smooth1d";
    st = make_initial_state(cfg, g);
    const std::size_t quarter = g.index(8, 0, 0);  // x = pi/2
    CHECK(st.rho[quarter] == Catch::Approx(cfg.rho0 + cfg.rho_amp).margin(1e-12));
    CHECK(st.theta[quarter] == Catch::Approx(cfg.theta0).margin(1e-12));
    CHECK(st.u[0][quarter] == Catch::Approx(cfg.u_amp).margin(1e-12));
    CHECK(st.H[1][quarter] == Catch::Approx(cfg.H_amp).margin(1e-12));
    CHECK(max_abs(sp.divergence(st.H)) < 1e-12);

    cfg.profile = "single_mode_H";
    cfg.mode_k = 3;
    st = make_initial_state(cfg, g);
    CHECK(st.H[1][g.index(1, 0, 0)] ==
          Catch::Approx(cfg.H_amp * std::sin(3.0 * g.dx(0))).margin(1e-12));
    CHECK(st.H[0][quarter] == 0.0);
    CHECK(st.H[2][quarter] == 0.0);
    CHECK(max_abs(sp.divergence(st.H)) < 1e-12);

    cfg = parse_config(kMinimalConfig);
    cfg.profile = "multimode";
    st = make_initial_state(cfg, g);
    for (std::size_t p = 0; p < g.npoints(); ++p) {
        CHECK(st.rho[p] > 0.0);
        CHECK(st.theta[p] > 0.0);
    }
    CHECK(max_abs(sp.divergence(st.H)) < 1e-12);

    cfg.profile = "smooth1d";
    cfg.rho_amp = 2.0;  // would cross zero
    CHECK_THROWS_AS(make_initial_state(cfg, g), ConfigError);
}

TEST_CASE("runs on the constant state sit at the fixed point") {
    const fs::path dir = fresh_dir("fixedpoint");
    RunConfig cfg = parse_config(
        "grid.d = 1\n"
        "grid.n = 32\n"
        "time.T_final = 0.01\n"
        "time.dt = 1e-3\n");
    cfg.out_dir = dir.string();
    const RunManifest man = run_driver(cfg);

    CHECK(man.status == "completed");
    CHECK(man.step_count == 10);
    CHECK(man.floor_rho_total + man.floor_theta_total == 0);
    for (const std::string& f : man.files) CHECK(fs::exists(dir / f));
    CHECK(man.config_hash == config_hash(parse_config(slurp(dir / "config.cfg"))));

    const std::vector<std::string> lines = split(slurp(dir / "timeseries.csv"), '\n');
    REQUIRE(lines.size() == man.step_count + 2);  // header + t=0 + one per step
    const std::vector<std::string> header = split(lines[0], ',');
    for (const char* col : {"res22_eq22", "res23_eq23", "res13_eq13", "res29_eq29",
                            "res_rho_log_rho_eq212"}) {
        const std::size_t idx = column_index(header, col);
        for (std::size_t r = 1; r < lines.size(); ++r) {
            const double v = std::strtod(split(lines[r], ',')[idx].c_str(), nullptr);
            CHECK(std::abs(v) <= 1e-10);
        }
    }

    const nlohmann::json j = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(j["status"] == "completed");
    CHECK(j["step_count"] == 10);
    CHECK(j["final_record"]["time"] == "0.01");
}

TEST_CASE("diagnose reproduces the run byte for byte") {
    const fs::path dir = fresh_dir("diagnose");
    RunConfig cfg = parse_config(
        "grid.d = 1\n"
        "grid.n = 32\n"
        "init.profile = smooth1d\n"
        "time.T_final = 0.008\n"
        "time.dt = 1e-3\n"
        "output.snapshot_every = 3\n");
    cfg.out_dir = dir.string();
    run_driver(cfg);

    const std::size_t rows = diagnose_driver(dir);
    CHECK(rows == 9);
    CHECK(slurp(dir / "diagnose.csv") == slurp(dir / "timeseries.csv"));
}

TEST_CASE("failed runs still leave a manifest with the cause") {
    const fs::path dir = fresh_dir("failure");
    RunConfig cfg = parse_config(
        "grid.d = 1\n"
        "grid.n = 32\n"
        "init.profile = smooth1d\n"
        "time.T_final = 100.0\n"
        "time.dt = 10.0\n");  // far beyond any stable step
    cfg.out_dir = dir.string();
    CHECK_THROWS(run_driver(cfg));

    REQUIRE(fs::exists(dir / "manifest.json"));
    const nlohmann::json j = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(j["status"] == "failed");
    CHECK_FALSE(j["failure"].get<std::string>().empty());
    CHECK(j["config_hash"] == config_hash(cfg));
}

TEST_CASE("resumed runs rejoin the original trajectory exactly") {
    const fs::path dir_a = fresh_dir("resume_a");
    const fs::path dir_b = fresh_dir("resume_b");
    RunConfig cfg = parse_config(
        "grid.d = 1\n"
        "grid.n = 32\n"
        "init.profile = smooth1d\n"
        "time.T_final = 0.02\n"
        "time.dt = 1e-3\n"
        "output.snapshot_every = 10\n");
    cfg.out_dir = dir_a.string();
    const RunManifest man_a = run_driver(cfg);
    CHECK(man_a.step_count == 20);

    RunOptions opt;
    opt.out_dir = dir_b.string();
    opt.resume_snapshot = (dir_a / "snapshot_00000010.bin").string();
    const RunManifest man_b = run_driver(cfg, opt);
    CHECK(man_b.step_count == 10);

    CHECK(slurp(dir_a / "snapshot_00000020.bin") == slurp(dir_b / "snapshot_00000010.bin"));

    // resuming at or past the final time is refused
    opt.resume_snapshot = (dir_a / "snapshot_00000020.bin").string();
    opt.out_dir = fresh_dir("resume_c").string();
    CHECK_THROWS_AS(run_driver(cfg, opt), RunnerError);
}

TEST_CASE("stability-bound scheduling lands exactly on the final time") {
    const fs::path dir = fresh_dir("cflsched");
    RunConfig cfg = parse_config(
        "grid.d = 1\n"
        "grid.n = 32\n"
        "init.profile = smooth1d\n"
        "time.T_final = 0.004\n");  // dt unset: stability bound each step
    cfg.out_dir = dir.string();
    const RunManifest man = run_driver(cfg);
    CHECK(man.status == "completed");
    CHECK(man.step_count >= 1);

    const std::vector<std::string> lines = split(slurp(dir / "timeseries.csv"), '\n');
    const double t_last = std::strtod(split(lines.back(), ',')[0].c_str(), nullptr);
    CHECK(t_last == Catch::Approx(cfg.T_final).margin(1e-12));
    REQUIRE(lines.size() == man.step_count + 2);
}

TEST_CASE("convergence driver writes its sectioned report") {
    const fs::path dir = fresh_dir("converge");
    RunConfig cfg = parse_config(
        "grid.d = 1\n"
        "grid.n = 64\n"
        "init.profile = multimode\n"
        "time.T_final = 0.1\n"
        "converge.levels = 3\n"
        "converge.T = 0.0\n");  // frozen dynamics: distances are filter tails
    cfg.out_dir = dir.string();
    std::ostringstream log;
    const ConvergenceReport rep = converge_driver(cfg, log);

    REQUIRE(rep.pairs.size() == 2);
    CHECK(rep.verdicts.rho == "contracting");
    CHECK(log.str().find("convergence verdicts") != std::string::npos);

    const std::string csv = slurp(dir / "converge.csv");
    CHECK(csv.find("# distance proxies") != std::string::npos);
    CHECK(csv.find("pair,0,") != std::string::npos);
    CHECK(csv.find("pair,1,") != std::string::npos);
    CHECK(csv.find("member,2,") != std::string::npos);
    CHECK(csv.find("verdict,rho,contracting") != std::string::npos);
    CHECK(csv.find("verdict,H,") != std::string::npos);
}

TEST_CASE("command line maps outcomes to exit codes") {
    const fs::path dir = fresh_dir("cli");
    const fs::path good = dir / "good.cfg";
    std::ofstream(good) << kMinimalConfig;
    const fs::path weak = dir / "weak.cfg";
    std::ofstream(weak) << "grid.d = 1\ngrid.n = 32\ntime.T_final = 0.01\ncoeffs.l = 5\n";
    const fs::path broken = dir / "broken.cfg";
    std::ofstream(broken) << "grid.d = 1\ngrid.n = 32\ntime.T_final = 0.01\ncoeffs.beta = 0.5\n";

    const std::string good_path = good.string();
    const std::string weak_path = weak.string();
    const std::string broken_path = broken.string();

    CHECK(run_cli({"validate-coeffs", good_path.c_str()}) == 0);
    CHECK(run_cli({"validate-coeffs", weak_path.c_str()}) == 1);
    CHECK(run_cli({"validate-coeffs", broken_path.c_str()}) == 2);
    CHECK(run_cli({"--help"}) == 0);

    std::string err;
    CHECK(run_cli({"run", "--bogus"}, &err) == 2);
    CHECK(err.find("usage:") != std::string::npos);
    CHECK(run_cli({"frobnicate", good_path.c_str()}, &err) == 2);
    CHECK(err.find("unknown subcommand") != std::string::npos);
    CHECK(run_cli({"run"}, &err) == 2);
    CHECK(run_cli({"diagnose", (dir / "nowhere").string().c_str()}, &err) == 1);

    const fs::path out = dir / "run_out";
    CHECK(run_cli({"run", good_path.c_str(), "--out", out.string().c_str()}) == 0);
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(run_cli({"diagnose", out.string().c_str()}) == 0);
    CHECK(slurp(out / "diagnose.csv") == slurp(out / "timeseries.csv"));
}
