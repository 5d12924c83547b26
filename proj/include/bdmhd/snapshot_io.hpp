#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "bdmhd/grid.hpp"

namespace bdmhd {

// Volume snapshot: little-endian binary, header {magic "MHDE", version u32,
// d u32, dims u32[3], lengths f64[3], time f64}, then rho, u1, u2, u3, theta,
// H1, H2, H3 as contiguous f64 arrays in row-major axis order.
inline constexpr char kSnapshotMagic[4] = {'M', 'H', 'D', 'E'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SnapshotMagicError : SnapshotError {
    using SnapshotError::SnapshotError;
};
struct SnapshotVersionError : SnapshotError {
    using SnapshotError::SnapshotError;
};
struct SnapshotTruncatedError : SnapshotError {
    using SnapshotError::SnapshotError;
};
struct SnapshotDimensionError : SnapshotError {
    using SnapshotError::SnapshotError;
};

namespace detail {

inline void write_raw(std::ofstream& out, const void* p, std::size_t bytes) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

inline void read_raw(std::ifstream& in, void* p, std::size_t bytes, const std::string& path) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
        throw SnapshotTruncatedError("snapshot " + path + ": file ends mid-record");
}

}  // namespace detail

inline void write_snapshot(const FieldState& st, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SnapshotError("snapshot " + path + ": cannot open for writing");
    detail::write_raw(out, kSnapshotMagic, 4);
    const std::uint32_t version = kSnapshotVersion;
    detail::write_raw(out, &version, 4);
    const std::uint32_t d = static_cast<std::uint32_t>(st.grid.d);
    detail::write_raw(out, &d, 4);
    for (int ax = 0; ax < 3; ++ax) {
        const std::uint32_t n = static_cast<std::uint32_t>(st.grid.n[ax]);
        detail::write_raw(out, &n, 4);
    }
    for (int ax = 0; ax < 3; ++ax) detail::write_raw(out, &st.grid.length[ax], 8);
    detail::write_raw(out, &st.time, 8);
    const std::size_t npts = st.grid.npoints();
    auto dump = [&](const Scalar& f) { detail::write_raw(out, f.data(), 8 * npts); };
    dump(st.rho);
    for (int c = 0; c < 3; ++c) dump(st.u[c]);
    dump(st.theta);
    for (int c = 0; c < 3; ++c) dump(st.H[c]);
    out.flush();
    if (!out) throw SnapshotError("snapshot " + path + ": write failed");
}

inline FieldState read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotError("snapshot " + path + ": cannot open for reading");
    char magic[4];
    detail::read_raw(in, magic, 4, path);
    if (std::memcmp(magic, kSnapshotMagic, 4) != 0)
        throw SnapshotMagicError("snapshot " + path + ": bad magic, not a volume snapshot");
    std::uint32_t version = 0;
    detail::read_raw(in, &version, 4, path);
    if (version != kSnapshotVersion)
        throw SnapshotVersionError("snapshot " + path + ": format version " +
                                   std::to_string(version) + ", expected " +
                                   std::to_string(kSnapshotVersion));
    std::uint32_t d = 0;
    detail::read_raw(in, &d, 4, path);
    std::array<std::uint32_t, 3> dims{};
    for (int ax = 0; ax < 3; ++ax) detail::read_raw(in, &dims[ax], 4, path);
    std::array<double, 3> lengths{};
    for (int ax = 0; ax < 3; ++ax) detail::read_raw(in, &lengths[ax], 8, path);
    if (d < 1 || d > 3 || dims[0] == 0 || dims[1] == 0 || dims[2] == 0)
        throw SnapshotDimensionError("snapshot " + path + ": nonsense grid header");

    Grid g;
    try {
        g = Grid::make(static_cast<int>(d),
                       {static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                        static_cast<int>(dims[2])},
                       lengths);
    } catch (const std::invalid_argument& e) {
        throw SnapshotDimensionError("snapshot " + path + ": " + e.what());
    }
    FieldState st = FieldState::zeros(g);
    detail::read_raw(in, &st.time, 8, path);
    const std::size_t npts = g.npoints();
    auto load = [&](Scalar& f) { detail::read_raw(in, f.data(), 8 * npts, path); };
    load(st.rho);
    for (int c = 0; c < 3; ++c) load(st.u[c]);
    load(st.theta);
    for (int c = 0; c < 3; ++c) load(st.H[c]);
    return st;
}

// Read with a grid expectation; a snapshot from a different discretization is
// a dimension error, not silently reinterpreted data.
inline FieldState read_snapshot(const std::string& path, const Grid& expect) {
    FieldState st = read_snapshot(path);
    if (!(st.grid == expect))
        throw SnapshotDimensionError("snapshot " + path +
                                     ": grid does not match the configured run grid");
    return st;
}

}  // namespace bdmhd
