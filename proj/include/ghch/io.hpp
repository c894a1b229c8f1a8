#pragma once

// trace.csv / picard.csv writers and the GHCH snapshot format.
//
// Snapshot layout (little-endian):
//   offset 0   4 bytes  magic "GHCH"
//   offset 4   u32      format version (= 1)
//   offset 8   u64      N
//   offset 16  f64 x 4  L, m, s, t
//   offset 48  f64 x N  samples

#include "ghch/energy.hpp"
#include "ghch/error.hpp"
#include "ghch/spectral.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace ghch {

/// Shortest-free fixed format: 17 significant digits.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

/// Writes `path` (columns t,Hs,Es,lambda_fit,bound_ok) and picard.csv
/// (columns n,distance) next to it.
inline void write_trace(const EnergyTrace& tr, std::span<const double> picard_history,
                        const std::filesystem::path& path) {
    std::string csv = "t,Hs,Es,lambda_fit,bound_ok\n";
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        csv += format_double(tr.times[k]) + ',' + format_double(tr.Hs[k]) + ',' + format_double(tr.Es[k]) + ',' +
               format_double(tr.lambda_fit) + ',' + (tr.bound_ok ? "1" : "0") + '\n';
    }
    detail::write_text(path, csv);

    std::string pic = "n,distance\n";
    for (std::size_t n = 0; n < picard_history.size(); ++n)
        pic += std::to_string(n) + ',' + format_double(picard_history[n]) + '\n';
    detail::write_text(path.parent_path() / "picard.csv", pic);
}

struct SnapshotMeta {
    double m = 1.0;
    double s = 3.0;
};

struct Snapshot {
    Field field;
    double t;
    SnapshotMeta meta;
};

inline constexpr std::array<char, 4> kSnapshotMagic{'G', 'H', 'C', 'H'};
inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 48;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <class T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const Field& field, double t, const SnapshotMeta& meta) {
    std::vector<unsigned char> out;
    out.reserve(kSnapshotHeaderBytes + 8 * field.size());
    out.insert(out.end(), kSnapshotMagic.begin(), kSnapshotMagic.end());
    detail::put_le<std::uint32_t>(out, kSnapshotVersion);
    detail::put_le<std::uint64_t>(out, field.size());
    for (double v : {field.grid().length(), meta.m, meta.s, t}) detail::put_le<double>(out, v);
    for (double v : field.values()) detail::put_le<double>(out, v);
    return out;
}

inline Snapshot decode_snapshot(std::span<const unsigned char> bytes, const std::string& name = "<buffer>") {
    if (bytes.size() < 8) throw FormatError(name + ": truncated snapshot header");
    if (std::memcmp(bytes.data(), kSnapshotMagic.data(), 4) != 0) throw FormatError(name + ": bad magic");
    const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
    if (version != kSnapshotVersion)
        throw FormatError(name + ": unsupported snapshot version " + std::to_string(version));
    if (bytes.size() < kSnapshotHeaderBytes) throw FormatError(name + ": truncated snapshot header");
    const auto n = detail::get_le<std::uint64_t>(bytes.data() + 8);
    if (n > (bytes.size() - kSnapshotHeaderBytes) / 8 || bytes.size() != kSnapshotHeaderBytes + 8 * n)
        throw FormatError(name + ": truncated or oversized sample block for N=" + std::to_string(n));
    const double L = detail::get_le<double>(bytes.data() + 16);
    SnapshotMeta meta{detail::get_le<double>(bytes.data() + 24), detail::get_le<double>(bytes.data() + 32)};
    const double t = detail::get_le<double>(bytes.data() + 40);
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = detail::get_le<double>(bytes.data() + kSnapshotHeaderBytes + 8 * j);
    try {
        return Snapshot{Field(make_grid(n, L), std::move(v)), t, meta};
    } catch (const ContractViolation& e) {
        throw FormatError(name + ": invalid grid in snapshot: " + e.what());
    }
}

inline void write_snapshot(const Field& field, double t, const SnapshotMeta& meta, const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = encode_snapshot(field, t, meta);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_snapshot(bytes, path.string());
}

}  // namespace ghch
