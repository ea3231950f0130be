#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "mfpart/errors.hpp"
#include "mfpart/ingest.hpp"

namespace mfpart {

// Binary column layout: "MFVOL001", u64 count, count x f64, all little-endian.
inline constexpr std::string_view kVolatilityMagic = "MFVOL001";

namespace detail {

inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

template <class T>
void put_le(std::ostream& os, T value) {
    static_assert(sizeof(T) == 8);
    std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    os.write(bytes.data(), 8);
}

inline std::uint64_t get_le_u64(const char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
}

}  // namespace detail

/// Writes `bin_start_timestamp,v`. Series without wall-clock bins write the
/// bin index in the timestamp column.
inline void write_volatility_csv(std::ostream& os, const VolatilitySeries& series) {
    os << "bin_start_timestamp,v\n";
    const bool timed = series.bin_starts.size() == series.values.size();
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (timed)
            os << format_timestamp(series.bin_starts[i]);
        else
            os << i;
        os << ',' << detail::format_double(series.values[i]) << '\n';
    }
}

inline void write_volatility_binary(std::ostream& os, const VolatilitySeries& series) {
    os.write(kVolatilityMagic.data(), static_cast<std::streamsize>(kVolatilityMagic.size()));
    detail::put_le(os, static_cast<std::uint64_t>(series.values.size()));
    for (double v : series.values) detail::put_le(os, v);
}

inline VolatilitySeries parse_volatility_binary(std::string_view bytes, std::string instrument_id = {}) {
    if (bytes.size() < 16 || bytes.substr(0, 8) != kVolatilityMagic) throw FormatError("missing MFVOL001 header");
    const std::uint64_t n = detail::get_le_u64(bytes.data() + 8);
    if (n > (bytes.size() - 16) / 8 || bytes.size() != 16 + n * 8)
        throw FormatError("binary volatility length does not match payload size");
    VolatilitySeries out;
    out.instrument_id = std::move(instrument_id);
    out.values.resize(n);
    for (std::uint64_t i = 0; i < n; ++i)
        out.values[i] = std::bit_cast<double>(detail::get_le_u64(bytes.data() + 16 + 8 * i));
    out.day_boundaries = {0};
    return out;
}

inline VolatilitySeries parse_volatility_csv(std::string_view text, std::string instrument_id = {}) {
    VolatilitySeries out;
    out.instrument_id = std::move(instrument_id);
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "bin_start_timestamp,v")
        throw FormatError("volatility CSV header must be 'bin_start_timestamp,v'");
    bool timed = true;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        double v = 0.0;
        if (fields.size() != 2 || !detail::parse_double(fields[1], v) || !(v >= 0.0))
            throw FormatError("bad volatility row: " + line);
        out.values.push_back(v);
        if (timed) {
            if (auto ts = parse_timestamp(fields[0]))
                out.bin_starts.push_back(*ts);
            else
                timed = false;
        }
    }
    if (!timed) out.bin_starts.clear();
    out.day_boundaries = {0};
    for (std::size_t i = 1; i < out.bin_starts.size(); ++i)
        if (date_of(out.bin_starts[i]) != date_of(out.bin_starts[i - 1])) out.day_boundaries.push_back(i);
    if (out.values.empty()) throw EmptyInputError("volatility CSV has no rows");
    return out;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string instrument_id_from_path(const std::filesystem::path& path) {
    std::string name = path.filename().string();
    for (auto ext : {".gz", ".bin", ".csv", ".vol"})
        if (name.size() > std::string_view(ext).size() && name.ends_with(ext))
            name.resize(name.size() - std::string_view(ext).size());
    return name;
}

/// Loads either volatility format, detected by the binary magic.
inline VolatilitySeries read_volatility_file(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    const std::string id = instrument_id_from_path(path);
    if (std::string_view(bytes).substr(0, 8) == kVolatilityMagic) return parse_volatility_binary(bytes, id);
    return parse_volatility_csv(bytes, id);
}

/// Writes binary when the path ends in `.bin`, CSV otherwise.
inline void write_volatility_file(const std::filesystem::path& path, const VolatilitySeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    if (path.extension() == ".bin")
        write_volatility_binary(out, series);
    else
        write_volatility_csv(out, series);
}

}  // namespace mfpart
