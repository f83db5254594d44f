// File ingestion and export for scattering matrices: a native text format
// with exact round-trip, and a Touchstone v1 S-parameter subset for
// measured data.
#pragma once

#include "bdris/types.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bdris {

namespace detail {

// 17 significant digits: enough for exact double round-trip.
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_complex(Complex c) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gj", c.real(), c.imag());
    return buf;
}

// Parses "re+imj" / "re-imj" (either part may use exponent notation).
inline Complex parse_complex(const std::string& tok, const char* who) {
    const char* p = tok.c_str();
    char* end = nullptr;
    const double re = std::strtod(p, &end);
    if (end == p) throw ParseError(std::string(who) + ": bad complex entry '" + tok + "'");
    const char* q = end;
    const double im = std::strtod(q, &end);
    if (end == q || *end != 'j' || *(end + 1) != '\0')
        throw ParseError(std::string(who) + ": bad complex entry '" + tok + "'");
    return Complex(re, im);
}

} // namespace detail

/// Writes the native text format:
///   smatrix v1 n=<N> z0=<ohms>
/// followed by N rows of N entries "re+imj" at full precision.
inline void write_matrix_file(const SMatrix& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("write_matrix_file: cannot open " + path.string());
    out << "smatrix v1 n=" << s.ports() << " z0=" << detail::format_double(s.z0()) << "\n";
    for (Index i = 0; i < s.ports(); ++i) {
        for (Index j = 0; j < s.ports(); ++j) {
            if (j) out << ' ';
            out << detail::format_complex(s(i, j));
        }
        out << '\n';
    }
    if (!out) throw ParseError("write_matrix_file: write failed for " + path.string());
}

inline SMatrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("read_matrix_file: cannot open " + path.string());
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic, version, nfield, zfield;
    hs >> magic >> version >> nfield >> zfield;
    if (magic != "smatrix" || version != "v1" || nfield.rfind("n=", 0) != 0 ||
        zfield.rfind("z0=", 0) != 0)
        throw ParseError("read_matrix_file: bad header '" + header + "'");
    const long n = std::strtol(nfield.c_str() + 2, nullptr, 10);
    const double z0 = std::strtod(zfield.c_str() + 3, nullptr);
    if (n < 1) throw ParseError("read_matrix_file: bad port count in header");
    CMatrix m(n, n);
    std::string tok;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (!(in >> tok)) throw ParseError("read_matrix_file: truncated data");
            m(i, j) = detail::parse_complex(tok, "read_matrix_file");
        }
    return SMatrix(std::move(m), z0);
}

namespace detail {

struct TouchstoneOptions {
    double freq_scale = 1e9; // GHz default
    enum class Format { RI, MA, DB } format = Format::MA;
    double z0 = 50.0;
};

inline std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

// Option line: "# <unit> <type> <format> R <z0>", every field optional,
// defaults GHz / S / MA / 50. Only S-parameters are accepted.
inline TouchstoneOptions parse_option_line(const std::string& line) {
    TouchstoneOptions opt;
    std::istringstream is(line.substr(1));
    std::string tok;
    bool want_resistance = false;
    while (is >> tok) {
        const std::string u = upper(tok);
        if (want_resistance) {
            char* end = nullptr;
            opt.z0 = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || opt.z0 <= 0.0)
                throw ParseError("read_touchstone: bad reference resistance '" + tok + "'");
            want_resistance = false;
        } else if (u == "HZ") {
            opt.freq_scale = 1.0;
        } else if (u == "KHZ") {
            opt.freq_scale = 1e3;
        } else if (u == "MHZ") {
            opt.freq_scale = 1e6;
        } else if (u == "GHZ") {
            opt.freq_scale = 1e9;
        } else if (u == "S") {
            // S-parameters: the only supported type
        } else if (u == "Y" || u == "Z" || u == "G" || u == "H") {
            throw ParseError("read_touchstone: only S-parameter files are supported (got '" +
                             tok + "')");
        } else if (u == "RI") {
            opt.format = TouchstoneOptions::Format::RI;
        } else if (u == "MA") {
            opt.format = TouchstoneOptions::Format::MA;
        } else if (u == "DB") {
            opt.format = TouchstoneOptions::Format::DB;
        } else if (u == "R") {
            want_resistance = true;
        } else {
            throw ParseError("read_touchstone: malformed option line token '" + tok + "'");
        }
    }
    if (want_resistance)
        throw ParseError("read_touchstone: option line 'R' without a resistance value");
    return opt;
}

inline Complex touchstone_value(double a, double b, TouchstoneOptions::Format f) {
    constexpr double deg = kPi / 180.0;
    switch (f) {
        case TouchstoneOptions::Format::RI: return Complex(a, b);
        case TouchstoneOptions::Format::MA: return std::polar(a, b * deg);
        case TouchstoneOptions::Format::DB: return std::polar(std::pow(10.0, a / 20.0), b * deg);
    }
    return {};
}

} // namespace detail

/// Reads a Touchstone v1 S-parameter file (.sNp) and returns the matrix
/// at the data frequency nearest the requested one (no interpolation).
/// The port count comes from the file extension; RI, MA and DB formats
/// and the option-line frequency unit and reference resistance are
/// honored. 2-port files use the v1 ordering S11 S21 S12 S22.
inline SMatrix read_touchstone(const std::filesystem::path& path, double frequency_hz) {
    // Port count from the ".sNp" extension.
    const std::string ext = detail::upper(path.extension().string());
    long nports = 0;
    if (ext.size() >= 4 && ext[0] == '.' && ext[1] == 'S' && ext.back() == 'P')
        nports = std::strtol(ext.c_str() + 2, nullptr, 10);
    if (nports < 1)
        throw ParseError("read_touchstone: cannot determine port count from extension of " +
                         path.string());

    std::ifstream in(path);
    if (!in) throw ParseError("read_touchstone: cannot open " + path.string());

    detail::TouchstoneOptions opt;
    bool have_options = false;
    std::vector<double> numbers;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto bang = line.find('!'); bang != std::string::npos)
            line.erase(bang);
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            if (!have_options) {
                opt = detail::parse_option_line(line.substr(first));
                have_options = true;
            }
            continue;
        }
        std::istringstream is(line);
        std::string tok;
        while (is >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0')
                throw ParseError("read_touchstone: bad numeric token '" + tok + "'");
            numbers.push_back(v);
        }
    }

    const std::size_t block = 1 + 2 * static_cast<std::size_t>(nports) * static_cast<std::size_t>(nports);
    if (numbers.empty()) throw ParseError("read_touchstone: no data in " + path.string());
    if (numbers.size() % block != 0)
        throw ParseError("read_touchstone: truncated data (expected multiples of " +
                         std::to_string(block) + " values per frequency point)");

    const std::size_t n_points = numbers.size() / block;
    std::size_t best = 0;
    double best_dist = std::abs(numbers[0] * opt.freq_scale - frequency_hz);
    for (std::size_t p = 1; p < n_points; ++p) {
        const double d = std::abs(numbers[p * block] * opt.freq_scale - frequency_hz);
        if (d < best_dist) {
            best = p;
            best_dist = d;
        }
    }

    const double* v = numbers.data() + best * block + 1;
    CMatrix m(nports, nports);
    if (nports == 2) {
        // v1 2-port ordering: S11 S21 S12 S22.
        m(0, 0) = detail::touchstone_value(v[0], v[1], opt.format);
        m(1, 0) = detail::touchstone_value(v[2], v[3], opt.format);
        m(0, 1) = detail::touchstone_value(v[4], v[5], opt.format);
        m(1, 1) = detail::touchstone_value(v[6], v[7], opt.format);
    } else {
        for (Index i = 0; i < nports; ++i)
            for (Index j = 0; j < nports; ++j) {
                m(i, j) = detail::touchstone_value(v[0], v[1], opt.format);
                v += 2;
            }
    }
    return SMatrix(std::move(m), opt.z0);
}

} // namespace bdris
