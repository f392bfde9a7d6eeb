#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srs/map.hpp"

// Deterministic CSV / 16-bit PGM output. All number formatting goes through
// one round-trip-exact printf path so identical runs produce identical bytes.

namespace srs::io {

inline std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ofstream out;

    CsvWriter(const std::string& path, const std::vector<std::string>& columns)
        : out(path, std::ios::binary)
    {
        if (!out)
            throw std::runtime_error("cannot open " + path);
        for (std::size_t i = 0; i < columns.size(); ++i)
            out << (i ? "," : "") << columns[i];
        out << "\n";
    }

    void row(const std::vector<double>& values)
    {
        for (std::size_t i = 0; i < values.size(); ++i)
            out << (i ? "," : "") << fmt(values[i]);
        out << "\n";
    }
};

struct PgmWindow {
    double lo = 0, hi = 0; // data values mapped to 0 and 65535
};

/// Big-endian 16-bit PGM with linear min-max scaling; the window used goes
/// into the run manifest so raw values stay recoverable.
inline PgmWindow write_pgm16(const std::string& path, const std::vector<double>& data, int n)
{
    if ((std::size_t)n * n != data.size())
        throw std::invalid_argument("write_pgm16: size mismatch");
    PgmWindow win{data[0], data[0]};
    for (double v : data) {
        win.lo = std::min(win.lo, v);
        win.hi = std::max(win.hi, v);
    }
    const double span = (win.hi > win.lo) ? (win.hi - win.lo) : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path);
    out << "P5\n" << n << " " << n << "\n65535\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(data.size() * 2);
    // raster rows top to bottom: flip j so +y points up in the image
    for (int j = n - 1; j >= 0; --j) {
        for (int i = 0; i < n; ++i) {
            const double v = data[(std::size_t)j * n + i];
            const auto q = (std::uint16_t)std::lround((v - win.lo) / span * 65535.0);
            bytes.push_back((unsigned char)(q >> 8));
            bytes.push_back((unsigned char)(q & 0xff));
        }
    }
    out.write((const char*)bytes.data(), (std::streamsize)bytes.size());
    return win;
}

/// Map export, coordinates in presentation units (urad or Angstrom),
/// densities in SI (per steradian or per m^2).
inline void write_map_csv(const std::string& path, const ProbabilityMap& map)
{
    const bool angular = map.grid.space == MapSpace::angular;
    const double unit = angular ? 1e6 : 1e10;
    CsvWriter csv(path, angular
                            ? std::vector<std::string>{"theta_x_urad", "theta_y_urad", "p0", "cx", "cy"}
                            : std::vector<std::string>{"x_angstrom", "y_angstrom", "p0", "cx", "cy"});
    for (int j = 0; j < map.grid.n; ++j)
        for (int i = 0; i < map.grid.n; ++i) {
            const std::size_t idx = (std::size_t)j * map.grid.n + i;
            csv.row({map.grid.coord(i) * unit, map.grid.coord(j) * unit, map.p0[idx], map.cx[idx],
                     map.cy[idx]});
        }
}

inline std::uint64_t fnv1a64(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace srs::io
