#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "srs/bloch.hpp"

namespace srs {

enum class MapSpace { angular, spatial };

/// Uniform Cartesian detector lattice, pixel centers at
/// (-half + (i+1/2) step, -half + (j+1/2) step), row-major index j*n + i.
struct MapGrid {
    MapSpace space = MapSpace::angular;
    double half_extent = 0; // rad (angular) or m (spatial)
    int n = 0;              // pixels per side
    double z_d = 0;         // defocus, spatial maps only
    bool zernike = false;

    double step() const { return 2.0 * half_extent / n; }
    double coord(int i) const { return -half_extent + (i + 0.5) * step(); }
    std::size_t size() const { return (std::size_t)n * (std::size_t)n; }
    double pixel_area() const { return step() * step(); }

    bool same_geometry(const MapGrid& o) const
    {
        return space == o.space && n == o.n && half_extent == o.half_extent && z_d == o.z_d;
    }
};

/// First-order probability decomposition on a detector grid:
///   P(pixel; s) = p0 + cx*s_x + cy*s_y
/// The sigma_z coefficient vanishes identically for azimuthally symmetric
/// beams, so it is not stored.
struct ProbabilityMap {
    MapGrid grid;
    std::vector<double> p0, cx, cy;
    double validity_radius = 0; // angular maps: probability unreliable beyond it
    long clipped_pixels = 0;    // pixels where first-order truncation went negative
    double max_negative_fraction = 0; // worst |negative| relative to peak p0

    /// Total density at a pixel for a Bloch vector, clipped at zero.
    double density(std::size_t idx, const BlochState& s) const
    {
        const double v = p0[idx] + cx[idx] * s.s[0] + cy[idx] * s.s[1];
        return v > 0.0 ? v : 0.0;
    }
};

/// Differential signal (driven minus reference): the zero-order term cancels
/// exactly and the result is linear in the transverse Bloch difference.
inline std::vector<double> differential_map(const ProbabilityMap& map, const BlochState& s_drive,
                                            const BlochState& s_ref)
{
    const double dx = s_drive.s[0] - s_ref.s[0];
    const double dy = s_drive.s[1] - s_ref.s[1];
    std::vector<double> out(map.grid.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = map.cx[i] * dx + map.cy[i] * dy;
    return out;
}

inline std::vector<double> differential_map(const ProbabilityMap& driven, const BlochState& s_drive,
                                            const ProbabilityMap& reference, const BlochState& s_ref)
{
    if (!driven.grid.same_geometry(reference.grid))
        throw std::invalid_argument("differential_map: grid mismatch");
    std::vector<double> out(driven.grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (driven.p0[i] + driven.cx[i] * s_drive.s[0] + driven.cy[i] * s_drive.s[1]) -
                 (reference.p0[i] + reference.cx[i] * s_ref.s[0] + reference.cy[i] * s_ref.s[1]);
    }
    return out;
}

} // namespace srs
