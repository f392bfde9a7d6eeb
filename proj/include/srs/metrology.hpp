#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "srs/imaging.hpp"
#include "srs/map.hpp"

// Classical Fisher information of the detected intensity with respect to the
// magnetic coupling strength, the resulting shot-noise SNR bounds, and the
// ensemble feasibility arithmetic.

namespace srs {

/// Detector subset over which information is accumulated.
struct Region {
    enum class Kind { disk, square, all };
    Kind kind = Kind::all;
    double size = 0; // disk radius or square half-side

    bool contains(double x, double y) const
    {
        switch (kind) {
        case Kind::disk: return x * x + y * y <= size * size;
        case Kind::square: return std::fabs(x) <= size && std::fabs(y) <= size;
        default: return true;
        }
    }
    static Region disk(double r) { return {Kind::disk, r}; }
    static Region square(double half) { return {Kind::square, half}; }

    std::string describe() const
    {
        char buf[48];
        switch (kind) {
        case Kind::disk:
            std::snprintf(buf, sizeof buf, "disk r<=%.6g", size);
            return buf;
        case Kind::square:
            std::snprintf(buf, sizeof buf, "square half=%.6g", size);
            return buf;
        default: return "full grid";
        }
    }
};

/// Published semiclassical diffraction-mode information limits for a
/// hydrogen-1s spin density (slowly-varying-envelope treatment). Stored as
/// external reference constants; never recomputed here.
inline constexpr double svea_cfi_limit_broad = 4.64e-14;
inline constexpr double svea_cfi_limit_dr_8p92_a0 = 1.37e-10;

inline constexpr double default_beam_current = 1.6e-9; // A
inline constexpr double default_electron_count = 1e10; // ~1 s at 1.6 nA

struct CfiReport {
    double mu_b2_cfi = 0; // dimensionless muB^2 * CFI
    std::string region;
    double detected_fraction = 0;    // zero-order probability captured by the region
    double snr_bound_per_sqrt_s = 0; // Cramer-Rao bound at `current`
    double current = default_beam_current;
    long excluded_pixels = 0; // p0 below the 1e-30 peak floor
};

/// Pixel-sum CFI: sum over region pixels of (cx sx + cy sy)^2 / p0 * area.
/// Midpoint rule on the map grid, matching how a detector integrates.
inline CfiReport cfi(const ProbabilityMap& map, const BlochState& bloch, const Region& region,
                     double current = default_beam_current)
{
    CfiReport rep;
    rep.region = region.describe();
    rep.current = current;
    const double area = map.grid.pixel_area();
    const double sx = bloch.s[0], sy = bloch.s[1];
    double p0_peak = 0;
    for (double v : map.p0)
        p0_peak = std::max(p0_peak, v);
    const double floor = 1e-30 * p0_peak;
    double acc = 0, captured = 0;
    long used = 0;
    for (int j = 0; j < map.grid.n; ++j) {
        const double y = map.grid.coord(j);
        for (int i = 0; i < map.grid.n; ++i) {
            const double x = map.grid.coord(i);
            if (!region.contains(x, y))
                continue;
            const std::size_t idx = (std::size_t)j * map.grid.n + i;
            if (map.p0[idx] <= floor) {
                ++rep.excluded_pixels;
                continue;
            }
            const double p1 = map.cx[idx] * sx + map.cy[idx] * sy;
            acc += p1 * p1 / map.p0[idx];
            captured += map.p0[idx];
            ++used;
        }
    }
    if (used == 0)
        throw std::invalid_argument("cfi: empty region");
    rep.mu_b2_cfi = acc * area;
    rep.detected_fraction = std::min(1.0, captured * area);
    PhysConsts pc;
    rep.snr_bound_per_sqrt_s = std::sqrt(current / pc.e_charge * rep.mu_b2_cfi);
    return rep;
}

struct SnrBound {
    double absolute = 0;       // muB sqrt(N_e CFI) / muB
    double rate_per_sqrt_s = 0;
};

inline SnrBound snr_bound(const CfiReport& rep, double n_e)
{
    if (n_e < 0)
        throw std::invalid_argument("snr_bound: negative electron count");
    SnrBound b;
    b.absolute = std::sqrt(n_e * rep.mu_b2_cfi);
    b.rate_per_sqrt_s = rep.snr_bound_per_sqrt_s;
    return b;
}

/// Collective signal from n aligned spins over an acquisition time.
inline double ensemble_snr(double n_spins_polarized, double snr1_rate, double t_acq)
{
    if (n_spins_polarized < 0 || snr1_rate < 0 || t_acq < 0)
        throw std::invalid_argument("ensemble_snr: negative input");
    return n_spins_polarized * snr1_rate * std::sqrt(t_acq);
}

/// Fraction of beam electrons landing in the square |x|,|y| <= x_max:
/// [erf(sqrt2 x_max dk_perp)]^2 for a Gaussian beam.
inline double detected_fraction(double x_max, double dk_perp)
{
    if (!(x_max > 0) || !(dk_perp > 0))
        throw std::invalid_argument("detected_fraction: arguments must be positive");
    const double e = std::erf(std::sqrt(2.0) * x_max * dk_perp);
    return e * e;
}

enum class ImagingMode { defocused, zernike, diffraction };

struct SweepRow {
    double z_d = 0;
    double x_max = 0; // half-side (spatial) or collection angle (diffraction)
    double mu_b2_cfi = 0;
    double snr_bound_per_sqrt_s = 0;
};

/// CFI surface over defocus and detection size for the on-resonance state.
/// One map is assembled per defocus at the largest extent; smaller regions
/// reuse it. Diffraction mode sweeps the collection angle instead (z_d list
/// ignored beyond the first entry).
inline std::vector<SweepRow> defocus_region_sweep(const KernelContext& ctx,
                                                  const std::vector<double>& zd_values,
                                                  const std::vector<double>& xmax_values,
                                                  ImagingMode mode, const MaskFunction& mask = {},
                                                  int grid_n = 384)
{
    if (zd_values.empty() || xmax_values.empty())
        throw std::invalid_argument("defocus_region_sweep: empty value list");
    for (std::size_t i = 1; i < zd_values.size(); ++i)
        if (zd_values[i] < zd_values[i - 1])
            throw std::invalid_argument("defocus_region_sweep: z_d values must be monotone");
    for (std::size_t i = 1; i < xmax_values.size(); ++i)
        if (xmax_values[i] < xmax_values[i - 1])
            throw std::invalid_argument("defocus_region_sweep: x_max values must be monotone");

    const BlochState on_res{{0.0, 1.0, 0.0}};
    std::vector<SweepRow> rows;
    if (mode == ImagingMode::diffraction) {
        const double cap = 8.0 * ctx.beam.dk_perp / ctx.beam.k_z0;
        AngularGrid grid{cap, grid_n};
        const ProbabilityMap map = p_diff_map(grid, ctx);
        for (double tm : xmax_values) {
            if (tm > cap * (1 + 1e-12))
                throw std::invalid_argument("defocus_region_sweep: collection angle beyond validity cut");
            CfiReport rep = cfi(map, on_res, Region::disk(tm));
            rows.push_back({0.0, tm, rep.mu_b2_cfi, rep.snr_bound_per_sqrt_s});
        }
        return rows;
    }
    const double extent = xmax_values.back();
    for (double zd : zd_values) {
        SpatialGrid grid{extent, grid_n, zd};
        const ProbabilityMap map = p_img_map(grid, ctx, mask, mode == ImagingMode::zernike);
        for (double xm : xmax_values) {
            CfiReport rep = cfi(map, on_res, Region::square(xm));
            rows.push_back({zd, xm, rep.mu_b2_cfi, rep.snr_bound_per_sqrt_s});
        }
    }
    return rows;
}

} // namespace srs
