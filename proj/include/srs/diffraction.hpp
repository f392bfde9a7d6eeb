#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "srs/kernel.hpp"
#include "srs/map.hpp"
#include "srs/parallel.hpp"

// Angular probability maps near the zero-deflection peak. The detection
// region is capped at 8 dk_perp / k_z0; beyond it the first-order expansion
// is unreliable (negative tails).

namespace srs {

struct AngularGrid {
    double theta_max = 0; // rad
    int n = 0;

    void validate(const KernelContext& ctx) const
    {
        if (n < 2)
            throw std::invalid_argument("AngularGrid: need at least 2 pixels per side");
        const double cap = 8.0 * ctx.beam.dk_perp / ctx.beam.k_z0;
        if (theta_max > cap * (1.0 + 1e-12))
            throw std::invalid_argument("AngularGrid: theta_max beyond the 8 dk_perp/k_z0 validity cut");
        if (!(theta_max > 0))
            throw std::invalid_argument("AngularGrid: theta_max must be positive");
    }

    static AngularGrid full_region(const KernelContext& ctx, int n)
    {
        return AngularGrid{8.0 * ctx.beam.dk_perp / ctx.beam.k_z0, n};
    }
};

/// Zero-order angular density (normalized Gaussian of the incident beam):
/// Pi0(theta) = kz0^2/(2 pi dkp^2) exp(-kz0^2 theta^2 / (2 dkp^2)).
inline double pi0_diff(double theta, const KernelContext& ctx)
{
    if (theta < 0)
        throw std::domain_error("pi0_diff: negative angle");
    const double kz0 = ctx.beam.k_z0, dkp = ctx.beam.dk_perp;
    const double u = kz0 * theta / dkp;
    return kz0 * kz0 / (2.0 * M_PI * dkp * dkp) * std::exp(-0.5 * u * u);
}

namespace diff_detail {

/// Radial magnitude of the first-order interference term (positive):
/// S(theta) = 2 sqrt(2/pi) r_e kz0^2 L(theta) |phi_perp(kz0 theta)|
///          = (2/pi) (r_e kz0^2 / dkp) L(theta) exp(-kz0^2 theta^2/(4 dkp^2)).
inline double signal_radial(double theta, double kernel_value, const KernelContext& ctx)
{
    const double kz0 = ctx.beam.k_z0, dkp = ctx.beam.dk_perp;
    const double u = kz0 * theta / (2.0 * dkp);
    return (2.0 / M_PI) * ctx.consts.r_e * kz0 * kz0 / dkp * kernel_value * std::exp(-u * u);
}

} // namespace diff_detail

/// First-order interference term for spin-flip index varsigma at a detector
/// direction; vanishes identically for the elastic channel (varsigma = 0).
inline std::complex<double> pi_z_diff(double theta_x, double theta_y, const KernelContext& ctx,
                                      int varsigma)
{
    if (varsigma == 0)
        return {0.0, 0.0};
    if (varsigma != 1 && varsigma != -1)
        throw std::invalid_argument("pi_z_diff: varsigma must be -1, 0 or +1");
    const double theta = std::hypot(theta_x, theta_y);
    if (theta == 0.0)
        return {0.0, 0.0};
    const double L = deflection_kernel_focused(theta, ctx);
    // Pi_{z,s} = -(2^{1/2}/pi) r_e kz0^2/dkp * L * f * (u*(phi) . e_{z,-s})
    // with u*(phi).e_{z,-1} = -(i/sqrt2) e^{-i phi},  u*(phi).e_{z,+1} = +(i/sqrt2) e^{+i phi}.
    const double scalar = -diff_detail::signal_radial(theta, L, ctx) / std::sqrt(2.0);
    const double cphi = theta_x / theta, sphi = theta_y / theta;
    const std::complex<double> az = (varsigma == 1)
                                        ? std::complex<double>(-sphi, -cphi) / std::sqrt(2.0)
                                        : std::complex<double>(-sphi, cphi) / std::sqrt(2.0);
    return scalar * az;
}

/// Assemble the full angular map: p0 plus the Bloch-vector coefficient
/// arrays, cx = S sin(phi), cy = -S cos(phi). Pixels where the worst-case
/// total density p0 - |(cx,cy)| would go negative are counted; the artifact
/// is a second-order truncation residual and is clipped at evaluation time.
inline ProbabilityMap p_diff_map(const AngularGrid& grid, const KernelContext& ctx,
                                 const QuadSpec& spec = {}, double* interp_check = nullptr)
{
    grid.validate(ctx);
    ProbabilityMap map;
    map.grid = MapGrid{MapSpace::angular, grid.theta_max, grid.n, 0.0, false};
    map.validity_radius = grid.theta_max;
    map.p0.resize(map.grid.size());
    map.cx.resize(map.grid.size());
    map.cy.resize(map.grid.size());

    const double corner = grid.theta_max * std::sqrt(2.0) * (1.0 + 1e-9);
    KernelTable table(ctx, corner * (1.0 + 1e-6), spec);
    if (interp_check)
        *interp_check = table.self_check(ctx);

    parallel_for((std::size_t)grid.n, [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            const double ty = map.grid.coord((int)j);
            for (int i = 0; i < grid.n; ++i) {
                const double tx = map.grid.coord(i);
                const double th = std::hypot(tx, ty);
                const std::size_t idx = j * grid.n + i;
                map.p0[idx] = pi0_diff(th, ctx);
                if (th == 0.0) {
                    map.cx[idx] = map.cy[idx] = 0.0;
                    continue;
                }
                const double S = diff_detail::signal_radial(th, table(th), ctx);
                map.cx[idx] = S * (ty / th);
                map.cy[idx] = -S * (tx / th);
            }
        }
    });
    const double p0_peak = pi0_diff(0.0, ctx);
    for (int j = 0; j < grid.n; ++j)
        for (int i = 0; i < grid.n; ++i) {
            const double th = std::hypot(map.grid.coord(i), map.grid.coord(j));
            const std::size_t idx = (std::size_t)j * grid.n + i;
            if (th > map.validity_radius)
                continue;
            const double worst = map.p0[idx] - std::hypot(map.cx[idx], map.cy[idx]);
            if (worst < 0.0) {
                ++map.clipped_pixels;
                map.max_negative_fraction = std::max(map.max_negative_fraction, -worst / p0_peak);
            }
        }
    return map;
}

} // namespace srs
