#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "srs/kernel.hpp"
#include "srs/map.hpp"
#include "srs/parallel.hpp"

// Position-space amplitudes at defocus z_d. The canonical path is the masked
// Hankel transform with real J0/J1 and a complex Fresnel chirp; the aperture
// enters as a hard spatial-frequency cutoff. Closed-form no-mask expressions
// are provided as cross-checks only (their complex Bessel series is
// precision-limited).

namespace srs {

struct SpatialGrid {
    double x_max = 0; // half-side of the square detection region, m
    int n = 0;
    double z_d = 0; // defocus, m

    void validate() const
    {
        if (!(x_max > 0) || n < 2)
            throw std::invalid_argument("SpatialGrid: invalid extent or resolution");
        if (std::fabs(z_d) > 1.0e-7)
            throw std::invalid_argument("SpatialGrid: |z_d| beyond the simulated 100 nm range");
    }
};

struct MaskFunction {
    enum class Kind { hard_cutoff, none };
    Kind kind = Kind::hard_cutoff;
    double k_max = 2.0 * M_PI / 50.0e-12; // 50 pm resolution limit

    void validate() const
    {
        if (kind == Kind::hard_cutoff && !(k_max > 0))
            throw std::invalid_argument("MaskFunction: k_max must be positive");
    }

    static MaskFunction none() { return MaskFunction{Kind::none, 0.0}; }
};

namespace img_detail {

/// Composite panel edges on [0, k_hi] sized to resolve the beam Gaussian, the
/// smearing knee, the Fresnel chirp and the worst-case J0/J1 oscillation.
inline CompositePlan hankel_plan(const KernelContext& ctx, double k_hi, double z_d, double r_max)
{
    const double dkp = ctx.beam.dk_perp;
    const double kz0 = ctx.beam.k_z0;
    const double ka = ctx.spin.k_a();
    const double absz = std::fabs(z_d);
    auto width = [=](double k) {
        double w = std::max(0.5 * dkp, 0.25 * k);
        w = std::min(w, ka);
        if (absz > 0 && k > 0)
            w = std::min(w, 0.5 * M_PI * kz0 / (k * absz));
        if (r_max > 0)
            w = std::min(w, 0.5 * M_PI / r_max);
        return w;
    };
    return CompositePlan::build(graded_edges(0.0, k_hi, width), 12);
}

inline double phi_perp(double k, const KernelContext& ctx)
{
    const double dkp = ctx.beam.dk_perp;
    const double u = k / (2.0 * dkp);
    return std::exp(-u * u) / (std::sqrt(2.0 * M_PI) * dkp);
}

template <typename T>
T cubic_interp(const std::vector<T>& tab, double step, double x)
{
    const double u = x / step;
    std::size_t i = (std::size_t)u;
    if (i + 2 >= tab.size())
        throw std::out_of_range("cubic_interp: beyond cached table");
    i = std::clamp<std::size_t>(i, 1, tab.size() - 3);
    const double t = u - (double)i;
    const T m0 = tab[i - 1], m1 = tab[i], m2 = tab[i + 1], m3 = tab[i + 2];
    const T a = -0.5 * m0 + 1.5 * m1 - 1.5 * m2 + 0.5 * m3;
    const T b = m0 - 2.5 * m1 + 2.0 * m2 - 0.5 * m3;
    const T c = 0.5 * (m2 - m0);
    return ((a * t + b) * t + c) * t + m1;
}

} // namespace img_detail

/// Shared machinery for the two chirped Hankel transforms of image mode:
///   B1(r) = 2 pi int dk k J0(k r) e^{-i k^2 z_d/(2 kz0)} phi_perp(k) M(k)
///   A(r)  = -2 sqrt2 i sqrt(2 pi) r_e int dk k e^{-i k^2 z_d/(2 kz0)} J1(k r) L(k/kz0) M(k)
/// where A is the radial factor of B_{z,+-1}. Quadrature nodes are fixed once
/// (the expensive kernel L is evaluated only there); optional radial tables
/// with cubic interpolation serve whole-map assembly.
class ImageFields {
public:
    ImageFields(const KernelContext& ctx, const MaskFunction& mask, double z_d, double r_max,
                bool with_scattered = true)
        : ctx_(ctx), z_d_(z_d)
    {
        mask.validate();
        const double k_gauss = 14.0 * ctx.beam.dk_perp;
        const double k_cut = (mask.kind == MaskFunction::Kind::hard_cutoff)
                                 ? mask.k_max
                                 : std::max(20.0 * ctx.spin.k_a(), k_gauss);
        k_cut_ = k_cut;
        plan_b1_ = img_detail::hankel_plan(ctx, std::min(k_cut, k_gauss), z_d, r_max);
        weight_b1_.resize(plan_b1_.x.size());
        for (std::size_t i = 0; i < plan_b1_.x.size(); ++i)
            weight_b1_[i] = chirp(plan_b1_.x[i]) * plan_b1_.w[i] * plan_b1_.x[i] *
                            img_detail::phi_perp(plan_b1_.x[i], ctx);
        if (with_scattered) {
            plan_bz_ = img_detail::hankel_plan(ctx, k_cut, z_d, r_max);
            weight_bz_.resize(plan_bz_.x.size());
            for (std::size_t i = 0; i < plan_bz_.x.size(); ++i)
                weight_bz_[i] = chirp(plan_bz_.x[i]) * plan_bz_.w[i] * plan_bz_.x[i] *
                                deflection_kernel_focused(plan_bz_.x[i] / ctx.beam.k_z0, ctx);
        }
    }

    /// Build radial tables out to r_max with the given step.
    void tabulate(double r_max, double r_step)
    {
        r_step_ = r_step;
        const std::size_t n_r = (std::size_t)std::ceil(r_max / r_step) + 4;
        b1_tab_.resize(n_r);
        a_tab_.resize(n_r);
        parallel_for(n_r, [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                const double r = r_step_ * (double)i;
                b1_tab_[i] = b1_direct(r);
                a_tab_[i] = a_direct(r);
            }
        });
    }

    std::complex<double> b1_direct(double r) const
    {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < plan_b1_.x.size(); ++i)
            acc += weight_b1_[i] * specfun::bessel_j0(plan_b1_.x[i] * r);
        return 2.0 * M_PI * acc;
    }

    std::complex<double> a_direct(double r) const
    {
        if (weight_bz_.empty())
            throw std::logic_error("ImageFields: built without the scattered-field plan");
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < plan_bz_.x.size(); ++i)
            acc += weight_bz_[i] * specfun::bessel_j1(plan_bz_.x[i] * r);
        const std::complex<double> pref(
            0.0, -2.0 * std::sqrt(2.0) * std::sqrt(2.0 * M_PI) * ctx_.consts.r_e);
        return pref * acc;
    }

    std::complex<double> b1_interp(double r) const
    {
        return r <= 0.0 ? b1_tab_[0] : img_detail::cubic_interp(b1_tab_, r_step_, r);
    }
    std::complex<double> a_interp(double r) const
    {
        return r <= 0.0 ? a_tab_[0] : img_detail::cubic_interp(a_tab_, r_step_, r);
    }

    /// Max relative interpolation error over random radii (manifest entry).
    double self_check(unsigned seed = 11, int samples = 20) const
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(r_step_, r_step_ * (double)(b1_tab_.size() - 4));
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            const double r = uni(rng);
            const std::complex<double> d1 = b1_direct(r), v1 = b1_interp(r);
            const std::complex<double> d2 = a_direct(r), v2 = a_interp(r);
            if (std::abs(d1) > 0)
                worst = std::max(worst, std::abs(v1 - d1) / std::abs(d1));
            if (std::abs(d2) > 0)
                worst = std::max(worst, std::abs(v2 - d2) / std::abs(d2));
        }
        return worst;
    }

    std::size_t node_count() const { return plan_bz_.x.size() + plan_b1_.x.size(); }
    double k_cut() const { return k_cut_; }

    /// Table step resolving both the detector grid and the fastest radial
    /// oscillation the aperture admits.
    static double table_step(double x_max, int n, double k_cut)
    {
        return std::min(x_max / (4.0 * n), 0.12 / k_cut);
    }

private:
    std::complex<double> chirp(double k) const
    {
        const double ph = -k * k * z_d_ / (2.0 * ctx_.beam.k_z0);
        return {std::cos(ph), std::sin(ph)};
    }

    KernelContext ctx_;
    double z_d_ = 0, r_step_ = 0, k_cut_ = 0;
    CompositePlan plan_b1_, plan_bz_;
    std::vector<std::complex<double>> weight_b1_, weight_bz_;
    std::vector<std::complex<double>> b1_tab_, a_tab_;
};

/// Unscattered amplitude at one field point.
inline std::complex<double> b1(double r_perp, double z_d, const KernelContext& ctx,
                               const MaskFunction& mask = {})
{
    if (r_perp < 0)
        throw std::domain_error("b1: negative radius");
    ImageFields fields(ctx, mask, z_d, r_perp, /*with_scattered=*/false);
    return fields.b1_direct(r_perp);
}

/// Scattered amplitude at a field point for spin-flip index varsigma; the
/// phase winds as e^{-varsigma i phi} (orbital angular momentum -varsigma).
inline std::complex<double> b_z(double x, double y, double z_d, const KernelContext& ctx,
                                int varsigma, const MaskFunction& mask = {})
{
    if (varsigma == 0)
        return {0.0, 0.0};
    if (varsigma != 1 && varsigma != -1)
        throw std::invalid_argument("b_z: varsigma must be -1, 0 or +1");
    const double r = std::hypot(x, y);
    if (r == 0.0)
        return {0.0, 0.0};
    ImageFields fields(ctx, mask, z_d, r);
    const std::complex<double> A = fields.a_direct(r);
    const double cphi = x / r, sphi = y / r;
    const std::complex<double> az = (varsigma == 1)
                                        ? std::complex<double>(-sphi, -cphi) / std::sqrt(2.0)
                                        : std::complex<double>(-sphi, cphi) / std::sqrt(2.0);
    return A * az;
}

/// Closed-form no-mask B1 (ideal lens): 2 sqrt(2 pi) dkp/zeta exp(-r^2 dkp^2/zeta).
inline std::complex<double> b1_analytic(double r_perp, double z_d, const KernelContext& ctx)
{
    const std::complex<double> zeta = zeta_param(z_d + ctx.beam.z_p, ctx);
    const double dkp = ctx.beam.dk_perp;
    return 2.0 * std::sqrt(2.0 * M_PI) * dkp / zeta * std::exp(-r_perp * r_perp * dkp * dkp / zeta);
}

/// Closed-form no-mask radial factor of B_{z,+-1} at z_p = 0 (cross-check;
/// the complex-J1 series limits it to q_hi * r / |zeta| <= 30).
inline std::complex<double> bz_radial_analytic(double r_perp, double z_d, const KernelContext& ctx,
                                               const QuadSpec& spec = {})
{
    const std::complex<double> zeta = zeta_param(z_d, ctx);
    const double dkp = ctx.beam.dk_perp;
    const double q_hi = 10.0 * ctx.spin.k_a();
    if (q_hi * r_perp / std::abs(zeta) > 30.0)
        throw std::domain_error("bz_radial_analytic: outside the complex-J1 series domain");
    auto f = [&](double q) -> std::complex<double> {
        const std::complex<double> expo = -(q * q / (4.0 * dkp * dkp)) * (1.0 - 1.0 / zeta);
        return std::exp(expo) * smear_ft(q, ctx) * specfun::bessel_j1_complex(q * r_perp / zeta) /
               (2.0 * dkp);
    };
    auto res = integrate_1d_complex(f, 0.0, q_hi, spec);
    const std::complex<double> pref =
        std::complex<double>(0.0, -4.0 * std::sqrt(2.0) * std::sqrt(2.0 * M_PI) * ctx.consts.r_e) *
        dkp * dkp / zeta;
    return pref * std::exp(-r_perp * r_perp * dkp * dkp / zeta) * res.value;
}

/// Assembled image-mode probability map. Normalization (2 pi)^-2 makes the
/// zero-order density integrate to unity over the plane. The Zernike variant
/// phase-shifts the unscattered amplitude in the interference term only, so
/// p0 is identical to the defocused map's.
inline ProbabilityMap p_img_map(const SpatialGrid& grid, const KernelContext& ctx,
                                const MaskFunction& mask = {}, bool zernike = false,
                                double* interp_check = nullptr)
{
    grid.validate();
    const double norm = 1.0 / (4.0 * M_PI * M_PI);
    ProbabilityMap map;
    map.grid = MapGrid{MapSpace::spatial, grid.x_max, grid.n, grid.z_d, zernike};
    map.validity_radius = std::numeric_limits<double>::infinity();
    map.p0.resize(map.grid.size());
    map.cx.resize(map.grid.size());
    map.cy.resize(map.grid.size());

    const double r_max = grid.x_max * std::sqrt(2.0) * (1.0 + 1e-6);
    ImageFields fields(ctx, mask, grid.z_d, r_max);
    fields.tabulate(r_max, ImageFields::table_step(grid.x_max, grid.n, fields.k_cut()));
    if (interp_check)
        *interp_check = fields.self_check();

    parallel_for((std::size_t)grid.n, [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            const double y = map.grid.coord((int)j);
            for (int i = 0; i < grid.n; ++i) {
                const double x = map.grid.coord(i);
                const double r = std::hypot(x, y);
                const std::size_t idx = j * grid.n + i;
                const std::complex<double> B1 = fields.b1_interp(r);
                const std::complex<double> A = fields.a_interp(r);
                const std::complex<double> H = std::conj(B1) * A;
                const double G = zernike ? H.imag() : H.real();
                map.p0[idx] = norm * std::norm(B1);
                if (r == 0.0) {
                    map.cx[idx] = map.cy[idx] = 0.0;
                    continue;
                }
                map.cx[idx] = -std::sqrt(2.0) * norm * G * (y / r);
                map.cy[idx] = std::sqrt(2.0) * norm * G * (x / r);
            }
        }
    });
    double p0_peak = 0.0;
    for (std::size_t idx = 0; idx < map.grid.size(); ++idx)
        p0_peak = std::max(p0_peak, map.p0[idx]);
    for (std::size_t idx = 0; idx < map.grid.size(); ++idx) {
        const double worst = map.p0[idx] - std::hypot(map.cx[idx], map.cy[idx]);
        if (worst < 0.0) {
            ++map.clipped_pixels;
            map.max_negative_fraction = std::max(map.max_negative_fraction, -worst / p0_peak);
        }
    }
    return map;
}

/// Coherent scattered wavefunction at a plane z past the sample, for a spin
/// prepared along +y that is unchanged by the interaction. The common
/// propagation phase and the longitudinal envelope are divided out, so the
/// returned field integrates to ~1 over the transverse plane.
struct CoherentField {
    MapGrid grid;
    std::vector<std::complex<double>> psi;        // normalized coherent amplitude
    std::vector<std::complex<double>> beta_plus;  // vortex component, phase winding -1
    std::vector<std::complex<double>> beta_minus; // vortex component, phase winding +1
    double captured_norm = 0;                     // sum |psi|^2 * pixel area
};

inline CoherentField coherent_wavefunction(const SpatialGrid& grid, double z,
                                           const KernelContext& ctx)
{
    grid.validate();
    const double dkp = ctx.beam.dk_perp;
    const double kz0 = ctx.beam.k_z0;
    const double eps = 2.0 * dkp * dkp * z / kz0; // Im part of the lens-blur parameter
    const double alpha = ctx.delta_k * ctx.delta_k * z / kz0;

    const double r_max = grid.x_max * std::sqrt(2.0) * (1.0 + 1e-6);
    const double q_hi = 10.0 * ctx.spin.k_a();

    // Vortex radial kernel. Structure lives at the smearing scale a0, spread
    // outward by propagation of the significant momentum content (~2 k_a);
    // beyond that it is exponentially gone and the field is the bare Gaussian.
    const double r_vortex =
        std::min(r_max, 120.0 * ctx.spin.a0 + 6.0 * ctx.spin.k_a() * z / kz0);
    double r_step = std::min(grid.x_max / (4.0 * grid.n), ctx.spin.a0 / 6.0);
    r_step = std::max(r_step, r_vortex / 3000.0);
    const std::size_t n_r = (std::size_t)std::ceil(r_vortex / r_step) + 4;
    const CompositePlan plan = img_detail::hankel_plan(ctx, q_hi, z, r_vortex);
    std::vector<double> ies(plan.x.size());
    std::vector<std::complex<double>> chirp(plan.x.size());
    for (std::size_t i = 0; i < plan.x.size(); ++i) {
        const double q = plan.x[i];
        const double ph = -q * q * z / (2.0 * kz0);
        ies[i] = smear_ft(q, ctx);
        chirp[i] = std::polar(std::exp(ph * eps), ph); // chirp times weak blur decay
    }
    std::vector<std::complex<double>> lt(n_r);
    parallel_for(n_r, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t ir = lo; ir < hi; ++ir) {
            const double r = r_step * (double)ir;
            std::complex<double> acc = 0.0;
            for (std::size_t i = 0; i < plan.x.size(); ++i) {
                const double xarg = plan.x[i] * r;
                acc += plan.w[i] * ies[i] * chirp[i] *
                       specfun::bessel_j1_small_imag(xarg, -xarg * eps);
            }
            lt[ir] = dkp * std::exp(-r * r * dkp * dkp) * acc;
        }
    });

    CoherentField out;
    out.grid = MapGrid{MapSpace::spatial, grid.x_max, grid.n, z, false};
    out.psi.resize(out.grid.size());
    out.beta_plus.resize(out.grid.size());
    out.beta_minus.resize(out.grid.size());
    const double pref = 2.0 * std::sqrt(2.0 * M_PI) * ctx.consts.r_e;
    for (int j = 0; j < grid.n; ++j) {
        const double y = out.grid.coord(j);
        for (int i = 0; i < grid.n; ++i) {
            const double x = out.grid.coord(i);
            const double r = std::hypot(x, y);
            const double phi = std::atan2(y, x);
            const std::size_t idx = (std::size_t)j * grid.n + i;
            const double c1 = 2.0 * std::sqrt(2.0 * M_PI) * dkp * std::exp(-r * r * dkp * dkp);
            const std::complex<double> ltv =
                (r == 0.0 || r >= r_step * (double)(n_r - 3))
                    ? std::complex<double>(0, 0)
                    : img_detail::cubic_interp(lt, r_step, r);
            out.beta_plus[idx] = -pref * ltv * std::polar(1.0, -(phi + alpha));
            out.beta_minus[idx] = pref * ltv * std::polar(1.0, phi + alpha);
            out.psi[idx] = (c1 - std::complex<double>(0.0, 2.0 * std::sqrt(2.0 * M_PI)) *
                                     ctx.consts.r_e * ltv * std::cos(phi + alpha)) /
                           (2.0 * M_PI);
        }
    }
    double norm = 0;
    for (const auto& v : out.psi)
        norm += std::norm(v);
    out.captured_norm = norm * out.grid.pixel_area();
    return out;
}

} // namespace srs
