#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "srs/params.hpp"
#include "srs/quadrature.hpp"
#include "srs/specfun.hpp"

// Scattering kernels shared by diffraction- and image-mode maps: the spin
// smearing form factor, the radial deflection kernel L_s(theta; z_p), its
// broad-probe closed form, and the longitudinal overlap factor.

namespace srs {

struct KernelContext {
    BeamParams beam;
    SpinParams spin;
    PhysConsts consts;

    double gamma0 = 0, energy0 = 0, v0 = 0; // derived relativistic beam data
    double delta_k = 0;                      // Zeeman momentum-transfer scale

    KernelContext() = default;
    KernelContext(const BeamParams& b, const SpinParams& s, const PhysConsts& pc)
        : beam(b), spin(s), consts(pc)
    {
        beam.validate();
        spin.validate();
        gamma0 = beam.gamma0(consts);
        energy0 = beam.energy0(consts);
        v0 = beam.v0(consts);
        delta_k = spin.delta_k(consts, gamma0);
    }

    static KernelContext make_default()
    {
        PhysConsts pc;
        BeamParams b;
        SpinParams s;
        default_params_200keV(pc, b, s);
        return KernelContext(b, s, pc);
    }
};

/// Fourier transform of the hydrogen-1s spin density: 16/(4 + a0^2 q^2)^2.
inline double smear_ft(double q, const KernelContext& ctx)
{
    if (q < 0)
        throw std::domain_error("smear_ft: negative wavenumber");
    const double t = ctx.spin.a0 * q;
    const double d = 4.0 + t * t;
    return 16.0 / (d * d);
}

/// Fresnel lens-blur parameter zeta(z) = 1 + 2i dk_perp^2 z / k_z0.
inline std::complex<double> zeta_param(double z, const KernelContext& ctx)
{
    return {1.0, 2.0 * ctx.beam.dk_perp * ctx.beam.dk_perp * z / ctx.beam.k_z0};
}

namespace kernel_detail {

// exp(z) - 1 for complex z without cancellation near 0.
inline std::complex<double> cexpm1(std::complex<double> z)
{
    const double em1 = std::expm1(z.real());
    const double cy = std::cos(z.imag()), sy = std::sin(z.imag());
    return {em1 * cy + (cy - 1.0), (em1 + 1.0) * sy};
}

} // namespace kernel_detail

/// Radial deflection kernel at z_p = 0 (real, spin-flip-index independent):
///   L(theta) = int dq/(2 dkp) exp[-((kz0 theta - q)^2)/(4 dkp^2)]
///              * i1e(theta q kz0 / (2 dkp^2)) * smear_ft(q)
/// The Gaussian and the scaled Bessel have been recombined so neither factor
/// overflows; the identity -(a^2+b^2)/(4c) + ab/(2c) = -(a-b)^2/(4c) is exact.
/// Integration runs over [max(0, kz0 theta - 10 dkp), kz0 theta + 10 dkp],
/// outside of which the integrand is negligible. The subleading longitudinal
/// recoil factor (relative size ~ q_z/kz0 ~ 1e-8 at beam scales) is dropped.
inline double deflection_kernel_focused(double theta, const KernelContext& ctx,
                                        const QuadSpec& spec = {}, bool* converged = nullptr)
{
    if (theta < 0)
        throw std::domain_error("deflection_kernel: negative angle");
    if (theta == 0.0)
        return 0.0;
    const double dkp = ctx.beam.dk_perp;
    const double a = ctx.beam.k_z0 * theta;
    const double lo = std::max(0.0, a - 10.0 * dkp);
    const double hi = a + 10.0 * dkp;
    auto f = [&](double q) {
        const double g = (a - q) / (2.0 * dkp);
        return std::exp(-g * g) * specfun::bessel_i1_scaled(a * q / (2.0 * dkp * dkp)) *
               smear_ft(q, ctx) / (2.0 * dkp);
    };
    auto res = integrate_1d_real(f, lo, hi, spec);
    if (converged)
        *converged = res.converged;
    return res.value;
}

/// Full kernel with probe defocus z_p: complex, carries the spin-flip phase
/// exp(i s delta_k^2 z_p / kz0) and the chirp exp(-i q^2 z_p / (2 kz0)) with
/// the blurred Bessel argument. varsigma in {-1, 0, +1}.
inline std::complex<double> deflection_kernel(double theta, const KernelContext& ctx, int varsigma,
                                              double z_p, const QuadSpec& spec = {},
                                              bool* converged = nullptr)
{
    if (theta < 0)
        throw std::domain_error("deflection_kernel: negative angle");
    if (varsigma < -1 || varsigma > 1)
        throw std::invalid_argument("deflection_kernel: varsigma must be -1, 0 or +1");
    if (z_p == 0.0)
        return {deflection_kernel_focused(theta, ctx, spec, converged), 0.0};
    if (theta == 0.0)
        return {0.0, 0.0};

    const double dkp = ctx.beam.dk_perp;
    const double kz0 = ctx.beam.k_z0;
    const double a = kz0 * theta;
    const std::complex<double> zeta = zeta_param(z_p, ctx);
    const double lo = std::max(0.0, a - 10.0 * dkp);
    const double hi = a + 10.0 * dkp;
    auto f = [&](double q) -> std::complex<double> {
        const double g = (a - q) / (2.0 * dkp);
        const std::complex<double> w = (a * q / (2.0 * dkp * dkp)) * zeta;
        const std::complex<double> chirp =
            std::polar(1.0, -q * q * z_p / (2.0 * kz0));
        return std::exp(-g * g) * chirp * specfun::bessel_i1_scaled_complex(w) *
               (smear_ft(q, ctx) / (2.0 * dkp));
    };
    auto res = integrate_1d_complex(f, lo, hi, spec);
    if (converged)
        *converged = res.converged;
    const double flip_phase = varsigma * ctx.delta_k * ctx.delta_k * z_p / kz0;
    return std::polar(1.0, flip_phase) * res.value;
}

/// Broad-probe closed form, valid when the smearing form factor is flat over
/// the beam's momentum support (dk_perp << k_a/2):
///   L = exp(i s dk^2 z_p/kz0) * dkp/(theta kz0 zeta) * e^{-A} (e^{A zeta} - 1),
///   A = theta^2 kz0^2 / (4 dkp^2).
/// Evaluated as e^{A(zeta-1)} - e^{-A} which is overflow-free (zeta-1 is
/// purely imaginary) and keeps the 1/theta tail exact.
inline std::complex<double> deflection_kernel_largeprobe(double theta, const KernelContext& ctx,
                                                         int varsigma, double z_p)
{
    if (theta < 0)
        throw std::domain_error("deflection_kernel_largeprobe: negative angle");
    const double dkp = ctx.beam.dk_perp;
    if (2.0 * dkp * ctx.spin.a0 > 0.1)
        throw std::domain_error(
            "deflection_kernel_largeprobe: dk_perp not small against k_a/2; use the numeric kernel");
    if (theta == 0.0)
        return {0.0, 0.0};
    const double kz0 = ctx.beam.k_z0;
    const std::complex<double> zeta = zeta_param(z_p, ctx);
    const double A = theta * theta * kz0 * kz0 / (4.0 * dkp * dkp);
    std::complex<double> bracket;
    if (A < 1e-6) {
        // e^{A zeta} - e^{... } to second order; avoids 0/0 at tiny angles
        bracket = A * zeta + 0.5 * A * A * (zeta * zeta - 1.0);
    } else {
        bracket = kernel_detail::cexpm1(A * (zeta - 1.0)) - std::expm1(-A);
    }
    const double flip_phase = varsigma * ctx.delta_k * ctx.delta_k * z_p / kz0;
    return std::polar(1.0, flip_phase) * (dkp / (theta * kz0)) * bracket / zeta;
}

/// Longitudinal overlap of scattered and unscattered wavepacket components:
/// exp(-q_z^2/(8 dk_z^2)) with the defocus phase exp(-i q_z z_p).
inline std::complex<double> longitudinal_overlap(double q_z, const KernelContext& ctx, double z_p)
{
    const double dkz = ctx.beam.dk_z;
    return std::polar(std::exp(-q_z * q_z / (8.0 * dkz * dkz)), -q_z * z_p);
}

/// Probability maps treat the longitudinal overlap as unity. This check
/// quantifies how good that is; callers put the outcome in the run manifest.
struct OverlapCondition {
    bool ok = true;
    double deflection_ratio = 0; // min(dkp,ka)^2/(4 kz0) / dk_z
    double exchange_ratio = 0;   // delta_k^2/(2 sqrt2 kz0) / dk_z
    double min_overlap = 1;      // overlap magnitude at the worst expected q_z
};

inline OverlapCondition check_overlap_condition(const KernelContext& ctx)
{
    OverlapCondition oc;
    const double scale = std::min(ctx.beam.dk_perp, ctx.spin.k_a());
    const double qz_defl = scale * scale / (4.0 * ctx.beam.k_z0);
    const double qz_exch = ctx.delta_k * ctx.delta_k / (2.0 * std::sqrt(2.0) * ctx.beam.k_z0);
    oc.deflection_ratio = qz_defl / ctx.beam.dk_z;
    oc.exchange_ratio = qz_exch / ctx.beam.dk_z;
    const double worst = std::max(qz_defl, qz_exch) * 2.0 * std::sqrt(2.0);
    oc.min_overlap = std::abs(longitudinal_overlap(worst, ctx, 0.0));
    oc.ok = oc.deflection_ratio < 1.0 && oc.exchange_ratio < 1.0;
    return oc;
}

/// Dense table of the focused kernel on a uniform theta grid with 4-point
/// cubic interpolation. Step obeys dk_perp/(64 kz0); interpolation error is
/// spot-checked against direct evaluation (report goes to the manifest).
class KernelTable {
public:
    KernelTable() = default;

    KernelTable(const KernelContext& ctx, double theta_max, const QuadSpec& spec = {})
        : theta_max_(theta_max)
    {
        const double want = ctx.beam.dk_perp / (64.0 * ctx.beam.k_z0);
        n_ = std::max<std::size_t>(64, (std::size_t)std::ceil(theta_max / want) + 1);
        step_ = theta_max / (double)(n_ - 1);
        vals_.resize(n_);
        bool all_ok = true;
        for (std::size_t i = 0; i < n_; ++i) {
            bool ok = true;
            vals_[i] = deflection_kernel_focused(step_ * (double)i, ctx, spec, &ok);
            all_ok = all_ok && ok;
        }
        converged_ = all_ok;
    }

    double operator()(double theta) const
    {
        if (theta <= 0.0)
            return 0.0;
        if (theta >= theta_max_)
            throw std::out_of_range("KernelTable: angle beyond table");
        const double u = theta / step_;
        std::size_t i = (std::size_t)u;
        i = std::clamp<std::size_t>(i, 1, n_ - 3);
        const double t = u - (double)i;
        // Catmull-Rom through the four bracketing samples
        const double m0 = vals_[i - 1], m1 = vals_[i], m2 = vals_[i + 1], m3 = vals_[i + 2];
        const double a = -0.5 * m0 + 1.5 * m1 - 1.5 * m2 + 0.5 * m3;
        const double b = m0 - 2.5 * m1 + 2.0 * m2 - 0.5 * m3;
        const double c = 0.5 * (m2 - m0);
        return ((a * t + b) * t + c) * t + m1;
    }

    /// Max relative interpolation error over `samples` random angles.
    double self_check(const KernelContext& ctx, unsigned seed = 7, int samples = 20) const
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uni(2.0 * step_, theta_max_ * (1.0 - 1e-9));
        double worst = 0;
        for (int i = 0; i < samples; ++i) {
            const double th = uni(rng);
            const double direct = deflection_kernel_focused(th, ctx);
            const double interp = (*this)(th);
            if (direct != 0.0)
                worst = std::max(worst, std::fabs(interp - direct) / std::fabs(direct));
        }
        return worst;
    }

    double theta_max() const { return theta_max_; }
    bool converged() const { return converged_; }

private:
    double theta_max_ = 0, step_ = 0;
    std::size_t n_ = 0;
    bool converged_ = true;
    std::vector<double> vals_;
};

} // namespace srs
