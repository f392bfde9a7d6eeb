#include <doctest.h>

#include <cmath>
#include <complex>

#include "srs/kernel.hpp"

using namespace srs;

TEST_CASE("smearing form factor")
{
    const KernelContext ctx = KernelContext::make_default();
    CHECK(smear_ft(0.0, ctx) == 1.0);
    CHECK(smear_ft(2.0 / ctx.spin.a0, ctx) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(smear_ft(-1.0, ctx), std::domain_error);

    // monotone decreasing
    double prev = 2.0;
    for (double q = 0; q < 1e11; q += 1e9) {
        const double v = smear_ft(q, ctx);
        CHECK(v < prev);
        CHECK(v > 0);
        prev = v;
    }

    // radial-quadrature oracle: Fourier transform of (pi a^3)^-1 exp(-2r/a)
    const double a = ctx.spin.a0, q = 1e9;
    auto f = [&](double r) { return r * std::exp(-2.0 * r / a) * std::sin(q * r); };
    const double oracle = 4.0 / (a * a * a * q) * integrate_1d_real(f, 0.0, 40.0 * a).value;
    CHECK(smear_ft(q, ctx) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("deflection kernel, focused probe")
{
    const KernelContext ctx = KernelContext::make_default(); // broad beam
    CHECK(deflection_kernel_focused(0.0, ctx) == 0.0);
    CHECK_THROWS_AS(deflection_kernel_focused(-1e-9, ctx), std::domain_error);

    const double unit = ctx.beam.dk_perp / ctx.beam.k_z0;

    // real and identical across spin-flip channels at zero probe defocus
    for (double th : {0.5 * unit, 2.0 * unit, 7.0 * unit}) {
        const auto lp = deflection_kernel(th, ctx, +1, 0.0);
        const auto lm = deflection_kernel(th, ctx, -1, 0.0);
        const auto l0 = deflection_kernel(th, ctx, 0, 0.0);
        CHECK(lp.imag() == 0.0);
        CHECK(std::abs(lp - lm) <= 1e-12 * std::abs(lp));
        CHECK(std::abs(lp - l0) <= 1e-12 * std::abs(lp));
    }

    // continuity / single sign across the diffraction domain
    double prev = deflection_kernel_focused(8.0 * unit / 200.0, ctx);
    for (int i = 2; i <= 200; ++i) {
        const double v = deflection_kernel_focused(8.0 * unit * i / 200.0, ctx);
        CHECK(v > 0.0);
        if (i > 12) // past the linear ramp the grid resolves the profile
            CHECK(std::fabs(v - prev) < 0.25 * std::fabs(prev));
        prev = v;
    }
}

TEST_CASE("broad-probe closed form against the numeric kernel")
{
    const KernelContext ctx = KernelContext::make_default();
    REQUIRE(ctx.beam.dk_perp * ctx.spin.a0 < 1e-3);
    const double unit = ctx.beam.dk_perp / ctx.beam.k_z0;

    const double num = deflection_kernel_focused(2.0 * unit, ctx);
    const auto ana = deflection_kernel_largeprobe(2.0 * unit, ctx, 0, 0.0);
    CHECK(ana.imag() == 0.0);
    CHECK(num == doctest::Approx(ana.real()).epsilon(5e-3));

    // uniform 1% agreement over the diffraction domain
    for (int i = 1; i <= 40; ++i) {
        const double th = 8.0 * unit * i / 40.0;
        const double a = deflection_kernel_focused(th, ctx);
        const double b = deflection_kernel_largeprobe(th, ctx, 0, 0.0).real();
        CHECK(a == doctest::Approx(b).epsilon(1e-2));
    }
}

TEST_CASE("broad-probe closed form limits")
{
    const KernelContext ctx = KernelContext::make_default();
    const double dkp = ctx.beam.dk_perp, kz0 = ctx.beam.k_z0;

    CHECK(deflection_kernel_largeprobe(0.0, ctx, 0, 0.0) == std::complex<double>(0.0, 0.0));

    // small-angle limit: L -> theta kz0 / (4 dkp)
    const double th_small = 1e-4 * dkp / kz0;
    const auto small = deflection_kernel_largeprobe(th_small, ctx, 0, 0.0);
    CHECK(small.real() == doctest::Approx(th_small * kz0 / (4.0 * dkp)).epsilon(1e-6));

    // large-angle 1/theta tail: theta kz0 L / dkp -> 1
    const double th_large = 40.0 * dkp / kz0;
    const auto large = deflection_kernel_largeprobe(th_large, ctx, 0, 0.0);
    CHECK(large.real() * th_large * kz0 / dkp == doctest::Approx(1.0).epsilon(1e-9));

    // regime guard: a focused probe must be rejected
    KernelContext narrow(beam_preset("200keV-narrow"), ctx.spin, ctx.consts);
    CHECK_THROWS_AS(deflection_kernel_largeprobe(1e-5, narrow, 0, 0.0), std::domain_error);
}

TEST_CASE("defocused probe kernel")
{
    const KernelContext ctx = KernelContext::make_default();
    const double unit = ctx.beam.dk_perp / ctx.beam.k_z0;
    const double z_p = 1e-7;

    // numeric complex path against the closed form, still in the broad regime
    for (double th : {1.0 * unit, 3.0 * unit}) {
        const auto num = deflection_kernel(th, ctx, +1, z_p);
        const auto ana = deflection_kernel_largeprobe(th, ctx, +1, z_p);
        CHECK(std::abs(num - ana) < 5e-3 * std::abs(ana));
        CHECK(std::abs(num.imag()) > 0.0); // genuinely complex off focus
    }

    // the spin-flip phase is the only channel dependence
    const auto lp = deflection_kernel(2.0 * unit, ctx, +1, z_p);
    const auto lm = deflection_kernel(2.0 * unit, ctx, -1, z_p);
    CHECK(std::abs(lp) == doctest::Approx(std::abs(lm)).epsilon(1e-10));
    const double dphase = 2.0 * ctx.delta_k * ctx.delta_k * z_p / ctx.beam.k_z0;
    CHECK(std::arg(lp / lm) == doctest::Approx(dphase).epsilon(1e-6));
}

TEST_CASE("longitudinal overlap")
{
    const KernelContext ctx = KernelContext::make_default();
    CHECK(longitudinal_overlap(0.0, ctx, 0.0) == std::complex<double>(1.0, 0.0));

    const double dkz = ctx.beam.dk_z;
    CHECK(std::abs(longitudinal_overlap(2.0 * std::sqrt(2.0) * dkz, ctx, 0.0)) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

    // focused 1.1 nm probe still overlaps almost completely
    KernelContext narrow(beam_preset("200keV-narrow"), ctx.spin, ctx.consts);
    const double qz = narrow.beam.dk_perp * narrow.beam.dk_perp / narrow.beam.k_z0;
    CHECK(std::abs(longitudinal_overlap(qz, narrow, 0.0)) >= 0.997);

    // defocus only adds phase
    const auto v = longitudinal_overlap(1e5, ctx, 1e-8);
    CHECK(std::abs(v) == doctest::Approx(std::abs(longitudinal_overlap(1e5, ctx, 0.0))).epsilon(1e-14));
    CHECK(std::arg(v) == doctest::Approx(-1e5 * 1e-8).epsilon(1e-12));
}

TEST_CASE("overlap validity condition for the presets")
{
    const KernelContext ctx = KernelContext::make_default();
    for (const char* preset : {"200keV-broad", "200keV-mid", "200keV-narrow"}) {
        KernelContext c(beam_preset(preset), ctx.spin, ctx.consts);
        const OverlapCondition oc = check_overlap_condition(c);
        CHECK(oc.ok);
        CHECK(oc.min_overlap > 0.99);
    }
}

TEST_CASE("kernel table interpolation stays within budget")
{
    const KernelContext ctx = KernelContext::make_default();
    const double theta_max = 12.0 * ctx.beam.dk_perp / ctx.beam.k_z0;
    const KernelTable table(ctx, theta_max);
    CHECK(table.converged());
    CHECK(table.self_check(ctx, 99, 20) < 1e-6);
    CHECK(table(0.0) == 0.0);
    CHECK_THROWS_AS(table(theta_max * 1.01), std::out_of_range);
}

TEST_CASE("adaptive quadrature matches a dense trapezoid on kernel integrands")
{
    // 20 random parameter points inside the valid domain, each integrand the
    // focused deflection kernel's; oracle is a fixed 1e6-point trapezoid
    const KernelContext base = KernelContext::make_default();
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        BeamParams beam = base.beam;
        beam.dk_perp = 1.06e7 * std::pow(100.0, uni(rng)); // across the preset range
        const KernelContext ctx(beam, base.spin, base.consts);
        const double theta = (0.2 + 7.6 * uni(rng)) * ctx.beam.dk_perp / ctx.beam.k_z0;

        const double a = ctx.beam.k_z0 * theta;
        const double dkp = ctx.beam.dk_perp;
        const double lo = std::max(0.0, a - 10.0 * dkp), hi = a + 10.0 * dkp;
        auto f = [&](double q) {
            const double g = (a - q) / (2.0 * dkp);
            return std::exp(-g * g) * specfun::bessel_i1_scaled(a * q / (2.0 * dkp * dkp)) *
                   smear_ft(q, ctx) / (2.0 * dkp);
        };
        const int n = 1000000;
        double acc = 0.5 * (f(lo) + f(hi));
        const double h = (hi - lo) / n;
        for (int i = 1; i < n; ++i)
            acc += f(lo + h * i);
        acc *= h;

        const double adaptive = deflection_kernel_focused(theta, ctx);
        CHECK(adaptive == doctest::Approx(acc).epsilon(1e-8));
    }
}

TEST_CASE("scaled-Bessel exponent recombination equals the naive product")
{
    // exp(-(a^2+b^2)/4c) I1(ab/2c) == exp(-(a-b)^2/4c) i1e(ab/2c) where the
    // naive product does not overflow
    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> uni(0.1, 20.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double A = uni(rng), B = uni(rng), C = uni(rng);
        const double arg = A * B / (2.0 * C);
        const double naive = std::exp(-(A * A + B * B) / (4.0 * C)) *
                             specfun::bessel_i1_scaled(arg) * std::exp(arg);
        const double stable =
            std::exp(-(A - B) * (A - B) / (4.0 * C)) * specfun::bessel_i1_scaled(arg);
        if (naive > 1e-300 && std::isfinite(naive))
            CHECK(stable == doctest::Approx(naive).epsilon(1e-10));
    }
}
