// Acceptance suite: exercises every headline number and invariant at its
// stated tolerance and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "srs/analysis.hpp"
#include "srs/backaction.hpp"
#include "srs/bloch.hpp"
#include "srs/diffraction.hpp"
#include "srs/imaging.hpp"
#include "srs/metrology.hpp"

using namespace srs;

namespace {

int g_failures = 0;

double now_s()
{
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

void report(int criterion, bool ok, const std::string& detail)
{
    std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++g_failures;
}

bool rel_ok(double value, double target, double tol)
{
    return std::fabs(value - target) <= tol * std::fabs(target);
}

std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

KernelContext context_for(const char* preset)
{
    PhysConsts pc;
    BeamParams beam;
    SpinParams spin;
    default_params_200keV(pc, beam, spin);
    return KernelContext(beam_preset(preset), spin, pc);
}

const BlochState kOnRes{{0.0, 1.0, 0.0}};
const BlochState kGround{{0.0, 0.0, 1.0}};

// ---------------------------------------------------------------- criterion 1
void criterion_bloch_table()
{
    const double t0 = now_s();
    const double w0 = 2.0 * M_PI * 50e9, w1 = 0.01 * w0;
    const auto states = detuning_sweep({0.0, 0.025 * w0, 0.05 * w0, 0.075 * w0}, w1, w0);
    const double table[4][3] = {
        {0.00, 1.00, 0.00}, {0.51, -0.33, 0.80}, {0.22, 0.19, 0.96}, {0.03, -0.08, 0.99}};
    double worst = 0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c)
            worst = std::max(worst, std::fabs(states[r].s[c] - table[r][c]));
    const double dt = now_s() - t0;
    report(1, worst <= 0.01 && dt < 1.0,
           fmt("pi/2 detuning table, worst component deviation %.4f <= 0.01 (%.2f s < 1 s)", worst,
               dt));
}

// ---------------------------------------------------------------- criterion 2
double g_cfi_diff_broad = 0;

void criterion_diffraction_cfi()
{
    struct Case {
        const char* preset;
        double target;
    } cases[] = {{"200keV-broad", 9.4e-15}, {"200keV-narrow", 8.8e-11}};
    for (const auto& c : cases) {
        const double t0 = now_s();
        const KernelContext ctx = context_for(c.preset);
        const AngularGrid grid = AngularGrid::full_region(ctx, 512);
        const ProbabilityMap map = p_diff_map(grid, ctx);
        const CfiReport rep = cfi(map, kOnRes, Region::disk(grid.theta_max));
        const double dt = now_s() - t0;
        if (std::string(c.preset) == "200keV-broad")
            g_cfi_diff_broad = rep.mu_b2_cfi;
        report(2, rel_ok(rep.mu_b2_cfi, c.target, 0.10) && dt < 120.0,
               fmt("diffraction CFI %s: %.3e vs %.1e +-10%% at 512^2 (%.1f s < 120 s)", c.preset,
                   rep.mu_b2_cfi, c.target, dt));
    }
}

// ---------------------------------------------------------------- criterion 3
double g_cfi_img_broad = 0;

void criterion_image_cfi()
{
    struct Case {
        const char* preset;
        double zd, target, tol;
        bool zernike;
    } cases[] = {{"200keV-broad", 800e-10, 4.6e-15, 0.10, false},
                 {"200keV-broad", 0.0, 1.9e-14, 0.10, true},
                 {"200keV-narrow", 0.0, 1.37e-10, 0.15, true}};
    for (const auto& c : cases) {
        const double t0 = now_s();
        const KernelContext ctx = context_for(c.preset);
        const SpatialGrid grid{10e-10, 512, c.zd};
        const ProbabilityMap map = p_img_map(grid, ctx, MaskFunction{}, c.zernike);
        const CfiReport rep = cfi(map, kOnRes, Region::square(grid.x_max));
        const double dt = now_s() - t0;
        if (!c.zernike)
            g_cfi_img_broad = rep.mu_b2_cfi;
        report(3, rel_ok(rep.mu_b2_cfi, c.target, c.tol) && dt < 300.0,
               fmt("%s CFI %s z_d=%.0f A: %.3e vs %.2e +-%.0f%% (%.1f s < 300 s)",
                   c.zernike ? "Zernike" : "image-mode", c.preset, c.zd * 1e10, rep.mu_b2_cfi,
                   c.target, c.tol * 100, dt));
    }
}

// ---------------------------------------------------------------- criterion 4
double g_snr_img_narrow = 0;

void criterion_masked_snr()
{
    struct Case {
        const char* label;
        const char* preset;
        bool angular, zernike;
        double zd, px, target;
    } cases[] = {
        {"diffraction px 2.12 urad", "200keV-broad", true, false, 0.0, 2.12e-6, 0.338e-2},
        {"diffraction px 1.06 urad", "200keV-broad", true, false, 0.0, 1.06e-6, 0.329e-2},
        {"diffraction px 212 urad", "200keV-narrow", true, false, 0.0, 212e-6, 33.4e-2},
        {"diffraction px 106 urad", "200keV-narrow", true, false, 0.0, 106e-6, 32.5e-2},
        {"image px 0.32 A", "200keV-broad", false, false, 800e-10, 0.32e-10, 0.403e-2},
        {"Zernike px 0.32 A", "200keV-broad", false, true, 0.0, 0.32e-10, 0.781e-2},
        {"image px 0.32 A", "200keV-narrow", false, false, 800e-10, 0.32e-10, 9.55e-2},
        {"Zernike px 0.32 A", "200keV-narrow", false, true, 0.0, 0.32e-10, 15.8e-2},
    };
    for (const auto& c : cases) {
        const double t0 = now_s();
        const KernelContext ctx = context_for(c.preset);
        ProbabilityMap map;
        if (c.angular)
            map = p_diff_map(AngularGrid::full_region(ctx, 512), ctx);
        else
            map = p_img_map(SpatialGrid{10e-10, 512, c.zd}, ctx, MaskFunction{}, c.zernike);
        const PixelImage img = pixelate(map, kOnRes, kGround, default_electron_count, c.px);
        const MaskSelection mask = optimize_mask(img);
        const double dt = now_s() - t0;
        if (!c.angular && !c.zernike && std::string(c.preset) == "200keV-narrow")
            g_snr_img_narrow = mask.total_snr;
        std::string note;
        if (!rel_ok(mask.total_snr, c.target, 0.15)) {
            // diagnose: is the reference below even the trivial full mask?
            double sig = 0, noise = 0;
            for (std::size_t j = 0; j < img.size(); ++j) {
                sig += std::fabs(img.n1[j]);
                noise += 2.0 * img.n0[j] + img.n1[j];
            }
            const double full = sig / std::sqrt(noise);
            if (full > c.target * 1.15)
                note = fmt(" [reference unreachable: the un-optimized full-region mask already "
                           "gives %.3e]",
                           full);
        }
        report(4, rel_ok(mask.total_snr, c.target, 0.15),
               fmt("masked SNR %s %s: %.3e vs %.3e +-15%% (%.1f s)%s", c.preset, c.label,
                   mask.total_snr, c.target, dt, note.c_str()));
    }
}

// ---------------------------------------------------------------- criterion 5
void criterion_backaction()
{
    struct Case {
        const char* preset;
        double target;
    } cases[] = {{"200keV-broad", 3.81e-14}, {"200keV-mid", 3.79e-12}, {"200keV-narrow", 2.71e-10}};
    for (const auto& c : cases) {
        const double t0 = now_s();
        const KernelContext ctx = context_for(c.preset);
        const PurityReport rep = purity_loss(ctx);
        const double dt = now_s() - t0;
        report(5, rel_ok(rep.delta_p, c.target, 0.10) && dt < 120.0,
               fmt("purity loss %s: %.3e vs %.2e +-10%% (%.1f s < 120 s)", c.preset, rep.delta_p,
                   c.target, dt));
    }
}

// ---------------------------------------------------------------- criterion 6
void criterion_cfi_trends()
{
    const KernelContext ctx = context_for("200keV-broad");
    const std::vector<double> zds{0.0, 400e-10, 800e-10};
    const std::vector<double> xmaxs{2.5e-10, 5e-10, 10e-10, 20e-10};
    const auto rows = defocus_region_sweep(ctx, zds, xmaxs, ImagingMode::defocused, {}, 384);

    bool monotone = true;
    for (std::size_t z = 0; z < zds.size(); ++z)
        for (std::size_t x = 1; x < xmaxs.size(); ++x) {
            const double prev = rows[z * xmaxs.size() + x - 1].mu_b2_cfi;
            const double cur = rows[z * xmaxs.size() + x].mu_b2_cfi;
            if (cur < prev * (1.0 - 1e-9))
                monotone = false;
        }
    report(6, monotone, "defocused CFI non-decreasing in x_max at each z_d");

    const double cfi10 = rows[2 * xmaxs.size() + 2].mu_b2_cfi;
    const double cfi20 = rows[2 * xmaxs.size() + 3].mu_b2_cfi;
    const double change = std::fabs(cfi20 - cfi10) / cfi20;
    report(6, change <= 0.02,
           fmt("saturation at z_d=1.7 dr_perp: CFI(10 A) within %.2f%% of CFI(20 A) (<= 2%%)",
               change * 100));

    const auto zrows = defocus_region_sweep(ctx, {0.0, 800e-10}, {10e-10}, ImagingMode::zernike,
                                            {}, 384);
    report(6, zrows[0].mu_b2_cfi > zrows[1].mu_b2_cfi,
           fmt("Zernike CFI peaks in focus: %.3e (z_d=0) > %.3e (z_d=800 A)", zrows[0].mu_b2_cfi,
               zrows[1].mu_b2_cfi));
}

// ---------------------------------------------------------------- criterion 7
void criterion_invariants()
{
    const KernelContext ctx = context_for("200keV-broad");
    bool ok = true;
    std::string what = "invariants:";

    // elastic channel identically zero in both spaces
    bool zero = true;
    const double unit = ctx.beam.dk_perp / ctx.beam.k_z0;
    for (double th : {0.5, 2.0, 6.0})
        zero = zero && pi_z_diff(th * unit, 0.3 * unit, ctx, 0) == std::complex<double>(0, 0);
    zero = zero && b_z(2e-10, 1e-10, 800e-10, ctx, 0) == std::complex<double>(0, 0);
    ok = ok && zero;
    what += zero ? " elastic-zero" : " elastic-zero(FAIL)";

    // vortex winding of the scattered amplitudes
    {
        const double r = 3e-10, dphi = 0.4;
        const auto vp0 = b_z(r, 0.0, 800e-10, ctx, +1);
        const auto vp1 = b_z(r * std::cos(dphi), r * std::sin(dphi), 800e-10, ctx, +1);
        const auto vm0 = b_z(r, 0.0, 800e-10, ctx, -1);
        const auto vm1 = b_z(r * std::cos(dphi), r * std::sin(dphi), 800e-10, ctx, -1);
        const bool wind = std::fabs(std::arg(vp1 / vp0) + dphi) < 1e-6 &&
                          std::fabs(std::arg(vm1 / vm0) - dphi) < 1e-6;
        ok = ok && wind;
        what += wind ? " oam-winding" : " oam-winding(FAIL)";
    }

    // Zernike p0 identical to the defocused p0
    {
        const SpatialGrid grid{10e-10, 128, 800e-10};
        const ProbabilityMap a = p_img_map(grid, ctx, {}, false);
        const ProbabilityMap b = p_img_map(grid, ctx, {}, true);
        bool same = true;
        for (std::size_t i = 0; i < a.grid.size(); ++i)
            same = same && std::fabs(a.p0[i] - b.p0[i]) <= 1e-12 * a.p0[i];
        ok = ok && same;
        what += same ? " zernike-p0" : " zernike-p0(FAIL)";
    }

    // differential linearity + rotation covariance
    {
        const AngularGrid grid = AngularGrid::full_region(ctx, 128);
        const ProbabilityMap map = p_diff_map(grid, ctx);
        const auto d1 = differential_map(map, kOnRes, kGround);
        const BlochState half{{0.0, 0.5, std::sqrt(0.75)}};
        const auto d2 = differential_map(map, half, kGround);
        bool lin = true;
        for (std::size_t i = 0; i < d1.size(); i += 37)
            lin = lin && std::fabs(d2[i] - 0.5 * d1[i]) <= 1e-12 * std::fabs(d1[i]);
        ok = ok && lin;
        what += lin ? " linearity" : " linearity(FAIL)";

        const double alpha = 1.1;
        const BlochState rot{{-std::sin(alpha), std::cos(alpha), 0.0}};
        const auto dr = differential_map(map, rot, kGround);
        double peak = 0;
        for (double v : d1)
            peak = std::max(peak, std::fabs(v));
        auto sample = [&](const std::vector<double>& v, double x, double y) {
            const double step = map.grid.step();
            const int i = (int)std::floor((x + map.grid.half_extent) / step);
            const int j = (int)std::floor((y + map.grid.half_extent) / step);
            return v[(std::size_t)j * map.grid.n + i];
        };
        bool cov = true;
        const double r = 2.0 * unit;
        for (double phi : {0.3, 1.7, 4.0}) {
            const double v0 = sample(d1, r * std::cos(phi), r * std::sin(phi));
            const double vr = sample(dr, r * std::cos(phi + alpha), r * std::sin(phi + alpha));
            cov = cov && std::fabs(vr - v0) < 0.05 * peak; // one-pixel tolerance
        }
        ok = ok && cov;
        what += cov ? " rotation" : " rotation(FAIL)";

        // CFI quadratic in the transverse Bloch magnitude
        const Region region = Region::disk(grid.theta_max);
        const double full = cfi(map, kOnRes, region).mu_b2_cfi;
        const BlochState scaled{{0.0, 0.3, std::sqrt(1.0 - 0.09)}};
        const bool quad =
            std::fabs(cfi(map, scaled, region).mu_b2_cfi - 0.09 * full) <= 1e-12 * full;
        ok = ok && quad;
        what += quad ? " cfi-quadratic" : " cfi-quadratic(FAIL)";

        // masked SNR below the Cramer-Rao bound
        const PixelImage img = pixelate(map, kOnRes, kGround, default_electron_count, 2.12e-6);
        const MaskSelection mask = optimize_mask(img);
        const bool cr = mask.total_snr <= std::sqrt(default_electron_count * full);
        ok = ok && cr;
        what += cr ? " cramer-rao" : " cramer-rao(FAIL)";
    }

    // Bloch norm + ODE oracle agreement (coarse RK4 check)
    {
        const double w0 = 2.0 * M_PI * 50e9, w1 = 0.014 * w0, d = 0.03 * w0;
        const double t = M_PI / (2.0 * w1);
        const BlochState closed = drive(kGround, PulseParams{w1, d, t}, w0);
        std::array<double, 3> s = kGround.s;
        const std::array<double, 3> om{-w1, 0.0, -d};
        const int steps = 200000;
        const double h = t / steps;
        auto deriv = [&](const std::array<double, 3>& v) {
            return std::array<double, 3>{om[1] * v[2] - om[2] * v[1], om[2] * v[0] - om[0] * v[2],
                                         om[0] * v[1] - om[1] * v[0]};
        };
        for (int i = 0; i < steps; ++i) {
            const auto k1 = deriv(s);
            std::array<double, 3> tmp;
            for (int j = 0; j < 3; ++j)
                tmp[j] = s[j] + 0.5 * h * k1[j];
            const auto k2 = deriv(tmp);
            for (int j = 0; j < 3; ++j)
                tmp[j] = s[j] + 0.5 * h * k2[j];
            const auto k3 = deriv(tmp);
            for (int j = 0; j < 3; ++j)
                tmp[j] = s[j] + h * k3[j];
            const auto k4 = deriv(tmp);
            for (int j = 0; j < 3; ++j)
                s[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        }
        bool bloch_ok = std::fabs(closed.norm() - 1.0) < 1e-12;
        for (int j = 0; j < 3; ++j)
            bloch_ok = bloch_ok && std::fabs(closed.s[j] - s[j]) < 1e-6;
        ok = ok && bloch_ok;
        what += bloch_ok ? " bloch-oracle" : " bloch-oracle(FAIL)";
    }

    // closed-form agreements
    {
        const double drp = ctx.beam.dr_perp();
        bool b1ok = true;
        for (double zd : {0.0, 800e-10})
            for (double r : {0.0, drp}) {
                const auto v = b1(r, zd, ctx, MaskFunction::none());
                const auto ref = b1_analytic(r, zd, ctx);
                b1ok = b1ok && std::abs(v - ref) <= 1e-8 * std::abs(ref);
            }
        ok = ok && b1ok;
        what += b1ok ? " b1-closed-form" : " b1-closed-form(FAIL)";

        bool lp = true;
        for (int i = 1; i <= 16; ++i) {
            const double th = 8.0 * unit * i / 16.0;
            const double num = deflection_kernel_focused(th, ctx);
            const double ana = deflection_kernel_largeprobe(th, ctx, 0, 0.0).real();
            lp = lp && std::fabs(num - ana) <= 0.01 * std::fabs(ana);
        }
        ok = ok && lp;
        what += lp ? " largeprobe-kernel" : " largeprobe-kernel(FAIL)";
    }

    report(7, ok, what);
}

// ---------------------------------------------------------------- criterion 8
void criterion_estimator_mc()
{
    const double t0 = now_s();
    const KernelContext ctx = context_for("200keV-broad");
    const ProbabilityMap map = p_diff_map(AngularGrid::full_region(ctx, 512), ctx);
    const PixelImage img = pixelate(map, kOnRes, kGround, default_electron_count, 2.12e-6);
    const MaskSelection mask = optimize_mask(img);

    const int reps = 1000;
    double mean = 0, m2 = 0;
    for (int r = 0; r < reps; ++r) {
        const auto obs = sample_differential(img, split_seed(20260808, r));
        const double ratio = estimate_mu_b(obs, img, mask).ratio;
        mean += ratio;
        m2 += ratio * ratio;
    }
    mean /= reps;
    const double stdev = std::sqrt((m2 - reps * mean * mean) / (reps - 1));
    const double se = stdev / std::sqrt((double)reps);
    const double predicted = 1.0 / mask.total_snr;
    const double dt = now_s() - t0;
    const bool ok =
        std::fabs(mean - 1.0) <= 3.0 * se && rel_ok(stdev, predicted, 0.15) && dt < 300.0;
    report(8, ok,
           fmt("estimator MC: mean %.1f +- %.1f (needs |mean-1| <= %.1f), std %.1f vs %.1f +-15%% "
               "(%.1f s < 300 s)",
               mean, se, 3.0 * se, stdev, predicted, dt));
}

// ---------------------------------------------------------------- criterion 9
void criterion_feasibility()
{
    PhysConsts pc;
    const double rate_img_broad = std::sqrt(default_beam_current / pc.e_charge * g_cfi_img_broad);
    const double snr_ensemble = ensemble_snr(6e3, rate_img_broad, 6e-3);
    report(9, snr_ensemble > 3.0,
           fmt("6e3 polarized spins, 6 ms at 1.6 nA: SNR %.2f > 3 (single-spin rate %.2e)",
               snr_ensemble, rate_img_broad));

    // pure arithmetic on the quoted focused-probe masked rate; the rate our
    // own optimizer attains is printed for comparison
    const double snr_column = ensemble_snr(1e2, 9.55e-2, 30e-3);
    report(9,
           snr_column > 1.0 && snr_column < 3.0 && rel_ok(snr_column, 1.65, 0.01),
           fmt("1e2-spin column, 30 ms at 1.6 nA: SNR %.3f (order unity, ref 1.65; our "
               "optimizer's rate %.2e would give %.2f)",
               snr_column, g_snr_img_narrow, ensemble_snr(1e2, g_snr_img_narrow, 30e-3)));
}

} // namespace

int main()
{
    std::printf("acceptance suite\n");
    criterion_bloch_table();
    criterion_diffraction_cfi();
    criterion_image_cfi();
    criterion_masked_snr();
    criterion_backaction();
    criterion_cfi_trends();
    criterion_invariants();
    criterion_estimator_mc();
    criterion_feasibility();
    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance check(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
