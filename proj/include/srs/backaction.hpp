#pragma once

#include <cmath>
#include <vector>

#include "srs/kernel.hpp"
#include "srs/parallel.hpp"
#include "srs/quadrature.hpp"

// Spin purity loss from a single electron passage, second order in the
// coupling. In scaled variables qt = q/(2 dkp), zt = 2 z dkp the loss is
//
//   dP = 4 r_e^2 (2 dkp)^2 * (dkzt/sqrt(2 pi)) Int dzt exp(-zt^2 dkzt^2/2)
//        IntInt dqt dqt' Ies(2 dkp qt) Ies(2 dkp qt')
//          * exp[-(1/2 + zt^2/(8 kt^2)) (qt^2 + qt'^2)]
//          * I1(qt qt' (1 + zt^2/(4 kt^2)))
//
// with kt = kz0/(2 dkp), dkzt = dk_z/dkp. The Gaussian/Bessel product is
// evaluated in the recombined form exp[-(1/2+e)(qt-qt')^2] * i1e(...), which
// is exact and overflow-free. The transverse domain is cut at
// qt <= min(16, 10 k_a/(2 dkp)); the zt^2/kt^2 broadening terms are retained
// even though they are far below unity at beam-physics scales.

namespace srs {

struct PurityReport {
    double delta_p = 0; // purity loss per electron
    double q_cutoff = 0;
    double z_halfwidth = 0;
    long evaluations = 0;

    double purity_after(double n_electrons) const
    {
        return std::max(0.0, 1.0 - n_electrons * delta_p);
    }
};

namespace backaction_detail {

inline std::vector<double> q_panel_edges(double q_max)
{
    std::vector<double> edges;
    const double marks[] = {0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0};
    for (double m : marks) {
        if (m < q_max)
            edges.push_back(m);
        else
            break;
    }
    edges.push_back(q_max);
    return edges;
}

} // namespace backaction_detail

inline PurityReport purity_loss(const KernelContext& ctx, int q_nodes_per_panel = 64,
                                int z_nodes = 96)
{
    const double dkp = ctx.beam.dk_perp;
    const double kt = ctx.beam.k_z0 / (2.0 * dkp);
    const double dkzt = ctx.beam.dk_z / dkp;
    const double q_max = std::min(16.0, 10.0 * ctx.spin.k_a() / (2.0 * dkp));
    const double z_half = 8.0 / dkzt;

    const CompositePlan qplan =
        CompositePlan::build(backaction_detail::q_panel_edges(q_max), q_nodes_per_panel);
    const CompositePlan zplan = CompositePlan::build(
        {0.0, 0.25 * z_half, 0.5 * z_half, 0.75 * z_half, z_half}, z_nodes / 4);

    std::vector<double> ies(qplan.x.size());
    for (std::size_t i = 0; i < qplan.x.size(); ++i)
        ies[i] = smear_ft(2.0 * dkp * qplan.x[i], ctx);

    PurityReport rep;
    rep.q_cutoff = q_max;
    rep.z_halfwidth = z_half;

    std::vector<double> contrib(zplan.x.size());
    parallel_for(zplan.x.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t iz = lo; iz < hi; ++iz) {
            const double zt = zplan.x[iz];
            const double eps = zt * zt / (8.0 * kt * kt);
            const double warp = 1.0 + 2.0 * eps; // I1 argument broadening
            double qacc = 0;
            for (std::size_t a = 0; a < qplan.x.size(); ++a) {
                const double qa = qplan.x[a];
                const double wa = qplan.w[a] * ies[a];
                for (std::size_t b = 0; b < qplan.x.size(); ++b) {
                    const double qb = qplan.x[b];
                    const double d = qa - qb;
                    const double val = std::exp(-(0.5 + eps) * d * d) *
                                       specfun::bessel_i1_scaled(qa * qb * warp);
                    qacc += wa * qplan.w[b] * ies[b] * val;
                }
            }
            // even integrand: nodes cover [0, z_half], weight doubled
            contrib[iz] = 2.0 * zplan.w[iz] * std::exp(-0.5 * zt * zt * dkzt * dkzt) * qacc;
        }
    });
    rep.evaluations = (long)(zplan.x.size() * qplan.x.size() * qplan.x.size());
    double zacc = 0;
    for (double c : contrib) // fixed reduction order
        zacc += c;
    const double pref = 4.0 * ctx.consts.r_e * ctx.consts.r_e * (2.0 * dkp) * (2.0 * dkp);
    rep.delta_p = pref * dkzt / std::sqrt(2.0 * M_PI) * zacc;
    return rep;
}

/// Plain tensor-trapezoid evaluation of the same integral, for cross checks.
inline double purity_loss_trapezoid(const KernelContext& ctx, int n)
{
    const double dkp = ctx.beam.dk_perp;
    const double kt = ctx.beam.k_z0 / (2.0 * dkp);
    const double dkzt = ctx.beam.dk_z / dkp;
    const double q_max = std::min(16.0, 10.0 * ctx.spin.k_a() / (2.0 * dkp));
    const double z_half = 8.0 / dkzt;

    const double hq = q_max / (n - 1);
    const double hz = 2.0 * z_half / (n - 1);
    std::vector<double> ies(n), qv(n);
    for (int i = 0; i < n; ++i) {
        qv[i] = hq * i;
        ies[i] = smear_ft(2.0 * dkp * qv[i], ctx);
    }
    double acc = 0;
    for (int iz = 0; iz < n; ++iz) {
        const double zt = -z_half + hz * iz;
        const double wz = (iz == 0 || iz == n - 1) ? 0.5 : 1.0;
        const double eps = zt * zt / (8.0 * kt * kt);
        const double warp = 1.0 + 2.0 * eps;
        double qacc = 0;
        for (int a = 0; a < n; ++a) {
            const double wa = ((a == 0 || a == n - 1) ? 0.5 : 1.0) * ies[a];
            for (int b = 0; b < n; ++b) {
                const double wb = ((b == 0 || b == n - 1) ? 0.5 : 1.0) * ies[b];
                const double d = qv[a] - qv[b];
                qacc += wa * wb * std::exp(-(0.5 + eps) * d * d) *
                        specfun::bessel_i1_scaled(qv[a] * qv[b] * warp);
            }
        }
        acc += wz * std::exp(-0.5 * zt * zt * dkzt * dkzt) * qacc;
    }
    acc *= hq * hq * hz;
    const double pref = 4.0 * ctx.consts.r_e * ctx.consts.r_e * (2.0 * dkp) * (2.0 * dkp);
    return pref * dkzt / std::sqrt(2.0 * M_PI) * acc;
}

} // namespace srs
