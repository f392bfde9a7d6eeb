#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "srs/constants.hpp"

namespace srs {

/// Incident Gaussian wavepacket. Momentum-space profile
///   phi_perp(k) = exp(-k^2/(4 dk_perp^2)) / (sqrt(2 pi) dk_perp)
///   phi_par(kz) = (2 pi dk_z^2)^(-1/4) exp(-(kz-k_z0)^2/(4 dk_z^2)) e^{i kz z_p}
struct BeamParams {
    double k_z0 = 0;    // mean longitudinal wavenumber, 1/m
    double dk_perp = 0; // transverse momentum spread, 1/m
    double dk_z = 0;    // longitudinal momentum spread, 1/m
    double z_p = 0;     // probe defocus relative to the sample plane, m

    double dr_perp() const { return 1.0 / (2.0 * dk_perp); }
    double fwhm() const { return 2.3548200450309493 * dr_perp(); }

    double gamma0(const PhysConsts& pc) const
    {
        const double x = pc.hbar * k_z0 / (pc.m_e * pc.c);
        return std::sqrt(1.0 + x * x);
    }
    double energy0(const PhysConsts& pc) const { return gamma0(pc) * pc.m_e * pc.c * pc.c; }
    double v0(const PhysConsts& pc) const { return pc.hbar * pc.c * pc.c * k_z0 / energy0(pc); }

    // Paraxial validity; the first-order treatment is unreliable outside it.
    void validate() const
    {
        if (!(k_z0 > 0) || !(dk_perp > 0) || !(dk_z > 0))
            throw std::invalid_argument("BeamParams: wavenumbers must be positive");
        if (dk_perp / k_z0 > 1e-2)
            throw std::invalid_argument("BeamParams: dk_perp/k_z0 > 1e-2 violates the paraxial regime");
        if (dk_perp >= dk_z * 1e3)
            throw std::invalid_argument("BeamParams: dk_perp must stay below 1e3 * dk_z");
        if (dk_z / k_z0 > 1e-2)
            throw std::invalid_argument("BeamParams: dk_z/k_z0 > 1e-2 violates the paraxial regime");
    }
};

/// Sample spin: hydrogen-1s spatial smearing of scale a0, Larmor frequency
/// omega0 set by the Zeeman splitting, and the Bloch expectation vector.
struct SpinParams {
    double a0 = 0;     // smearing radius, m
    double omega0 = 0; // Larmor angular frequency, rad/s
    std::array<double, 3> bloch{0.0, 0.0, 1.0};

    double k_a() const { return 1.0 / a0; }

    // Momentum transfer scale of the Zeeman energy exchange.
    double delta_k(const PhysConsts& pc, double gamma0) const
    {
        return std::sqrt(gamma0 * pc.m_e * omega0 / pc.hbar);
    }

    double bloch_norm() const
    {
        return std::sqrt(bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]);
    }

    void validate() const
    {
        if (!(a0 > 0) || !(omega0 > 0))
            throw std::invalid_argument("SpinParams: a0 and omega0 must be positive");
        if (bloch_norm() > 1.0 + 1e-12)
            throw std::invalid_argument("SpinParams: |bloch| exceeds 1");
    }
};

/// Canonical 200 keV configuration used by all built-in presets.
/// k_z0 = 2.51e12 1/m, dk_z = 1.06e7 1/m, a0 = 52.9 pm, hbar*omega0 = 0.208 meV.
inline void default_params_200keV(PhysConsts& pc, BeamParams& beam, SpinParams& spin)
{
    pc = PhysConsts::standard();
    beam.k_z0 = 2.51e12;
    beam.dk_z = 1.06e7;
    beam.dk_perp = 1.06e7; // FWHM = 110 nm
    beam.z_p = 0.0;
    spin.a0 = 5.29e-11;
    spin.omega0 = 0.208e-3 * pc.e_charge / pc.hbar;
    spin.bloch = {0.0, 0.0, 1.0};
}

/// Beam presets over the simulated dk_perp range.
inline BeamParams beam_preset(const std::string& name)
{
    PhysConsts pc;
    BeamParams beam;
    SpinParams spin;
    default_params_200keV(pc, beam, spin);
    if (name == "200keV-broad")
        beam.dk_perp = 1.06e7; // FWHM 110 nm
    else if (name == "200keV-mid")
        beam.dk_perp = 1.06e8; // FWHM 11 nm
    else if (name == "200keV-narrow")
        beam.dk_perp = 1.06e9; // FWHM 1.1 nm
    else
        throw std::invalid_argument("unknown beam preset: " + name);
    return beam;
}

} // namespace srs
