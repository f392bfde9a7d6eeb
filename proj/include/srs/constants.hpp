#pragma once

#include <cmath>

namespace srs {

/// Fundamental constants (CODATA 2018, SI units). All internal computation is
/// done in SI; presentation units (meV, Angstrom, urad) appear only at I/O.
struct PhysConsts {
    double hbar = 1.054571817e-34;     // J s
    double m_e = 9.1093837015e-31;     // kg
    double c = 2.99792458e8;           // m/s
    double e_charge = 1.602176634e-19; // C
    double mu_B = 9.2740100783e-24;    // J/T
    double mu_0 = 1.25663706212e-6;    // N/A^2

    // Magnetic coupling length e*mu0*muB/(2*pi*hbar); equals the classical
    // electron radius and carries the linear mu_B dependence of all
    // first-order signals.
    double r_e = 2.8179403262e-15; // m

    static PhysConsts standard()
    {
        PhysConsts p;
        p.r_e = p.e_charge * p.mu_0 * p.mu_B / (2.0 * M_PI * p.hbar);
        return p;
    }
};

} // namespace srs
