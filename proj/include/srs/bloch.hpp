#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

// Coherent microwave driving of a spin-1/2 Bloch vector, no relaxation.
//
// Conventions. The quantization axis is the bias-field axis z. The undriven
// reference (ground) state sits at the north pole, s = (0,0,+1); a resonant
// pi/2 pulse takes it to +y. In the frame rotating at the drive frequency the
// Bloch vector precesses about the constant generator
//     Omega_eff = (-omega1, 0, -delta),   delta = omega - omega0,
// which fixes the microwave phase convention. Pulse-end states are reported
// stroboscopically: the lab-frame precession phase omega0*t is taken to be an
// integer multiple of 2*pi at readout, so rotating-frame and lab-frame
// transverse components coincide. srs::precess applies any residual phase.

namespace srs {

struct PulseParams {
    double omega1 = 0;   // Rabi frequency, rad/s
    double delta = 0;    // detuning omega - omega0, rad/s
    double duration = 0; // s

    void validate() const
    {
        if (!(omega1 > 0))
            throw std::invalid_argument("PulseParams: omega1 must be positive");
        if (duration < 0)
            throw std::invalid_argument("PulseParams: negative duration");
    }
};

struct BlochState {
    std::array<double, 3> s{0.0, 0.0, 1.0};

    double norm() const { return std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]); }
};

inline BlochState ground_state() { return BlochState{{0.0, 0.0, 1.0}}; }

/// Closed-form pulse evolution: rotation by |Omega_eff|*duration about
/// Omega_eff. Exactly norm-preserving.
inline BlochState drive(const BlochState& initial, const PulseParams& pulse, double /*omega0*/ = 0.0)
{
    pulse.validate();
    const double om = std::hypot(pulse.omega1, pulse.delta);
    const double angle = om * pulse.duration;
    const std::array<double, 3> u{-pulse.omega1 / om, 0.0, -pulse.delta / om};
    const auto& v = initial.s;
    const double c = std::cos(angle), sn = std::sin(angle);
    const double udotv = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    const std::array<double, 3> uxv{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                    u[0] * v[1] - u[1] * v[0]};
    BlochState out;
    for (int i = 0; i < 3; ++i)
        out.s[i] = v[i] * c + uxv[i] * sn + u[i] * udotv * (1.0 - c);
    return out;
}

/// Free lab-frame precession about z by omega0*t (transverse rotation only).
inline BlochState precess(const BlochState& st, double omega0, double t)
{
    const double a = omega0 * t;
    const double c = std::cos(a), sn = std::sin(a);
    return BlochState{{st.s[0] * c - st.s[1] * sn, st.s[0] * sn + st.s[1] * c, st.s[2]}};
}

/// Pi/2-pulse end states (duration pi/(2*omega1)) for each detuning, starting
/// from the ground state; stroboscopic readout as above.
inline std::vector<BlochState> detuning_sweep(const std::vector<double>& deltas, double omega1,
                                              double omega0 = 0.0)
{
    if (deltas.empty())
        throw std::invalid_argument("detuning_sweep: empty detuning list");
    std::vector<BlochState> out;
    out.reserve(deltas.size());
    const double duration = M_PI / (2.0 * omega1);
    for (double d : deltas)
        out.push_back(drive(ground_state(), PulseParams{omega1, d, duration}, omega0));
    return out;
}

} // namespace srs
