#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

// Special functions needed by the scattering kernels: J0, J1 for real
// arguments up to ~1e5, the exponentially scaled I1, and a small-|z| complex
// J1 used only by analytic cross-checks. Implementations are series +
// Hankel-type asymptotics with extended-precision accumulation where
// cancellation would otherwise eat the accuracy budget.

namespace srs::specfun {

#if defined(__x86_64__) && defined(__GNUC__) && !defined(__clang__)
using wide_real = __float128; // long double is only 80-bit here
#else
using wide_real = long double;
#endif

namespace detail {

// Hankel asymptotic coefficient recurrence a_k(nu) = a_{k-1} * (4 nu^2 - (2k-1)^2) / (8k).
// Series are truncated at the smallest term (they are asymptotic, not convergent).
inline long double asymptotic_pq(int nu, long double x, long double& p, long double& q)
{
    const long double mu = 4.0L * nu * nu;
    long double a = 1.0L;
    p = 1.0L;
    q = 0.0L;
    long double xpow = 1.0L;
    long double smallest = std::numeric_limits<long double>::max();
    for (int k = 1; k <= 40; ++k) {
        a *= (mu - (2.0L * k - 1.0L) * (2.0L * k - 1.0L)) / (8.0L * k);
        xpow *= x;
        const long double term = a / xpow;
        if (std::fabs((double)term) >= (double)smallest)
            break; // divergence onset
        smallest = std::fabs((double)term);
        const int sign = ((k / 2) % 2 == 0) ? 1 : -1;
        if (k % 2 == 1)
            q += sign * term;
        else
            p += sign * term;
    }
    return smallest;
}

inline double bessel_j_asymptotic(int nu, double x)
{
    // Hankel P/Q sums in double; truncation at the smallest term keeps the
    // residual below ~1e-13 for x > 15, and the double-precision phase
    // reduction contributes < 1e-13 absolute out to 1e5.
    const double mu = 4.0 * nu * nu;
    double a = 1.0, xpow = 1.0, p = 1.0, q = 0.0;
    double smallest = 1e300;
    for (int k = 1; k <= 40; ++k) {
        a *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k);
        xpow *= x;
        const double term = a / xpow;
        if (std::fabs(term) >= smallest)
            break;
        smallest = std::fabs(term);
        const int sign = ((k / 2) % 2 == 0) ? 1 : -1;
        if (k % 2 == 1)
            q += sign * term;
        else
            p += sign * term;
    }
    const double omega = x - (2 * nu + 1) * 0.25 * M_PI;
    return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(omega) - q * std::sin(omega));
}

// Maclaurin series; plain double is exact enough below x = 8, the 80-bit
// accumulation covers the cancellation up to the asymptotic handover.
inline double bessel_j_series_d(int nu, double x)
{
    const double q = 0.25 * x * x;
    double term = (nu == 0) ? 1.0 : 0.5 * x;
    double sum = term;
    for (int k = 1; k <= 40; ++k) {
        term *= -q / ((double)k * (double)(k + nu));
        sum += term;
        if (std::fabs(term) < 1e-18 * (1.0 + std::fabs(sum)))
            break;
    }
    return sum;
}

inline double bessel_j_series_ld(int nu, double x)
{
    const long double xl = x;
    const long double q = 0.25L * xl * xl;
    long double term = (nu == 0) ? 1.0L : 0.5L * xl;
    long double sum = term;
    for (int k = 1; k <= 80; ++k) {
        term *= -q / ((long double)k * (long double)(k + nu));
        sum += term;
        if (std::fabs((double)term) < 1e-22 * (1.0 + std::fabs((double)sum)))
            break;
    }
    return (double)sum;
}

} // namespace detail

/// J0, absolute error below 1e-12 for |x| <= 1e5.
inline double bessel_j0(double x)
{
    x = std::fabs(x);
    if (x <= 8.0)
        return detail::bessel_j_series_d(0, x);
    if (x <= 15.0)
        return detail::bessel_j_series_ld(0, x);
    return detail::bessel_j_asymptotic(0, x);
}

/// J1 (odd), absolute error below 1e-12 for |x| <= 1e5.
inline double bessel_j1(double x)
{
    const double sign = (x < 0) ? -1.0 : 1.0;
    x = std::fabs(x);
    if (x <= 8.0)
        return sign * detail::bessel_j_series_d(1, x);
    if (x <= 15.0)
        return sign * detail::bessel_j_series_ld(1, x);
    return sign * detail::bessel_j_asymptotic(1, x);
}

/// I1(x) * exp(-x) for x >= 0. Never overflows; relative error < 1e-10 on [0, 1e6].
inline double bessel_i1_scaled(double x)
{
    if (x < 0)
        throw std::domain_error("bessel_i1_scaled: negative argument");
    if (x == 0.0)
        return 0.0;
    if (x <= 20.0) {
        const long double xl = x;
        const long double q = 0.25L * xl * xl;
        long double term = 0.5L * xl;
        long double sum = term;
        for (int k = 1; k <= 60; ++k) {
            term *= q / ((long double)k * (long double)(k + 1));
            sum += term;
            if ((double)term < 1e-20 * (double)sum)
                break;
        }
        return (double)(sum * std::exp(-xl));
    }
    long double p = 1.0L, a = 1.0L, xpow = 1.0L;
    long double smallest = std::numeric_limits<long double>::max();
    for (int k = 1; k <= 40; ++k) {
        a *= (4.0L - (2.0L * k - 1.0L) * (2.0L * k - 1.0L)) / (8.0L * k);
        xpow *= (long double)x;
        const long double term = ((k % 2 == 0) ? a : -a) / xpow;
        if (std::fabs((double)term) >= (double)smallest)
            break;
        smallest = std::fabs((double)term);
        p += term;
    }
    return (double)(p / std::sqrt(2.0L * M_PIl * (long double)x));
}

/// I1(w) * exp(-Re w) for complex w with Re w >= 0, via the integral
/// representation (1/pi) int_0^pi exp(Re w (cos t - 1)) e^{i Im w cos t} cos t dt.
/// Integrand magnitude is bounded by 1, so no overflow for any Re w.
inline std::complex<double> bessel_i1_scaled_complex(std::complex<double> w)
{
    if (w.real() < 0)
        throw std::domain_error("bessel_i1_scaled_complex: Re w must be >= 0");
    // Panel count resolves both the exp(-Re w (1 - cos t)) boundary layer
    // (width ~ 1/sqrt(Re w)) and the Im w oscillation.
    const double scale = std::sqrt(std::max(1.0, w.real())) + std::fabs(w.imag());
    const int panels = std::min(4000, 8 + (int)(2.0 * scale));
    static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                 -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
                                 0.7966664774136267, 0.9602898564975363};
    static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    std::complex<double> acc = 0.0;
    const double h = M_PI / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * h;
        for (int i = 0; i < 8; ++i) {
            const double t = mid + 0.5 * h * gx[i];
            const double ct = std::cos(t);
            const double mag = std::exp(w.real() * (ct - 1.0));
            const double ph = w.imag() * ct;
            acc += gw[i] * std::complex<double>(mag * std::cos(ph), mag * std::sin(ph)) * ct;
        }
    }
    return acc * (0.5 * h / M_PI);
}

namespace detail {

struct wide_cplx {
    wide_real re, im;
};
inline wide_cplx wc_mul(wide_cplx a, wide_cplx b)
{
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}

} // namespace detail

/// Complex J1 by power series, restricted to |z| <= 30 where quadruple-width
/// accumulation keeps at least 10 significant digits through the cancellation.
/// Larger arguments must go through the masked Hankel-transform path instead.
inline std::complex<double> bessel_j1_complex(std::complex<double> z)
{
    if (std::abs(z) > 30.0)
        throw std::domain_error("bessel_j1_complex: |z| > 30 outside series domain");
    using detail::wide_cplx;
    const wide_cplx zq{(wide_real)z.real(), (wide_real)z.imag()};
    const wide_cplx mq4 = {-(zq.re * zq.re - zq.im * zq.im) * (wide_real)0.25,
                           -(2.0 * zq.re * zq.im) * (wide_real)0.25}; // -z^2/4
    wide_cplx term{zq.re * (wide_real)0.5, zq.im * (wide_real)0.5};
    wide_cplx sum = term;
    const double zmag2 = std::norm(z);
    for (int k = 1; k <= 300; ++k) {
        term = detail::wc_mul(term, mq4);
        const wide_real inv = (wide_real)1.0 / ((wide_real)k * (wide_real)(k + 1));
        term.re *= inv;
        term.im *= inv;
        sum.re += term.re;
        sum.im += term.im;
        const double tmag2 = (double)(term.re * term.re + term.im * term.im);
        if (tmag2 < 1e-64 * (1.0 + zmag2) && k > 4)
            break;
    }
    return {(double)sum.re, (double)sum.im};
}

namespace detail {

// Hankel asymptotic continued to complex argument; needs |z| > ~20 and
// Re z > 0. cosh(Im z) must stay representable (|Im z| < ~600).
inline std::complex<double> bessel_j1_asym_complex(std::complex<double> z)
{
    std::complex<double> a = 1.0, zpow = 1.0, p = 1.0, q = 0.0;
    double smallest = 1e300;
    for (int k = 1; k <= 40; ++k) {
        a *= (4.0 - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k);
        zpow *= z;
        const std::complex<double> term = a / zpow;
        if (std::abs(term) >= smallest)
            break;
        smallest = std::abs(term);
        const int sign = ((k / 2) % 2 == 0) ? 1 : -1;
        if (k % 2 == 1)
            q += (double)sign * term;
        else
            p += (double)sign * term;
    }
    const std::complex<double> omega = z - 0.75 * M_PI;
    return std::sqrt(2.0 / (M_PI * z)) * (p * std::cos(omega) - q * std::sin(omega));
}

} // namespace detail

/// J1 at x + iy with x >= 0 and a modest imaginary part (lens-blur phases).
/// Tiny |y| goes through a Taylor step off the real axis (error ~ |y|^3),
/// otherwise the exact series or the complex Hankel asymptotic.
inline std::complex<double> bessel_j1_small_imag(double x, double y)
{
    if (std::fabs(y) <= 1e-3) {
        const double j1 = bessel_j1(x);
        const double j0 = bessel_j0(x);
        const double j1_over_x = (x > 1e-290) ? j1 / x : 0.5;
        const double d1 = j0 - j1_over_x; // J1'
        double d2 = 0.0;                  // J1'', dropped near 0 where it vanishes
        if (x > 1e-3)
            d2 = -j1 - j0 / x + 2.0 * j1 / (x * x);
        return {j1 - 0.5 * y * y * d2, y * d1};
    }
    if (std::hypot(x, y) <= 25.0)
        return bessel_j1_complex({x, y});
    return detail::bessel_j1_asym_complex({x, y});
}

inline double erf(double x) { return std::erf(x); }

} // namespace srs::specfun
