#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "srs/map.hpp"

// Shot-noise analysis pipeline: pixelation into expected counts, per-pixel
// SNR under the differential (driven minus reference) Poisson noise model,
// threshold-mask optimization, the sign-weighted linear estimator of the
// magnetic coupling, and seeded synthetic experiments.

namespace srs {

struct PixelImage {
    int npx = 0;           // detector pixels per side
    double pixel_size = 0; // rad or m
    MapSpace space = MapSpace::angular;
    std::vector<double> n0; // expected reference counts
    std::vector<double> n1; // expected differential signal counts (signed)
    long first_order_flags = 0; // pixels where |n1| is not small against n0
    double covered_extent = 0;  // detector half-side actually tiled

    std::size_t size() const { return n0.size(); }
};

struct MaskSelection {
    std::vector<std::uint8_t> selected;
    double threshold = 0; // selected[j] <=> snr_px[j] > threshold
    double total_snr = 0;
    std::vector<std::pair<double, double>> trace; // candidate threshold -> total SNR
};

/// Integrate the map into detector pixels of the given size. The detector
/// tiles the validity region (disk for angular maps, full square otherwise),
/// centered; simulation samples outside it contribute nothing. Requires at
/// least 4x4 simulation samples per detector pixel.
inline PixelImage pixelate(const ProbabilityMap& map, const BlochState& bloch_dr,
                           const BlochState& bloch_ref, double n_e, double pixel_size)
{
    if (!(pixel_size > 0) || !(n_e >= 0))
        throw std::invalid_argument("pixelate: bad pixel size or electron count");
    const double step = map.grid.step();
    if (pixel_size / step < 4.0 - 1e-9)
        throw std::invalid_argument("pixelate: fewer than 4x4 simulation samples per detector pixel");

    const double extent =
        std::min(map.validity_radius, map.grid.half_extent); // disk radius or half side
    const int npx = (int)std::floor(2.0 * extent / pixel_size + 1e-9);
    if (npx < 1)
        throw std::invalid_argument("pixelate: pixel larger than the detection region");

    PixelImage img;
    img.npx = npx;
    img.pixel_size = pixel_size;
    img.space = map.grid.space;
    img.covered_extent = 0.5 * npx * pixel_size;
    img.n0.assign((std::size_t)npx * npx, 0.0);
    img.n1.assign((std::size_t)npx * npx, 0.0);

    const bool disk = map.grid.space == MapSpace::angular;
    const double half = img.covered_extent;
    const double dsx = bloch_dr.s[0] - bloch_ref.s[0];
    const double dsy = bloch_dr.s[1] - bloch_ref.s[1];
    const double cell = map.grid.pixel_area();

    for (int j = 0; j < map.grid.n; ++j) {
        const double y = map.grid.coord(j);
        for (int i = 0; i < map.grid.n; ++i) {
            const double x = map.grid.coord(i);
            if (disk && x * x + y * y > extent * extent)
                continue;
            const int pi = (int)std::floor((x + half) / pixel_size);
            const int pj = (int)std::floor((y + half) / pixel_size);
            if (pi < 0 || pi >= npx || pj < 0 || pj >= npx)
                continue;
            const std::size_t midx = (std::size_t)j * map.grid.n + i;
            const std::size_t pidx = (std::size_t)pj * npx + pi;
            img.n0[pidx] += n_e * map.p0[midx] * cell;
            img.n1[pidx] += n_e * (map.cx[midx] * dsx + map.cy[midx] * dsy) * cell;
        }
    }
    for (std::size_t k = 0; k < img.size(); ++k)
        if (img.n0[k] > 0 && std::fabs(img.n1[k]) > 0.1 * img.n0[k])
            ++img.first_order_flags;
    return img;
}

/// SNR_px[j] = |n1[j]| / sqrt(2 n0[j] + n1[j]); zero where the denominator
/// is not positive.
inline std::vector<double> snr_px(const PixelImage& img)
{
    std::vector<double> out(img.size(), 0.0);
    for (std::size_t j = 0; j < img.size(); ++j) {
        const double den = 2.0 * img.n0[j] + img.n1[j];
        if (den > 0 && img.n1[j] != 0.0)
            out[j] = std::fabs(img.n1[j]) / std::sqrt(den);
    }
    return out;
}

/// Scan every mask reachable by thresholding SNR_px (the objective is
/// piecewise constant between attained values, so this visits the exact
/// optimum of the family). Ties go to the larger mask.
inline MaskSelection optimize_mask(const PixelImage& img)
{
    const std::vector<double> snr = snr_px(img);
    std::vector<std::size_t> order(snr.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return snr[a] > snr[b]; });

    MaskSelection sel;
    sel.selected.assign(img.size(), 0);
    double sum_sig = 0, sum_noise = 0;
    double best = -1.0;
    std::size_t best_count = 0;
    std::size_t k = 0;
    while (k < order.size() && snr[order[k]] > 0) {
        const double v = snr[order[k]];
        // absorb the whole group of equal SNR_px values
        while (k < order.size() && snr[order[k]] == v) {
            const std::size_t j = order[k];
            sum_sig += std::fabs(img.n1[j]);
            sum_noise += 2.0 * img.n0[j] + img.n1[j];
            ++k;
        }
        if (sum_noise <= 0)
            continue;
        const double total = sum_sig / std::sqrt(sum_noise);
        sel.trace.emplace_back(v, total);
        if (total > best * (1.0 + 1e-15) || (total >= best * (1.0 - 1e-15) && k > best_count)) {
            best = total;
            best_count = k;
        }
    }
    if (best < 0)
        throw std::runtime_error("optimize_mask: no signal (all SNR_px are zero)");
    sel.total_snr = best;
    for (std::size_t i = 0; i < best_count; ++i)
        sel.selected[order[i]] = 1;
    const double v_in = snr[order[best_count - 1]];
    const double v_out = (best_count < order.size()) ? snr[order[best_count]] : 0.0;
    sel.threshold = 0.5 * (v_in + v_out); // strictly below included, above excluded
    return sel;
}

struct MuEstimate {
    double ratio = 0; // estimate relative to the true coupling
    double std_dev = 0;
};

/// Sign-weighted linear estimator on the unmasked pixels:
///   ratio = sum_D sgn(n1) (observed - n0) / sum_D |n1|,
/// variance from the same differential noise model as the mask optimizer.
inline MuEstimate estimate_mu_b(const std::vector<double>& observed, const PixelImage& img,
                                const MaskSelection& mask)
{
    if (observed.size() != img.size())
        throw std::invalid_argument("estimate_mu_b: observation size mismatch");
    double num = 0, den = 0, noise = 0;
    for (std::size_t j = 0; j < img.size(); ++j) {
        if (!mask.selected[j])
            continue;
        const double sgn = (img.n1[j] > 0) - (img.n1[j] < 0);
        num += sgn * (observed[j] - img.n0[j]);
        den += std::fabs(img.n1[j]);
        noise += 2.0 * img.n0[j] + img.n1[j];
    }
    if (den == 0)
        throw std::runtime_error("estimate_mu_b: mask has no signal");
    return {num / den, std::sqrt(std::max(0.0, noise)) / den};
}

/// Independent Poisson draws per pixel, mean max(0, n0 + n1) when driven and
/// n0 otherwise. Deterministic for a fixed seed; parallel replicas should
/// derive their seeds with split_seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t replica)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (replica + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::vector<double> sample_poisson(const PixelImage& img, bool driven, std::uint64_t seed)
{
    std::mt19937_64 rng(split_seed(seed, 0));
    std::vector<double> out(img.size(), 0.0);
    for (std::size_t j = 0; j < img.size(); ++j) {
        const double mean = std::max(0.0, img.n0[j] + (driven ? img.n1[j] : 0.0));
        if (mean <= 0)
            continue;
        std::poisson_distribution<long long> pois(mean);
        out[j] = (double)pois(rng);
    }
    return out;
}

/// Synthetic differential experiment: driven and reference exposures drawn
/// independently; returns n_dr - n_ref + n0 so that (observed - n0) carries
/// the full 2 n0 + n1 variance assumed by the estimator.
inline std::vector<double> sample_differential(const PixelImage& img, std::uint64_t seed)
{
    std::mt19937_64 rng_dr(split_seed(seed, 1));
    std::mt19937_64 rng_ref(split_seed(seed, 2));
    std::vector<double> out(img.size(), 0.0);
    for (std::size_t j = 0; j < img.size(); ++j) {
        const double mean_dr = std::max(0.0, img.n0[j] + img.n1[j]);
        double dr = 0, ref = 0;
        if (mean_dr > 0) {
            std::poisson_distribution<long long> pois(mean_dr);
            dr = (double)pois(rng_dr);
        }
        if (img.n0[j] > 0) {
            std::poisson_distribution<long long> pois(img.n0[j]);
            ref = (double)pois(rng_ref);
        }
        out[j] = dr - ref + img.n0[j];
    }
    return out;
}

} // namespace srs
