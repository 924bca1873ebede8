#pragma once

#include <cstdint>
#include <vector>

#include "fluxct/tomo/sinogram.hpp"

namespace fluxct {

// Counts cap keeping every count exactly representable in f32.
inline constexpr double kMaxFlux = 16777216.0; // 2^24

// Source intensity model: the unattenuated photon count per bin scales
// linearly with exposure time relative to a calibrated reference.
struct ExposureModel {
    double i0_reference = 1.0e4; // counts per bin at the reference exposure
    double reference_exposure = 1.4;
    double exposure = 1.4;
    std::uint64_t seed = 0;

    // Expected count for an unattenuated ray. The exposure factor multiplies
    // last (matching expected_counts) so that when reference_exposure equals
    // one model's exposure, two models' per-bin means stay exactly
    // proportional in floating point.
    double flux() const { return (exposure / reference_exposure) * i0_reference; }

    void validate() const;
};

// Expected photon count per bin: (exposure/reference) * (i0_reference *
// exp(-p_b)). This is the mean of the Poisson draw apply_exposure makes.
std::vector<double> expected_counts(const Sinogram& line_integrals,
                                    const ExposureModel& model);

// Poisson draw with a counter-based key: the same (seed, key, lambda) always
// yields the same count, regardless of evaluation order. Sequential-search
// inversion below lambda = 30, rounded Gaussian approximation above.
double poisson_sample(std::uint64_t seed, std::uint64_t key, double lambda);

// Line integrals -> photon counts: lambda_b = flux * exp(-p_b), one Poisson
// draw per bin keyed by the bin's linear index.
Sinogram apply_exposure(const Sinogram& line_integrals, const ExposureModel& model);

// Photon counts -> attenuation estimates: p_hat = -ln(max(count, 1) / flux).
// Zero counts are floored at one photon so starved bins stay finite.
Sinogram counts_to_attenuation(const Sinogram& counts, const ExposureModel& model);

} // namespace fluxct
