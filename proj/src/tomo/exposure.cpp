#include "fluxct/tomo/exposure.hpp"

#include <cmath>
#include <stdexcept>

#include "fluxct/core/parallel.hpp"
#include "fluxct/core/rng.hpp"

namespace fluxct {

void ExposureModel::validate() const {
    if (!(i0_reference > 0.0)) throw std::invalid_argument("ExposureModel: i0_reference <= 0");
    if (!(reference_exposure > 0.0))
        throw std::invalid_argument("ExposureModel: reference_exposure <= 0");
    if (!(exposure > 0.0)) throw std::invalid_argument("ExposureModel: exposure <= 0");
    if (!(flux() <= kMaxFlux))
        throw std::invalid_argument("ExposureModel: flux exceeds counts cap");
}

double poisson_sample(std::uint64_t seed, std::uint64_t key, double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_sample: negative lambda");
    if (lambda == 0.0) return 0.0;
    if (lambda > kMaxFlux) throw std::invalid_argument("poisson_sample: lambda exceeds counts cap");
    if (lambda < 30.0) {
        const double u = rng::uniform(seed, key, 0);
        double p = std::exp(-lambda);
        double cum = p;
        double k = 0.0;
        while (u > cum && k < 1000.0) {
            k += 1.0;
            p *= lambda / k;
            cum += p;
        }
        return k;
    }
    const double z = rng::normal(seed, key, 0);
    const double draw = std::round(lambda + std::sqrt(lambda) * z);
    return draw < 0.0 ? 0.0 : draw;
}

std::vector<double> expected_counts(const Sinogram& line_integrals,
                                    const ExposureModel& model) {
    if (line_integrals.stage != SinogramStage::LineIntegral)
        throw std::invalid_argument("expected_counts: input must be line integrals");
    model.validate();
    // Factor applied last: with reference_exposure equal to the smaller
    // exposure of a pair, that side's factor is exactly 1 and the other
    // side's mean is the correctly rounded multiple of it, bin for bin.
    const double factor = model.exposure / model.reference_exposure;
    const std::size_t n = line_integrals.data.size();
    std::vector<double> lambda(n);
    for (std::size_t b = 0; b < n; ++b)
        lambda[b] = factor * (model.i0_reference * std::exp(-double(line_integrals.data[b])));
    return lambda;
}

Sinogram apply_exposure(const Sinogram& line_integrals, const ExposureModel& model) {
    const std::vector<double> lambda = expected_counts(line_integrals, model);
    Sinogram counts(line_integrals.geometry, SinogramStage::PhotonCounts);
    const std::size_t n = counts.data.size();
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b)
            counts.data[b] = float(poisson_sample(model.seed, b, lambda[b]));
    });
    return counts;
}

Sinogram counts_to_attenuation(const Sinogram& counts, const ExposureModel& model) {
    if (counts.stage != SinogramStage::PhotonCounts)
        throw std::invalid_argument("counts_to_attenuation: input must be photon counts");
    model.validate();
    const double log_i0 = std::log(model.flux());
    Sinogram atten(counts.geometry, SinogramStage::Attenuation);
    const std::size_t n = atten.data.size();
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        for (std::size_t b = begin; b < end; ++b) {
            const double c = std::max(double(counts.data[b]), 1.0);
            atten.data[b] = float(log_i0 - std::log(c));
        }
    });
    return atten;
}

} // namespace fluxct
