#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxct/tomo/geometry.hpp"

namespace fluxct {

// What the sample values mean. Line integrals come out of the projector,
// photon counts out of the exposure model, attenuation out of the log
// transform. Counts are integer-valued; line integrals are non-negative.
enum class SinogramStage : std::uint8_t {
    LineIntegral = 0,
    PhotonCounts = 1,
    Attenuation = 2,
};

struct Sinogram {
    Geometry geometry;
    SinogramStage stage = SinogramStage::LineIntegral;
    std::vector<float> data; // n_views rows of n_detectors bins

    Sinogram() = default;
    Sinogram(Geometry g, SinogramStage s)
        : geometry(std::move(g)), stage(s),
          data(std::size_t(geometry.n_views) * std::size_t(geometry.n_detectors), 0.0f) {}

    float& at(int view, int bin) {
        return data[std::size_t(view) * std::size_t(geometry.n_detectors) + std::size_t(bin)];
    }
    float at(int view, int bin) const {
        return data[std::size_t(view) * std::size_t(geometry.n_detectors) + std::size_t(bin)];
    }

    // Throws if the sample values violate the stage contract.
    void validate() const;
};

void write_sinf(const std::string& path, const Sinogram& sino);
Sinogram read_sinf(const std::string& path);

} // namespace fluxct
