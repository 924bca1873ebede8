#pragma once

#include <cstdint>

#include "fluxct/core/image.hpp"

namespace fluxct {

// Pixels below this attenuation count as pore space, both in the generator's
// porosity control loop and in any downstream porosity estimate.
inline constexpr double kPoreThreshold = 0.05;

// Synthetic rock slice: overlapping anti-aliased grains on a zero (pore)
// background plus band-limited intra-grain texture.
struct RockPhantomSpec {
    int size = 128;
    int grain_count = 120;
    double grain_radius_min = 4.0;
    double grain_radius_max = 12.0;
    double grain_density_min = 0.4;
    double grain_density_max = 0.95;
    double porosity_target = 0.3;
    double texture_amplitude = 0.03;
    std::uint64_t seed = 0;

    void validate() const;
};

// Standard 10-ellipse Shepp-Logan head phantom scaled to [0,1], rendered with
// 4x4 subpixel supersampling. size >= 16.
Image shepp_logan(int size);

// Grain/pore field with achieved porosity within +-0.05 of the target,
// reached by adding or removing grains. Throws if the target is unreachable,
// reporting the achieved value.
Image rock_phantom(const RockPhantomSpec& spec);

// Fraction of pixels below kPoreThreshold.
double porosity(const Image& img);

} // namespace fluxct
