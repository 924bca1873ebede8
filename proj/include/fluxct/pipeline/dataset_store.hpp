#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxct/core/image.hpp"

namespace fluxct {

// One generated sample: ground-truth phantom plus its low/high-exposure
// reconstructions, all mapped to [0,1] with a shared normalization.
struct GeneratedTriple {
    Image truth;
    Image low;
    Image high;
    double porosity = 0.0;
    double flat_std_low = 0.0;   // recon noise std over constant-truth pixels
    double flat_std_high = 0.0;
};

struct LoadedDataset {
    std::vector<Image> truth;
    std::vector<Image> low;
    std::vector<Image> high;
};

// Writes truth_###.imgf / low_###.imgf / high_###.imgf plus manifest.csv.
void save_dataset(const std::string& dir, const std::vector<GeneratedTriple>& triples,
                  std::uint64_t seed, const std::string& config_hash);

// Loads the contiguous triples written by save_dataset. Throws if the
// directory holds no complete triple.
LoadedDataset load_dataset(const std::string& dir);

// Standard deviation of `recon` over the interior of the pore space of
// `truth` (pixels whose full 3x3 neighborhood sits below the pore
// threshold) — a flat region of the phantom, so any spread is noise.
double flat_region_std(const Image& recon, const Image& truth);

}  // namespace fluxct
