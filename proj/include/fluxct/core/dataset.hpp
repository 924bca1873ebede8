#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fluxct/core/image.hpp"

namespace fluxct {

// One observation pair plus, for synthetic data, the phantom it came from.
struct ImagePair {
    Image low;
    Image high;
    std::optional<Image> ground_truth;
};

// Paired images with a deterministic train/test split; the two index sets
// are disjoint by construction.
struct PairedDataset {
    std::vector<ImagePair> pairs;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// `count` co-located square patch pairs at seeded uniform random origins.
// Identical seed yields identical origins.
std::vector<std::pair<Patch, Patch>> extract_patches(const Image& low,
                                                     const Image& high,
                                                     int size, int count,
                                                     std::uint64_t seed);

// Seeded shuffle then split; floor(train_fraction * n) pairs go to train.
PairedDataset pair_dataset(std::vector<Image> low_images,
                           std::vector<Image> high_images,
                           std::vector<Image> ground_truth_images,
                           double train_fraction, std::uint64_t seed);

} // namespace fluxct
