#include "fluxct/core/dataset.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fluxct/core/rng.hpp"

namespace fluxct {

namespace {

Patch cut_patch(const Image& img, int row0, int col0, int size) {
    Patch p;
    p.row0 = row0;
    p.col0 = col0;
    p.size = size;
    p.data.resize(std::size_t(size) * size);
    for (int r = 0; r < size; ++r) {
        const float* src = &img.data[std::size_t(row0 + r) * img.width + col0];
        std::copy(src, src + size, &p.data[std::size_t(r) * size]);
    }
    return p;
}

} // namespace

std::vector<std::pair<Patch, Patch>> extract_patches(const Image& low,
                                                     const Image& high,
                                                     int size, int count,
                                                     std::uint64_t seed) {
    if (!low.same_dims(high))
        throw std::invalid_argument("extract_patches: image dimensions differ");
    if (size <= 0 || size > low.width || size > low.height)
        throw std::invalid_argument("extract_patches: patch size out of range");
    if (count < 0) throw std::invalid_argument("extract_patches: negative count");

    const std::uint64_t row_span = std::uint64_t(low.height - size) + 1;
    const std::uint64_t col_span = std::uint64_t(low.width - size) + 1;
    std::vector<std::pair<Patch, Patch>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int r = static_cast<int>(rng::below(seed, 2 * std::uint64_t(i), 0, row_span));
        const int c = static_cast<int>(rng::below(seed, 2 * std::uint64_t(i) + 1, 0, col_span));
        out.emplace_back(cut_patch(low, r, c, size), cut_patch(high, r, c, size));
    }
    return out;
}

PairedDataset pair_dataset(std::vector<Image> low_images,
                           std::vector<Image> high_images,
                           std::vector<Image> ground_truth_images,
                           double train_fraction, std::uint64_t seed) {
    const std::size_t n = low_images.size();
    if (high_images.size() != n)
        throw std::invalid_argument("pair_dataset: list lengths differ");
    if (!ground_truth_images.empty() && ground_truth_images.size() != n)
        throw std::invalid_argument("pair_dataset: ground truth length differs");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("pair_dataset: train_fraction outside (0,1)");

    PairedDataset ds;
    ds.pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!low_images[i].same_dims(high_images[i]))
            throw std::invalid_argument("pair_dataset: pair dimensions differ");
        ImagePair p;
        p.low = std::move(low_images[i]);
        p.high = std::move(high_images[i]);
        if (!ground_truth_images.empty()) {
            if (!ground_truth_images[i].same_dims(p.low))
                throw std::invalid_argument("pair_dataset: ground truth dimensions differ");
            p.ground_truth = std::move(ground_truth_images[i]);
        }
        ds.pairs.push_back(std::move(p));
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, seed);
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(n)));
    ds.train_indices.assign(order.begin(), order.begin() + n_train);
    ds.test_indices.assign(order.begin() + n_train, order.end());
    return ds;
}

} // namespace fluxct
