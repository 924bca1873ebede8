#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fluxct {

// 2-D scalar field of attenuation values, row-major. After normalize() every
// value lies in [0,1] and (lo, hi) records the affine map that produced it, so
// paired images can share one map.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> data;
    double lo = 0.0; // source value mapped to 0
    double hi = 1.0; // source value mapped to 1

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(size_t(w) * h, 0.0f) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("Image: non-positive dims");
    }

    float& at(int row, int col) { return data[size_t(row) * width + col]; }
    float at(int row, int col) const { return data[size_t(row) * width + col]; }
    std::size_t pixel_count() const { return data.size(); }

    bool same_dims(const Image& o) const {
        return width == o.width && height == o.height;
    }
};

// A tile cut from a larger image; origin is the (row, col) of its top-left
// pixel in the source.
struct Tile {
    Image image;
    int row0 = 0;
    int col0 = 0;
};

// Square patch extracted for training, co-located across an image pair.
struct Patch {
    int row0 = 0;
    int col0 = 0;
    int size = 0;
    std::vector<float> data;
};

// Affine rescale to [0,1] with clamping: v -> clamp((v-lo)/(hi-lo), 0, 1).
// Throws on hi <= lo or non-finite input values.
Image normalize(const Image& img, double lo, double hi);

// Throws unless every value is finite.
void require_finite(const Image& img, const char* what);

// Non-overlapping tiles covering the largest tile-aligned interior region;
// ragged borders are dropped. Throws if tile exceeds either dimension.
std::vector<Tile> tile(const Image& img, int tile_px);

// Reassembles tiles into the covered region (inverse of tile()).
Image stitch(const std::vector<Tile>& tiles);

// Percentile over a set of images, nearest-rank on the pooled pixels.
// p in [0, 100].
double pooled_percentile(const std::vector<Image>& images, double p);

} // namespace fluxct
