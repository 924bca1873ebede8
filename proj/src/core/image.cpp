#include "fluxct/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluxct {

void require_finite(const Image& img, const char* what) {
    for (const float v : img.data)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string(what) + ": non-finite pixel value");
}

Image normalize(const Image& img, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("normalize: hi must exceed lo");
    require_finite(img, "normalize");
    Image out(img.width, img.height);
    out.lo = lo;
    out.hi = hi;
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = (static_cast<double>(img.data[i]) - lo) * inv;
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

std::vector<Tile> tile(const Image& img, int tile_px) {
    if (tile_px <= 0) throw std::invalid_argument("tile: size must be positive");
    if (tile_px > img.width || tile_px > img.height)
        throw std::invalid_argument("tile: size exceeds image dimensions");
    const int ny = img.height / tile_px;
    const int nx = img.width / tile_px;
    std::vector<Tile> out;
    out.reserve(std::size_t(ny) * nx);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) {
            Tile t;
            t.row0 = ty * tile_px;
            t.col0 = tx * tile_px;
            t.image = Image(tile_px, tile_px);
            t.image.lo = img.lo;
            t.image.hi = img.hi;
            for (int r = 0; r < tile_px; ++r) {
                const float* src = &img.data[std::size_t(t.row0 + r) * img.width + t.col0];
                std::copy(src, src + tile_px, &t.image.data[std::size_t(r) * tile_px]);
            }
            out.push_back(std::move(t));
        }
    }
    return out;
}

Image stitch(const std::vector<Tile>& tiles) {
    if (tiles.empty()) throw std::invalid_argument("stitch: no tiles");
    int w = 0, h = 0;
    for (const Tile& t : tiles) {
        w = std::max(w, t.col0 + t.image.width);
        h = std::max(h, t.row0 + t.image.height);
    }
    Image out(w, h);
    out.lo = tiles.front().image.lo;
    out.hi = tiles.front().image.hi;
    for (const Tile& t : tiles) {
        for (int r = 0; r < t.image.height; ++r) {
            const float* src = &t.image.data[std::size_t(r) * t.image.width];
            std::copy(src, src + t.image.width,
                      &out.data[std::size_t(t.row0 + r) * w + t.col0]);
        }
    }
    return out;
}

double pooled_percentile(const std::vector<Image>& images, double p) {
    std::vector<float> pool;
    std::size_t total = 0;
    for (const Image& img : images) total += img.data.size();
    if (total == 0) throw std::invalid_argument("pooled_percentile: no pixels");
    pool.reserve(total);
    for (const Image& img : images)
        pool.insert(pool.end(), img.data.begin(), img.data.end());
    const double clamped = std::clamp(p, 0.0, 100.0);
    const std::size_t k = static_cast<std::size_t>(
        std::llround(clamped / 100.0 * static_cast<double>(pool.size() - 1)));
    std::nth_element(pool.begin(), pool.begin() + k, pool.end());
    return pool[k];
}

} // namespace fluxct
