#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fluxct/core/image.hpp"
#include "fluxct/core/parallel.hpp"
#include "fluxct/tomo/sinogram.hpp"

namespace fluxct {

namespace detail {

// Ray-driven line integral: march one-pixel steps along the major axis and
// split each step between the two pixels straddling the ray (Joseph's
// interpolation). Emits (pixel index, weight) pairs; forward projection and
// backprojection enumerate identical pairs, so the pair is an exact adjoint.
template <typename Emit>
inline void walk_ray(const Geometry& g, double cos_t, double sin_t, int bin, Emit&& emit) {
    const int n = g.image_size;
    const double c = 0.5 * (n - 1);
    const double s = (bin - 0.5 * (g.n_detectors - 1)) * g.detector_spacing;
    if (std::abs(sin_t) >= std::abs(cos_t)) {
        const double step = 1.0 / std::abs(sin_t);
        for (int j = 0; j < n; ++j) {
            const double y = (s - (j - c) * cos_t) / sin_t + c;
            const double fl = std::floor(y);
            const int i0 = int(fl);
            const double f = y - fl;
            if (i0 >= 0 && i0 < n) emit(i0 * n + j, (1.0 - f) * step);
            if (i0 + 1 >= 0 && i0 + 1 < n) emit((i0 + 1) * n + j, f * step);
        }
    } else {
        const double step = 1.0 / std::abs(cos_t);
        for (int i = 0; i < n; ++i) {
            const double x = (s - (i - c) * sin_t) / cos_t + c;
            const double fl = std::floor(x);
            const int j0 = int(fl);
            const double f = x - fl;
            if (j0 >= 0 && j0 < n) emit(i * n + j0, (1.0 - f) * step);
            if (j0 + 1 >= 0 && j0 + 1 < n) emit(i * n + j0 + 1, f * step);
        }
    }
}

inline std::vector<double> view_cosines(const Geometry& g) {
    std::vector<double> c(std::size_t(g.n_views));
    for (int v = 0; v < g.n_views; ++v) c[std::size_t(v)] = std::cos(g.angles[std::size_t(v)]);
    return c;
}

inline std::vector<double> view_sines(const Geometry& g) {
    std::vector<double> s(std::size_t(g.n_views));
    for (int v = 0; v < g.n_views; ++v) s[std::size_t(v)] = std::sin(g.angles[std::size_t(v)]);
    return s;
}

} // namespace detail

// img is image_size^2 row-major, sino is n_views x n_detectors. Accumulation
// is double regardless of T.
template <typename T>
void forward_project_into(const Geometry& g, const T* img, T* sino) {
    const auto ct = detail::view_cosines(g);
    const auto st = detail::view_sines(g);
    parallel_for(g.n_views, [&](int v) {
        T* row = sino + std::size_t(v) * std::size_t(g.n_detectors);
        for (int b = 0; b < g.n_detectors; ++b) {
            double acc = 0.0;
            detail::walk_ray(g, ct[std::size_t(v)], st[std::size_t(v)], b,
                             [&](int idx, double w) { acc += w * double(img[idx]); });
            row[b] = T(acc);
        }
    });
}

// Exact adjoint of forward_project_into. Views are accumulated into
// fixed-size block partials that are folded in block order, so the result is
// bit-identical for any thread count.
inline constexpr int kAdjointViewBlock = 8;

template <typename T>
void backproject_into(const Geometry& g, const T* sino, T* img) {
    const auto ct = detail::view_cosines(g);
    const auto st = detail::view_sines(g);
    const std::size_t npix = std::size_t(g.image_size) * std::size_t(g.image_size);
    const int n_blocks = (g.n_views + kAdjointViewBlock - 1) / kAdjointViewBlock;
    std::vector<std::vector<double>> partials(static_cast<std::size_t>(n_blocks));
    parallel_for(n_blocks, [&](int blk) {
        auto& p = partials[std::size_t(blk)];
        p.assign(npix, 0.0);
        const int v_end = std::min(g.n_views, (blk + 1) * kAdjointViewBlock);
        for (int v = blk * kAdjointViewBlock; v < v_end; ++v) {
            const T* row = sino + std::size_t(v) * std::size_t(g.n_detectors);
            for (int b = 0; b < g.n_detectors; ++b) {
                const double value = double(row[b]);
                if (value == 0.0) continue;
                detail::walk_ray(g, ct[std::size_t(v)], st[std::size_t(v)], b,
                                 [&](int idx, double w) { p[std::size_t(idx)] += w * value; });
            }
        }
    });
    std::vector<double> total(npix, 0.0);
    for (const auto& p : partials)
        for (std::size_t i = 0; i < npix; ++i) total[i] += p[i];
    for (std::size_t i = 0; i < npix; ++i) img[i] = T(total[i]);
}

// Image-facing wrappers (line-integral stage).
Sinogram forward_project(const Image& img, const Geometry& g);
Image backproject(const Sinogram& sino);

} // namespace fluxct
