#pragma once

// Brute-force structural-similarity reference: one direct double-precision
// loop over the window per pixel, no separable tricks, no shared code with
// the library implementation beyond the mathematical definition (Gaussian
// 11x11 window, edge-inclusive mirror boundaries, the usual c1/c2 stabilized
// luminance/contrast/structure product).

#include <cmath>
#include <cstddef>
#include <vector>

#include "fluxct/core/image.hpp"
#include "fluxct/metrics/ssim.hpp"

namespace testref {

inline int mirror(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        else i = 2 * n - 1 - i;
    }
    return i;
}

inline std::vector<double> gaussian_window(int k, double sigma) {
    std::vector<double> w(std::size_t(k) * k);
    const int m = k / 2;
    double sum = 0.0;
    for (int dy = -m; dy <= m; ++dy)
        for (int dx = -m; dx <= m; ++dx) {
            const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            w[std::size_t(dy + m) * k + (dx + m)] = g;
            sum += g;
        }
    for (double& v : w) v /= sum;
    return w;
}

inline double ssim_at(const fluxct::Image& t, const fluxct::Image& r, int y, int x,
                      const std::vector<double>& win, int k, double c1, double c2) {
    const int m = k / 2;
    double mt = 0, mr = 0, mtt = 0, mrr = 0, mtr = 0;
    for (int dy = -m; dy <= m; ++dy)
        for (int dx = -m; dx <= m; ++dx) {
            const double w = win[std::size_t(dy + m) * k + (dx + m)];
            const double tv = t.at(mirror(y + dy, t.height), mirror(x + dx, t.width));
            const double rv = r.at(mirror(y + dy, r.height), mirror(x + dx, r.width));
            mt += w * tv;
            mr += w * rv;
            mtt += w * tv * tv;
            mrr += w * rv * rv;
            mtr += w * tv * rv;
        }
    const double vt = mtt - mt * mt;
    const double vr = mrr - mr * mr;
    const double cov = mtr - mt * mr;
    return ((2.0 * mr * mt + c1) * (2.0 * cov + c2)) /
           ((mr * mr + mt * mt + c1) * (vr + vt + c2));
}

inline std::vector<double> ssim_map_ref(const fluxct::Image& t, const fluxct::Image& r,
                                        const fluxct::SsimParams& p) {
    const auto win = gaussian_window(p.window_size, p.sigma);
    std::vector<double> map(std::size_t(t.width) * t.height);
    for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x)
            map[std::size_t(y) * t.width + x] =
                ssim_at(t, r, y, x, win, p.window_size, p.c1, p.c2);
    return map;
}

inline double mssim_ref(const fluxct::Image& t, const fluxct::Image& r,
                        const fluxct::SsimParams& p) {
    const auto map = ssim_map_ref(t, r, p);
    double sum = 0.0;
    for (double v : map) sum += v;
    return sum / double(map.size());
}

inline double mse_ref(const fluxct::Image& a, const fluxct::Image& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = double(a.data[i]) - double(b.data[i]);
        sum += d * d;
    }
    return sum / double(a.data.size());
}

} // namespace testref
