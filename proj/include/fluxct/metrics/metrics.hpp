#pragma once

#include <vector>

#include "fluxct/core/image.hpp"
#include "fluxct/metrics/ssim.hpp"

namespace fluxct {

// Per-pixel SSIM values; range [-1, 1], same dimensions as the inputs.
struct SsimMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double mean() const;
};

double mse(const Image& a, const Image& b);

// 10*log10(peak^2/MSE); identical images return +infinity.
double psnr(const Image& a, const Image& b, double peak = 1.0);

SsimMap ssim_map(const Image& t, const Image& r,
                 const SsimParams& params = SsimParams::defaults());

double mssim(const Image& t, const Image& r,
             const SsimParams& params = SsimParams::defaults());

} // namespace fluxct
