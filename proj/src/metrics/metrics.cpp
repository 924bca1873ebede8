#include "fluxct/metrics/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fluxct {

double SsimMap::mean() const {
    double sum = 0.0;
    for (const double v : data) sum += v;
    return sum / static_cast<double>(data.size());
}

double mse(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("mse: dimensions differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b, double peak) {
    if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
}

SsimMap ssim_map(const Image& t, const Image& r, const SsimParams& params) {
    if (!t.same_dims(r)) throw std::invalid_argument("ssim_map: dimensions differ");
    std::vector<double> td(t.data.begin(), t.data.end());
    std::vector<double> rd(r.data.begin(), r.data.end());
    auto fields = ssim_fields<double>(t.height, t.width, td.data(), rd.data(), params);
    SsimMap map;
    map.width = t.width;
    map.height = t.height;
    map.data = std::move(fields.map);
    return map;
}

double mssim(const Image& t, const Image& r, const SsimParams& params) {
    return ssim_map(t, r, params).mean();
}

} // namespace fluxct
