#include "fluxct/phantom/phantom.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxct/core/rng.hpp"

namespace fluxct {

namespace {

struct Ellipse {
    double value, a, b, x0, y0, phi_deg;
};

// Original Shepp-Logan parameter set; summed field spans [0, 2].
constexpr Ellipse kSheppLogan[10] = {
    {2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

double shepp_logan_value(double x, double y) {
    double v = 0.0;
    for (const Ellipse& e : kSheppLogan) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = dx * std::cos(phi) + dy * std::sin(phi);
        const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.value;
    }
    return v;
}

struct Grain {
    double cx, cy, radius, density;
};

Grain draw_grain(const RockPhantomSpec& spec, std::uint64_t index) {
    const std::uint64_t key = rng::hash(0x67726169, index); // per-grain stream
    Grain g;
    g.cx = rng::uniform(spec.seed, key, 0) * spec.size;
    g.cy = rng::uniform(spec.seed, key, 1) * spec.size;
    g.radius = spec.grain_radius_min +
               rng::uniform(spec.seed, key, 2) *
                   (spec.grain_radius_max - spec.grain_radius_min);
    g.density = spec.grain_density_min +
                rng::uniform(spec.seed, key, 3) *
                    (spec.grain_density_max - spec.grain_density_min);
    return g;
}

// Band-limited unit-variance noise: white field low-passed in the frequency
// domain at 1/8 Nyquist, with a short cosine rolloff.
std::vector<float> texture_field(int size, std::uint64_t seed) {
    const std::size_t n = std::size_t(size) * size;
    std::vector<std::complex<double>> buf(n);
    for (std::size_t i = 0; i < n; ++i)
        buf[i] = {rng::normal(seed, 0x74657874, i), 0.0};

    auto* data = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan fwd = fftw_plan_dft_2d(size, size, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(fwd);
    fftw_destroy_plan(fwd);

    const double cutoff = 0.5 / 8.0; // cycles/pixel
    const double roll = 0.2 * cutoff;
    for (int ky = 0; ky < size; ++ky) {
        const double fy = (ky <= size / 2 ? ky : ky - size) / double(size);
        for (int kx = 0; kx < size; ++kx) {
            const double fx = (kx <= size / 2 ? kx : kx - size) / double(size);
            const double f = std::sqrt(fx * fx + fy * fy);
            double gain = 0.0;
            if (f <= cutoff - roll) {
                gain = 1.0;
            } else if (f < cutoff + roll) {
                gain = 0.5 * (1.0 + std::cos((f - cutoff + roll) / (2.0 * roll) * std::numbers::pi));
            }
            buf[std::size_t(ky) * size + kx] *= gain;
        }
    }

    fftw_plan bwd = fftw_plan_dft_2d(size, size, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(bwd);
    fftw_destroy_plan(bwd);

    double sum = 0.0, sum2 = 0.0;
    for (const auto& c : buf) {
        sum += c.real();
        sum2 += c.real() * c.real();
    }
    const double mean = sum / double(n);
    const double std_dev = std::sqrt(std::max(sum2 / double(n) - mean * mean, 1e-30));
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>((buf[i].real() - mean) / std_dev);
    return out;
}

void render_grains(const std::vector<Grain>& grains, const std::vector<float>& texture,
                   double amplitude, Image& img) {
    std::fill(img.data.begin(), img.data.end(), 0.0f);
    const int size = img.width;
    // Grain value uses max-composition, so the result is independent of
    // grain order. Coverage ramps linearly over a one-pixel boundary band.
    for (const Grain& g : grains) {
        const int r0 = std::max(0, int(std::floor(g.cy - g.radius - 1.0)));
        const int r1 = std::min(size - 1, int(std::ceil(g.cy + g.radius + 1.0)));
        const int c0 = std::max(0, int(std::floor(g.cx - g.radius - 1.0)));
        const int c1 = std::min(size - 1, int(std::ceil(g.cx + g.radius + 1.0)));
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const double dx = (c + 0.5) - g.cx;
                const double dy = (r + 0.5) - g.cy;
                const double dist = std::sqrt(dx * dx + dy * dy);
                const double coverage = std::clamp(g.radius - dist + 0.5, 0.0, 1.0);
                if (coverage <= 0.0) continue;
                const auto v = static_cast<float>(g.density * coverage);
                float& px = img.at(r, c);
                px = std::max(px, v);
            }
        }
    }
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (img.data[i] > 0.0f) {
            const double v = img.data[i] + amplitude * texture[i];
            img.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
}

} // namespace

void RockPhantomSpec::validate() const {
    if (size < 16) throw std::invalid_argument("RockPhantomSpec: size < 16");
    if (grain_count < 0) throw std::invalid_argument("RockPhantomSpec: negative grain count");
    if (!(grain_radius_min >= 0.0 && grain_radius_min <= grain_radius_max))
        throw std::invalid_argument("RockPhantomSpec: bad radius range");
    if (!(grain_density_min >= 0.0 && grain_density_min <= grain_density_max &&
          grain_density_max <= 1.0))
        throw std::invalid_argument("RockPhantomSpec: densities must satisfy 0 <= min <= max <= 1");
    if (!(porosity_target >= 0.0 && porosity_target < 1.0))
        throw std::invalid_argument("RockPhantomSpec: porosity_target outside [0,1)");
    if (texture_amplitude < 0.0)
        throw std::invalid_argument("RockPhantomSpec: negative texture amplitude");
}

Image shepp_logan(int size) {
    if (size < 16) throw std::invalid_argument("shepp_logan: size < 16");
    Image img(size, size);
    const int ss = 4;
    const double px = 2.0 / size;
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            double acc = 0.0;
            for (int sy = 0; sy < ss; ++sy) {
                const double y = 1.0 - (r + (sy + 0.5) / ss) * px;
                for (int sx = 0; sx < ss; ++sx) {
                    const double x = (c + (sx + 0.5) / ss) * px - 1.0;
                    acc += shepp_logan_value(x, y);
                }
            }
            img.at(r, c) = static_cast<float>(std::clamp(acc / (ss * ss) / 2.0, 0.0, 1.0));
        }
    }
    return img;
}

double porosity(const Image& img) {
    std::size_t pore = 0;
    for (const float v : img.data)
        if (v < kPoreThreshold) ++pore;
    return static_cast<double>(pore) / static_cast<double>(img.data.size());
}

Image rock_phantom(const RockPhantomSpec& spec) {
    spec.validate();
    const auto texture = texture_field(spec.size, spec.seed);
    Image img(spec.size, spec.size);

    std::vector<Grain> grains;
    grains.reserve(std::size_t(spec.grain_count));
    std::uint64_t next_index = 0;
    for (int i = 0; i < spec.grain_count; ++i) grains.push_back(draw_grain(spec, next_index++));

    const double mean_radius = 0.5 * (spec.grain_radius_min + spec.grain_radius_max);
    const double grain_area = std::max(std::numbers::pi * mean_radius * mean_radius, 1.0);
    const double area = double(spec.size) * spec.size;
    constexpr double kInnerTol = 0.02;
    constexpr int kMaxIters = 400;

    render_grains(grains, texture, spec.texture_amplitude, img);
    double achieved = porosity(img);
    for (int iter = 0; iter < kMaxIters && std::abs(achieved - spec.porosity_target) > kInnerTol;
         ++iter) {
        // Overlap discounts the effective area of each added grain; step
        // conservatively and re-measure.
        const double deficit = std::abs(achieved - spec.porosity_target);
        const auto step = std::max<std::size_t>(
            1, std::min<std::size_t>(64, std::size_t(deficit * area / (grain_area * 2.0))));
        if (achieved > spec.porosity_target) {
            for (std::size_t i = 0; i < step; ++i) grains.push_back(draw_grain(spec, next_index++));
        } else {
            if (grains.empty()) break;
            grains.resize(grains.size() - std::min(step, grains.size()));
        }
        render_grains(grains, texture, spec.texture_amplitude, img);
        achieved = porosity(img);
    }
    if (std::abs(achieved - spec.porosity_target) > 0.05)
        throw std::runtime_error("rock_phantom: porosity target " +
                                 std::to_string(spec.porosity_target) +
                                 " unreachable, achieved " + std::to_string(achieved));
    return img;
}

} // namespace fluxct
