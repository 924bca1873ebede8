#include "fluxct/tomo/sinogram.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fluxct {

static_assert(std::endian::native == std::endian::little,
              "SINF I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'I', 'N', 'F'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kMaxDim = 1u << 20;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("SINF: truncated file");
    return v;
}

} // namespace

void Sinogram::validate() const {
    geometry.validate();
    if (data.size() != std::size_t(geometry.n_views) * std::size_t(geometry.n_detectors))
        throw std::runtime_error("Sinogram: payload size does not match geometry");
    for (float v : data) {
        if (!std::isfinite(v)) throw std::runtime_error("Sinogram: non-finite sample");
        switch (stage) {
        case SinogramStage::LineIntegral:
            if (v < 0.0f) throw std::runtime_error("Sinogram: negative line integral");
            break;
        case SinogramStage::PhotonCounts:
            if (v < 0.0f || v != std::floor(v))
                throw std::runtime_error("Sinogram: counts must be non-negative integers");
            break;
        case SinogramStage::Attenuation:
            break; // noisy flat bins legitimately go slightly negative
        }
    }
}

void write_sinf(const std::string& path, const Sinogram& sino) {
    sino.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("SINF: cannot open for write: " + path);
    os.write(kMagic, 4);
    put(os, kVersion);
    put(os, static_cast<std::uint8_t>(sino.stage));
    put(os, static_cast<std::uint32_t>(sino.geometry.n_views));
    put(os, static_cast<std::uint32_t>(sino.geometry.n_detectors));
    put(os, static_cast<std::uint32_t>(sino.geometry.image_size));
    put(os, sino.geometry.detector_spacing);
    for (double a : sino.geometry.angles) put(os, a);
    os.write(reinterpret_cast<const char*>(sino.data.data()),
             std::streamsize(sino.data.size() * sizeof(float)));
    if (!os) throw std::runtime_error("SINF: write failed: " + path);
}

Sinogram read_sinf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("SINF: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("SINF: bad magic: " + path);
    if (take<std::uint16_t>(is) != kVersion)
        throw std::runtime_error("SINF: unsupported version: " + path);
    const auto stage = take<std::uint8_t>(is);
    if (stage > 2) throw std::runtime_error("SINF: unknown stage: " + path);
    const auto n_views = take<std::uint32_t>(is);
    const auto n_detectors = take<std::uint32_t>(is);
    const auto image_size = take<std::uint32_t>(is);
    if (n_views == 0 || n_views > kMaxDim || n_detectors == 0 || n_detectors > kMaxDim ||
        image_size == 0 || image_size > kMaxDim)
        throw std::runtime_error("SINF: implausible dimensions: " + path);

    Sinogram sino;
    sino.stage = static_cast<SinogramStage>(stage);
    sino.geometry.n_views = int(n_views);
    sino.geometry.n_detectors = int(n_detectors);
    sino.geometry.image_size = int(image_size);
    sino.geometry.detector_spacing = take<double>(is);
    sino.geometry.angles.resize(n_views);
    for (auto& a : sino.geometry.angles) a = take<double>(is);
    sino.data.resize(std::size_t(n_views) * std::size_t(n_detectors));
    is.read(reinterpret_cast<char*>(sino.data.data()),
            std::streamsize(sino.data.size() * sizeof(float)));
    if (!is) throw std::runtime_error("SINF: truncated payload: " + path);
    sino.validate();
    return sino;
}

} // namespace fluxct
