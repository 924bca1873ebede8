#include "fluxct/core/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace fluxct {

namespace {

constexpr std::uint16_t kImgfVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("IMGF: truncated file");
    return v;
}

} // namespace

void write_imgf(const std::filesystem::path& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("IMGF: cannot open for write: " + path.string());
    os.write("IMGF", 4);
    put<std::uint16_t>(os, kImgfVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(img.width));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(img.height));
    put<double>(os, img.lo);
    put<double>(os, img.hi);
    os.write(reinterpret_cast<const char*>(img.data.data()),
             static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (!os) throw std::runtime_error("IMGF: write failed: " + path.string());
}

Image read_imgf(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("IMGF: cannot open: " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "IMGF", 4) != 0)
        throw std::runtime_error("IMGF: bad magic: " + path.string());
    const auto version = get<std::uint16_t>(is);
    if (version != kImgfVersion)
        throw std::runtime_error("IMGF: unsupported version");
    const auto w = get<std::uint32_t>(is);
    const auto h = get<std::uint32_t>(is);
    if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
        throw std::runtime_error("IMGF: implausible dimensions");
    Image img(static_cast<int>(w), static_cast<int>(h));
    img.lo = get<double>(is);
    img.hi = get<double>(is);
    is.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size() * sizeof(float)));
    if (!is) throw std::runtime_error("IMGF: truncated payload: " + path.string());
    return img;
}

void write_pgm16(const std::filesystem::path& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("PGM: cannot open for write: " + path.string());
    os << "P5\n" << img.width << " " << img.height << "\n65535\n";
    std::vector<unsigned char> row(std::size_t(img.width) * 2);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const double v = std::clamp(static_cast<double>(img.at(r, c)), 0.0, 1.0);
            const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
            row[std::size_t(c) * 2] = static_cast<unsigned char>(q >> 8); // PGM is big-endian
            row[std::size_t(c) * 2 + 1] = static_cast<unsigned char>(q & 0xff);
        }
        os.write(reinterpret_cast<const char*>(row.data()),
                 static_cast<std::streamsize>(row.size()));
    }
    if (!os) throw std::runtime_error("PGM: write failed: " + path.string());
}

} // namespace fluxct
