#pragma once

#include <filesystem>
#include <string>

#include "fluxct/core/image.hpp"

namespace fluxct {

// IMGF: "IMGF" magic, version u16, width u32, height u32, lo f64, hi f64,
// then width*height little-endian f32, row-major. Round-trips bit-exactly.
void write_imgf(const std::filesystem::path& path, const Image& img);
Image read_imgf(const std::filesystem::path& path);

// 16-bit binary PGM (P5) for inspection; [0,1] maps to [0, 65535].
void write_pgm16(const std::filesystem::path& path, const Image& img);

} // namespace fluxct
