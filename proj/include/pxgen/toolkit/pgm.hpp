#pragma once

#include "pxgen/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pxgen::toolkit {

inline constexpr int kGutter = 2;

struct Pgm {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Row-major tiling, 2-pixel white gutters between tiles (none at the border).
// Unused cells in the last row stay white. Pixels are round(p * 255).
Pgm tile_grid(std::span<const Image> images, std::size_t columns);
std::string encode_pgm(const Pgm& img);
Pgm decode_pgm(std::string_view bytes);

void write_grid(std::span<const Image> images, std::size_t columns, const std::string& path);
Pgm read_pgm(const std::string& path);

}  // namespace pxgen::toolkit
