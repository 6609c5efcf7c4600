#include "pxgen/toolkit/pgm.hpp"

#include "pxgen/errors.hpp"
#include "pxgen/toolkit/idx.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace pxgen::toolkit {

Pgm tile_grid(std::span<const Image> images, std::size_t columns) {
    if (images.empty()) {
        throw InvalidArgument("grid: no images");
    }
    if (columns < 1) {
        throw InvalidArgument("grid: columns must be at least 1");
    }
    const int w = images[0].width;
    const int h = images[0].height;
    for (const auto& im : images) {
        if (im.width != w || im.height != h) {
            throw InvalidArgument("grid: images differ in size");
        }
    }
    const std::size_t cols = std::min(columns, images.size());
    const std::size_t rows = (images.size() + cols - 1) / cols;

    Pgm g;
    g.width = static_cast<int>(cols) * w + (static_cast<int>(cols) - 1) * kGutter;
    g.height = static_cast<int>(rows) * h + (static_cast<int>(rows) - 1) * kGutter;
    g.pixels.assign(static_cast<std::size_t>(g.width) * g.height, 255);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const int ox = static_cast<int>(i % cols) * (w + kGutter);
        const int oy = static_cast<int>(i / cols) * (h + kGutter);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                g.pixels[static_cast<std::size_t>(oy + y) * g.width + (ox + x)] =
                    static_cast<std::uint8_t>(std::lround(images[i].at(x, y) * 255.0));
            }
        }
    }
    return g;
}

std::string encode_pgm(const Pgm& img) {
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                      "\n255\n";
    out.append(img.pixels.begin(), img.pixels.end());
    return out;
}

Pgm decode_pgm(std::string_view bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip_space();
        const std::size_t start = pos;
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 20) {
                throw FormatError("pgm: number too large at offset " + std::to_string(start));
            }
            ++pos;
        }
        if (pos == start) {
            throw FormatError("pgm: expected a number at offset " + std::to_string(start));
        }
        return static_cast<int>(v);
    };
    if (bytes.substr(0, 2) != "P5") {
        throw FormatError("pgm: bad magic at offset 0");
    }
    pos = 2;
    Pgm img;
    img.width = number();
    img.height = number();
    const int maxval = number();
    if (maxval != 255) {
        throw FormatError("pgm: unsupported maxval " + std::to_string(maxval));
    }
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw FormatError("pgm: missing separator at offset " + std::to_string(pos));
    }
    ++pos;
    const std::size_t need = static_cast<std::size_t>(img.width) * img.height;
    if (bytes.size() - pos != need) {
        throw FormatError("pgm: raster at offset " + std::to_string(pos) + " holds " +
                          std::to_string(bytes.size() - pos) + " bytes, expected " +
                          std::to_string(need));
    }
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return img;
}

void write_grid(std::span<const Image> images, std::size_t columns, const std::string& path) {
    write_file(path, encode_pgm(tile_grid(images, columns)));
}

Pgm read_pgm(const std::string& path) { return decode_pgm(read_file(path)); }

}  // namespace pxgen::toolkit
