#include "pxgen/toolkit/idx.hpp"

#include "pxgen/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

namespace pxgen::toolkit {

namespace {

std::uint32_t read_u32_be(std::string_view bytes, std::size_t offset) {
    if (offset + 4 > bytes.size()) {
        throw FormatError("idx: truncated header at offset " + std::to_string(offset));
    }
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        v = (v << 8) | static_cast<unsigned char>(bytes[offset + i]);
    }
    return v;
}

void append_u32_be(std::string& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<char>((v >> shift) & 0xFF));
    }
}

void expect_magic(std::string_view bytes, std::uint32_t magic) {
    const std::uint32_t got = read_u32_be(bytes, 0);
    if (got != magic) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "idx: bad magic 0x%08x at offset 0", got);
        throw FormatError(buf);
    }
}

void expect_payload(std::string_view bytes, std::size_t at, std::size_t need) {
    if (bytes.size() - at < need) {
        throw FormatError("idx: payload truncated at offset " + std::to_string(bytes.size()) +
                          ", expected " + std::to_string(at + need) + " bytes");
    }
    if (bytes.size() - at > need) {
        throw FormatError("idx: trailing bytes at offset " + std::to_string(at + need));
    }
}

}  // namespace

std::vector<Image> decode_idx_images(std::string_view bytes) {
    expect_magic(bytes, kIdxImageMagic);
    const std::size_t n = read_u32_be(bytes, 4);
    const std::size_t rows = read_u32_be(bytes, 8);
    const std::size_t cols = read_u32_be(bytes, 12);
    if (n > 0 && (rows == 0 || cols == 0)) {
        throw FormatError("idx: zero image dimension at offset 8");
    }
    const std::size_t per = rows * cols;
    expect_payload(bytes, 16, n * per);
    std::vector<Image> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> px(per);
        for (std::size_t j = 0; j < per; ++j) {
            px[j] = static_cast<unsigned char>(bytes[16 + i * per + j]) / 255.0;
        }
        out.emplace_back(static_cast<int>(cols), static_cast<int>(rows), std::move(px));
    }
    return out;
}

std::vector<int> decode_idx_labels(std::string_view bytes) {
    expect_magic(bytes, kIdxLabelMagic);
    const std::size_t n = read_u32_be(bytes, 4);
    expect_payload(bytes, 8, n);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<unsigned char>(bytes[8 + i]);
    }
    return out;
}

std::string encode_idx_images(std::span<const Image> images) {
    std::string out;
    const int w = images.empty() ? 0 : images[0].width;
    const int h = images.empty() ? 0 : images[0].height;
    append_u32_be(out, kIdxImageMagic);
    append_u32_be(out, static_cast<std::uint32_t>(images.size()));
    append_u32_be(out, static_cast<std::uint32_t>(h));
    append_u32_be(out, static_cast<std::uint32_t>(w));
    for (const auto& im : images) {
        if (im.width != w || im.height != h) {
            throw InvalidArgument("idx: images differ in size");
        }
        for (double p : im.pixels) {
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
        }
    }
    return out;
}

std::string encode_idx_labels(std::span<const int> labels) {
    std::string out;
    append_u32_be(out, kIdxLabelMagic);
    append_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        if (l < 0 || l > 255) {
            throw InvalidArgument("idx: label " + std::to_string(l) + " does not fit a byte");
        }
        out.push_back(static_cast<char>(l));
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

IdxFile parse_idx(const std::string& path) {
    const std::string bytes = read_file(path);
    IdxFile f;
    if (read_u32_be(bytes, 0) == kIdxLabelMagic) {
        f.is_labels = true;
        f.labels = decode_idx_labels(bytes);
    } else {
        f.images = decode_idx_images(bytes);
    }
    return f;
}

std::vector<Image> read_idx_images(const std::string& path) {
    return decode_idx_images(read_file(path));
}

std::vector<int> read_idx_labels(const std::string& path) {
    return decode_idx_labels(read_file(path));
}

void write_idx(const std::string& path, std::span<const Image> images) {
    write_file(path, encode_idx_images(images));
}

void write_idx_labels(const std::string& path, std::span<const int> labels) {
    write_file(path, encode_idx_labels(labels));
}

}  // namespace pxgen::toolkit
