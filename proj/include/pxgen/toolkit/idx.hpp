#pragma once

#include "pxgen/model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pxgen::toolkit {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Big-endian IDX. Image pixels are bytes / 255.
std::vector<Image> decode_idx_images(std::string_view bytes);
std::vector<int> decode_idx_labels(std::string_view bytes);

// Pixels are quantized with round(p * 255).
std::string encode_idx_images(std::span<const Image> images);
std::string encode_idx_labels(std::span<const int> labels);

struct IdxFile {
    bool is_labels = false;
    std::vector<Image> images;
    std::vector<int> labels;
};

// Dispatches on the magic number.
IdxFile parse_idx(const std::string& path);
std::vector<Image> read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);

void write_idx(const std::string& path, std::span<const Image> images);
void write_idx_labels(const std::string& path, std::span<const int> labels);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace pxgen::toolkit
