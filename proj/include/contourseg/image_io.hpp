#pragma once

#include "contourseg/geometry.hpp"
#include "contourseg/mask.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace contourseg {

using Bytes = std::vector<std::uint8_t>;

// Interleaved 8-bit RGB.
struct RgbImage {
    Dims dims;
    std::vector<std::uint8_t> rgb;

    std::uint8_t at(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * dims.width + x) * 3 + c];
    }
};

struct GrayImage {
    Dims dims;
    std::vector<std::uint8_t> pixels;
};

/// Dimensions from the PNG/JPEG header without decoding pixels.
Dims probe_image_dims(std::span<const std::uint8_t> bytes);

/// PNG or JPEG to RGB. `max_pixels` of 0 disables the size check; larger
/// images raise ImageTooLarge before pixel data is touched.
RgbImage decode_image(std::span<const std::uint8_t> bytes, std::size_t max_pixels = 0);

GrayImage decode_gray_png(std::span<const std::uint8_t> bytes);

Bytes encode_rgb_png(const RgbImage& image);
Bytes encode_gray_png(const GrayImage& image);

/// Masks on disk and on the wire: 8-bit single channel, nonzero = foreground.
PixelMask decode_mask_png(std::span<const std::uint8_t> bytes);
Bytes encode_mask_png(const PixelMask& mask);

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on malformed input.
Bytes base64_decode(std::string_view text);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace contourseg
