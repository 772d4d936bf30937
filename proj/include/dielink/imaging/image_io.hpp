#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "dielink/imaging/gray_image.hpp"

namespace dielink::imaging {

enum class ImageFormat { Png, Jpeg, Tiff, Unknown };

/// BT.709 luma weights.
inline constexpr double kLumaR = 0.2126;
inline constexpr double kLumaG = 0.7152;
inline constexpr double kLumaB = 0.0722;

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept;

/// Luminance of an 8-bit sRGB triple. Gray triples map to v/255 exactly.
float luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

/// Decode PNG, JPEG or TIFF bytes into a luminance image. Alpha is
/// composited onto black. Throws DecodeError.
GrayImage load_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
GrayImage load_image_file(const std::filesystem::path& path);

/// True for file names with a raster extension we decode (png, jpg, jpeg, tif, tiff).
bool has_image_extension(std::string_view name);

/// 8-bit grayscale PNG. Values are quantized to round(v*255).
std::vector<std::uint8_t> encode_png(const GrayImage& img);
/// 8-bit RGB PNG from interleaved rgb bytes (width*height*3).
std::vector<std::uint8_t> encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb);
/// 8-bit grayscale TIFF, uncompressed.
std::vector<std::uint8_t> encode_tiff(const GrayImage& img);
/// 8-bit grayscale baseline JPEG.
std::vector<std::uint8_t> encode_jpeg(const GrayImage& img, int quality = 95);

/// Quantize to 8 bits and back, the value set a grayscale PNG can carry.
GrayImage quantize_8bit(const GrayImage& img);

}  // namespace dielink::imaging
