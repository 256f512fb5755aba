#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace platenet {

// Decoded 8-bit raster, row-major, channels interleaved.
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 (gray) or 3 (RGB)
  std::vector<uint8_t> pixels;
};

// Reads an 8-bit grayscale or RGB PNG, or a binary (P5) / ASCII (P2) PGM.
// Anything else is an IoError.
ImageU8 read_image(const std::filesystem::path& path);

// Writes an 8-bit grayscale PNG. Output bytes are a pure function of the
// pixel data.
void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const uint8_t* pixels);

// Writes an 8-bit RGB PNG from interleaved pixels.
void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const uint8_t* pixels);

bool has_supported_extension(const std::filesystem::path& path);

}  // namespace platenet
