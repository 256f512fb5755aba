#include "platenet/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "platenet/errors.hpp"

namespace platenet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageU8 read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  std::vector<uint8_t> pixels;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG file: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8 ||
      (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG (need 8-bit grayscale or RGB): " + path.string());
  }
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int channels = color_type == PNG_COLOR_TYPE_GRAY ? 1 : 3;
  pixels.resize(static_cast<size_t>(width) * height * channels);
  row_ptrs.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    row_ptrs[y] = pixels.data() + static_cast<size_t>(y) * width * channels;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return {static_cast<int>(width), static_cast<int>(height), channels, std::move(pixels)};
}

void write_png_impl(const std::filesystem::path& path, int width, int height,
                    int color_type, int channels, const uint8_t* pixels) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed for " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(height));
  for (int y = 0; y < height; ++y) {
    row_ptrs[static_cast<size_t>(y)] =
        const_cast<png_bytep>(pixels + static_cast<size_t>(y) * width * channels);
  }
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageU8 read_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());

  std::string magic;
  file >> magic;
  if (magic != "P5" && magic != "P2") {
    throw IoError("unsupported PGM variant in " + path.string());
  }
  auto next_value = [&]() -> long {
    // Skip whitespace and '#' comment lines between header tokens.
    while (file) {
      const int c = file.peek();
      if (c == '#') {
        std::string line;
        std::getline(file, line);
      } else if (std::isspace(c)) {
        file.get();
      } else {
        break;
      }
    }
    long v = -1;
    file >> v;
    return v;
  };
  const long width = next_value();
  const long height = next_value();
  const long maxval = next_value();
  if (!file || width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
    throw IoError("bad PGM header in " + path.string());
  }
  ImageU8 img{static_cast<int>(width), static_cast<int>(height), 1, {}};
  img.pixels.resize(static_cast<size_t>(width) * height);
  if (magic == "P5") {
    file.get();  // single whitespace after maxval
    file.read(reinterpret_cast<char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (file.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
      throw IoError("truncated PGM data in " + path.string());
    }
  } else {
    for (auto& px : img.pixels) {
      long v = -1;
      file >> v;
      if (!file || v < 0 || v > maxval) throw IoError("bad PGM data in " + path.string());
      px = static_cast<uint8_t>(v);
    }
  }
  return img;
}

}  // namespace

ImageU8 read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw IoError("unsupported image format: " + path.string());
}

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    const uint8_t* pixels) {
  write_png_impl(path, width, height, PNG_COLOR_TYPE_GRAY, 1, pixels);
}

void write_png_rgb(const std::filesystem::path& path, int width, int height,
                   const uint8_t* pixels) {
  write_png_impl(path, width, height, PNG_COLOR_TYPE_RGB, 3, pixels);
}

bool has_supported_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm";
}

}  // namespace platenet
