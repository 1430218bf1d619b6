#include "png_export.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "pics/io.hpp"

namespace pics::png {
namespace {

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

// Hue in [0, 1) at full saturation and value.
void hue_to_rgb(double h, std::uint8_t* out) {
  const double s = h * 6.0;
  const int sector = static_cast<int>(std::floor(s)) % 6;
  const double f = s - std::floor(s);
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = 1; g = f; break;
    case 1: r = 1 - f; g = 1; break;
    case 2: g = 1; b = f; break;
    case 3: g = 1 - f; b = 1; break;
    case 4: r = f; b = 1; break;
    default: r = 1; b = 1 - f; break;
  }
  out[0] = quantize(r);
  out[1] = quantize(g);
  out[2] = quantize(b);
}

void write_to_string(png_structp png, png_bytep data, png_size_t length) {
  static_cast<std::string*>(png_get_io_ptr(png))->append(reinterpret_cast<const char*>(data), length);
}

void flush_nothing(png_structp) {}

}  // namespace

Mode parse_mode(const std::string& name) {
  if (name == "magnitude") return Mode::magnitude;
  if (name == "phase") return Mode::phase;
  throw std::invalid_argument("unknown PNG mode '" + name + "' (magnitude or phase)");
}

std::vector<std::uint8_t> render_rgb(const ComplexArray& image, Mode mode) {
  if (image.rank() != 2) throw std::invalid_argument("PNG export needs a 2D array, got " + format_extents(image.extents()));
  const std::size_t W = image.extent(0), H = image.extent(1);
  std::vector<std::uint8_t> rgb(3 * W * H);
  double peak = 0.0;
  for (const cplx& v : image.data()) peak = std::max(peak, std::abs(v));
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const cplx v = image[x + W * y];
      std::uint8_t* px = &rgb[3 * (x + W * y)];
      if (mode == Mode::magnitude) {
        px[0] = px[1] = px[2] = peak > 0.0 ? quantize(std::abs(v) / peak) : 0;
      } else {
        double h = std::arg(v) / (2.0 * std::numbers::pi);
        if (h < 0.0) h += 1.0;
        hue_to_rgb(h, px);
      }
    }
  return rgb;
}

std::string encode(const ComplexArray& image, Mode mode) {
  const std::vector<std::uint8_t> rgb = render_rgb(image, mode);
  const auto W = static_cast<png_uint_32>(image.extent(0)), H = static_cast<png_uint_32>(image.extent(1));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::string out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, write_to_string, flush_nothing);
  png_set_IHDR(png, info, W, H, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < H; ++y) png_write_row(png, const_cast<png_bytep>(&rgb[3 * W * y]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void export_png(const ComplexArray& image, Mode mode, const std::filesystem::path& path) {
  io::write_file_atomic(path, encode(image, mode));
}

Decoded decode(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"), std::fclose);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_read_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("cannot decode " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  Decoded d;
  d.width = png_get_image_width(png, info);
  d.height = png_get_image_height(png, info);
  d.rgb.resize(3 * d.width * d.height);
  for (std::size_t y = 0; y < d.height; ++y) png_read_row(png, &d.rgb[3 * d.width * y], nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace pics::png
