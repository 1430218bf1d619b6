#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pics/array.hpp"

namespace pics::png {

enum class Mode { magnitude, phase };

Mode parse_mode(const std::string& name);

/// 8-bit RGB pixels, row-major with y down the rows and x along them.
/// Magnitude is a linear gray ramp over [0, max |a|]; phase is a cyclic hue
/// wheel over (-pi, pi] with zero at red.
std::vector<std::uint8_t> render_rgb(const ComplexArray& image, Mode mode);

/// PNG file contents for a 2D array.
std::string encode(const ComplexArray& image, Mode mode);

/// Renders and writes through a temporary file.
void export_png(const ComplexArray& image, Mode mode, const std::filesystem::path& path);

struct Decoded {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> rgb;
};

/// Reads an 8-bit RGB or gray PNG back into RGB triples.
Decoded decode(const std::filesystem::path& path);

}  // namespace pics::png
