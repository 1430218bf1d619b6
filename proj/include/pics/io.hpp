#pragma once

#include <filesystem>
#include <string>

#include "pics/array.hpp"

namespace pics::io {

/// First line of every header file.
inline constexpr const char* kHeaderMagic = "# pics-array v1";

/// Reads `<base>.hdr` / `<base>.dat`. Throws std::runtime_error on malformed
/// headers or when the data length does not match the extents (16 bytes per
/// element, little-endian float64 pairs, first dimension fastest).
ComplexArray read_array(const std::string& base);

/// Writes `<base>.hdr` / `<base>.dat`. Each file goes to a temporary next to
/// its destination and is renamed into place.
void write_array(const std::string& base, const ComplexArray& array);

bool array_exists(const std::string& base);

/// NumPy .npy interchange (complex128, either memory order on read,
/// Fortran order on write so the element order matches the .dat layout).
ComplexArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const ComplexArray& array);

/// Write `bytes` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace pics::io
