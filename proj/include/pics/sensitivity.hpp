#pragma once

#include <cstddef>
#include <optional>

#include "pics/array.hpp"

namespace pics {

/// Per-coil sensitivity maps c_j on the (possibly oversampled) field of view.
///
/// `maps` has extents (X, Y, N). With oversample_factor o the maps cover o
/// times the image FOV at the image's pixel size, so the image grid is
/// (X/o, Y/o).
struct SensitivitySet {
  ComplexArray maps;
  double oversample_factor = 1.0;
  std::optional<ComplexArray> support;

  std::size_t n_coils() const { return maps.extent(2); }
  Extents spatial_extents() const { return {maps.extent(0), maps.extent(1)}; }
  /// Image grid implied by the oversample factor.
  Extents image_extents() const;
  void validate() const;
};

}  // namespace pics
