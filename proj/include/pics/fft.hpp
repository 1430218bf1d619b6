#pragma once

#include <cstddef>
#include <vector>

#include "pics/array.hpp"

namespace pics {

/// Centered unitary forward DFT along each listed dimension.
///
/// DC sits at index floor(N/2) on input and output; every transformed axis is
/// scaled by 1/sqrt(N), so the transform is norm preserving and ifftc is both
/// its inverse and its adjoint. Odd extents are allowed.
ComplexArray fftc(const ComplexArray& x, const std::vector<std::size_t>& dims);
ComplexArray ifftc(const ComplexArray& x, const std::vector<std::size_t>& dims);

/// Dimensions {0, ..., n-1}.
std::vector<std::size_t> leading_dims(std::size_t n);

/// Zero-pads or crops each dimension symmetrically about the centre index
/// floor(N/2). crop(pad(x)) == x.
ComplexArray resize_center(const ComplexArray& x, const Extents& new_extents);

}  // namespace pics
