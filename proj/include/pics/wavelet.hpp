#pragma once

#include <cstddef>
#include <memory>

#include "pics/array.hpp"

namespace pics {

/// Orthonormal linear transform used by sparsity penalties.
class Transform {
 public:
  virtual ~Transform() = default;
  virtual ComplexArray forward(const ComplexArray& x) const = 0;
  virtual ComplexArray inverse(const ComplexArray& c) const = 0;
};

using TransformHandle = std::shared_ptr<const Transform>;

/// Separable periodic Daubechies-4 transform over dims 0 and 1, applied
/// independently to every slice of the remaining dims. Coefficients keep the
/// input layout (Mallat ordering: approximation block in the low corner).
ComplexArray dwt(const ComplexArray& x, std::size_t levels = 3);
ComplexArray idwt(const ComplexArray& c, std::size_t levels = 3);

TransformHandle wavelet_transform(std::size_t levels = 3);

}  // namespace pics
