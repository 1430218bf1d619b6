#include "pics/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "pics/fft.hpp"

namespace pics {

Extents SensitivitySet::image_extents() const {
  return {static_cast<std::size_t>(std::lround(static_cast<double>(maps.extent(0)) / oversample_factor)),
          static_cast<std::size_t>(std::lround(static_cast<double>(maps.extent(1)) / oversample_factor))};
}

void SensitivitySet::validate() const {
  if (maps.rank() != 3) throw std::invalid_argument("sensitivity maps must be (X, Y, N), got " + format_extents(maps.extents()));
  if (!(oversample_factor >= 1.0)) throw std::invalid_argument("oversample factor must be >= 1");
  const Extents img = image_extents();
  if (img[0] < 1 || img[1] < 1 || img[0] > maps.extent(0) || img[1] > maps.extent(1)) {
    throw std::invalid_argument("oversample factor incompatible with map extents");
  }
  if (support && (support->rank() != 2 || support->extent(0) != maps.extent(0) || support->extent(1) != maps.extent(1))) {
    throw std::invalid_argument("support mask extents do not match the maps");
  }
}

namespace op {
namespace {

class SenseCartesian final : public LinearOperator {
 public:
  SenseCartesian(const SensitivitySet& maps, const SamplingPattern& pattern)
      : maps_(maps.maps), image_(maps.image_extents()) {
    maps.validate();
    if (!pattern.is_cartesian()) throw std::invalid_argument("sense_cartesian needs a Cartesian mask");
    grid_ = maps.spatial_extents();
    if (pattern.grid() != grid_) {
      throw std::invalid_argument("mask extents " + format_extents(pattern.grid()) + " do not match map grid " +
                                  format_extents(grid_));
    }
    mask_ = pattern.mask();
    data_ = {grid_[0], grid_[1], maps.n_coils()};
  }

  ComplexArray apply(const ComplexArray& x) const override {
    if (x.extents() != image_) {
      throw std::invalid_argument("sense apply: image extents " + format_extents(x.extents()) + ", expected " +
                                  format_extents(image_));
    }
    const ComplexArray padded = image_ == grid_ ? x : resize_center(x, grid_);
    const std::size_t n = padded.size(), N = data_[2];
    ComplexArray coil(data_);
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t p = 0; p < n; ++p) coil[p + c * n] = padded[p] * maps_[p + c * n];
    ComplexArray y = fftc(coil, {0, 1});
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t p = 0; p < n; ++p)
        if (!mask_[p]) y[p + c * n] = 0.0;
    return y;
  }

  ComplexArray adjoint(const ComplexArray& y) const override {
    if (y.extents() != data_) {
      throw std::invalid_argument("sense adjoint: data extents " + format_extents(y.extents()) + ", expected " +
                                  format_extents(data_));
    }
    const std::size_t n = grid_[0] * grid_[1], N = data_[2];
    ComplexArray masked = y;
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t p = 0; p < n; ++p)
        if (!mask_[p]) masked[p + c * n] = 0.0;
    const ComplexArray z = ifftc(masked, {0, 1});
    ComplexArray sum(grid_);
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t p = 0; p < n; ++p) sum[p] += std::conj(maps_[p + c * n]) * z[p + c * n];
    return image_ == grid_ ? sum : resize_center(sum, image_);
  }

  const Extents& domain() const override { return image_; }
  const Extents& codomain() const override { return data_; }

 private:
  ComplexArray maps_;
  Extents image_, grid_, data_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace

OperatorHandle sense_cartesian(const SensitivitySet& maps, const SamplingPattern& pattern) {
  return std::make_shared<SenseCartesian>(maps, pattern);
}

}  // namespace op
}  // namespace pics
