#pragma once

#include <memory>

#include "pics/array.hpp"
#include "pics/sampling.hpp"
#include "pics/sensitivity.hpp"

namespace pics::op {

/// Matrix-free linear map with its adjoint and normal operator.
///
/// Implementations are immutable after construction; every method is a pure
/// function of its argument.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual ComplexArray apply(const ComplexArray& x) const = 0;
  virtual ComplexArray adjoint(const ComplexArray& y) const = 0;
  /// adjoint(apply(x)) unless a cheaper route exists.
  virtual ComplexArray normal(const ComplexArray& x) const { return adjoint(apply(x)); }

  virtual const Extents& domain() const = 0;
  virtual const Extents& codomain() const = 0;
};

using OperatorHandle = std::shared_ptr<const LinearOperator>;

/// Cartesian SENSE: mask . fftc . (c_j * zero_pad(x)).
///
/// Data arrays are the full (oversampled) grid times coils with zeros outside
/// the mask, coil last. The image is padded from maps.image_extents() to the
/// map grid before multiplication; the adjoint crops back.
OperatorHandle sense_cartesian(const SensitivitySet& maps, const SamplingPattern& pattern);

/// Non-uniform DFT f(k) = sum_r x(r) exp(-2 pi i k.r) / sqrt(X Y) at the
/// trajectory points, computed by Kaiser-Bessel gridding on an oversampled
/// grid. Codomain is (n_points).
OperatorHandle nufft(const SamplingPattern& trajectory, const Extents& image, double oversample = 2.0,
                     int kernel_width = 6);

/// nufft composed with sensitivity maps (oversample factor 1 maps on the image
/// grid). Codomain is (n_points, N).
OperatorHandle sense_nufft(const SensitivitySet& maps, const SamplingPattern& trajectory, double oversample = 2.0,
                           int kernel_width = 6);

/// Same apply/adjoint as `op` (a nufft or sense_nufft handle), with the normal
/// operator replaced by convolution with the point-spread function on a 2x
/// zero-padded grid: two FFTs per call, plus the coil multiplications.
OperatorHandle toeplitz_normal(const OperatorHandle& op);

/// Point-spread kernel (2X, 2Y) used by a toeplitz_normal handle, in the
/// image domain: psf(d) = (1/XY) sum_p exp(2 pi i k_p.d / X).
ComplexArray toeplitz_psf(const OperatorHandle& toeplitz_op);

/// Kaiser-Bessel shape parameter (Beatty et al.) for the given oversampling
/// ratio and kernel width.
double kaiser_bessel_beta(double oversample, int kernel_width);

}  // namespace pics::op
