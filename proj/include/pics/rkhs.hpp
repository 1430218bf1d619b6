#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "pics/array.hpp"
#include "pics/sampling.hpp"
#include "pics/sensitivity.hpp"

// k-space interpolation in the reproducing-kernel Hilbert space spanned by
// the coil-weighted Fourier modes. Offsets and sample locations are integer
// grid points.
namespace pics::rkhs {

/// Kernel table K_st(dk) = integral over the FOV of c_s conj(c_t)
/// exp(-2 pi i r.dk) for integer |dk_x| < X, |dk_y| < Y. The maps are
/// Fourier-upsampled to twice the grid before the products are transformed,
/// so the table is exact for band-limited maps.
struct KernelContext {
  SensitivitySet maps;
  Extents grid;
  ComplexArray table;  // (2X-1, 2Y-1, N, N)

  std::size_t n_coils() const { return table.extent(2); }
  cplx operator()(std::size_t s, std::size_t t, long dkx, long dky) const;
};

KernelContext build_kernel(const SensitivitySet& maps);

/// Gram matrix over the sample set (every coil at every sampled point) with
/// its eigendecomposition, reusable across targets.
class InterpolationSystem {
 public:
  InterpolationSystem(const KernelContext& ctx, const SamplingPattern& samples, double ridge = 0.0);

  const Eigen::MatrixXcd& gram() const { return gram_; }
  const std::vector<KPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size() * n_coils_; }
  double ridge() const { return ridge_; }
  /// Number of eigenvalues dropped by the pseudo-inverse (ridge = 0).
  std::size_t dropped() const { return dropped_; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;

  /// Right-hand side K_jt(target - l) indexed like the unknowns: point index
  /// fastest, coil slowest.
  Eigen::VectorXcd rhs(long target_x, long target_y, std::size_t coil) const;
  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;

 private:
  const KernelContext* ctx_;
  std::vector<KPoint> points_;
  std::size_t n_coils_;
  double ridge_;
  Eigen::MatrixXcd gram_;
  Eigen::MatrixXcd vectors_;
  Eigen::VectorXd inv_values_;
  Eigen::VectorXd values_;
  std::size_t dropped_ = 0;
};

struct Weights {
  Eigen::VectorXcd u;
  Eigen::VectorXcd rhs;
  long target_x = 0, target_y = 0;
  std::size_t coil = 0;
};

Weights solve_weights(const InterpolationSystem& system, long target_x, long target_y, std::size_t coil);

/// sum over samples of f_t(l) u_t,l; samples are (n_points, N).
cplx interpolate(const Weights& weights, const ComplexArray& samples);

/// Power function P with P^2 = K_jj(0) - sum conj(u) K_jt(target - l).
/// Values down to -1e-8 (relative to K_jj(0)) are clamped to zero; anything
/// lower means the weights do not belong to this system.
double power_function(const KernelContext& ctx, const Weights& weights);

/// Power function for coil j at every point of `targets` (k = index -
/// floor(extent/2)), as a real array.
ComplexArray power_map(const KernelContext& ctx, const SamplingPattern& samples, const Extents& targets,
                       std::size_t coil, double ridge = 0.0);

}  // namespace pics::rkhs
