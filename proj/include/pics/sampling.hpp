#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pics/array.hpp"

namespace pics {

/// Continuous k-space location in grid units (cycles per field of view).
struct KPoint {
  double kx = 0.0;
  double ky = 0.0;
  friend bool operator==(const KPoint&, const KPoint&) = default;
};

/// Either a binary Cartesian mask over the grid or an explicit list of
/// trajectory points. Cartesian index i along a dimension of extent N sits at
/// k = i - floor(N/2).
class SamplingPattern {
 public:
  enum class Kind { cartesian, trajectory };

  static SamplingPattern cartesian(Extents grid, std::vector<std::uint8_t> mask, std::size_t acs = 0);
  static SamplingPattern trajectory(Extents grid, std::vector<KPoint> points);

  /// Mask stored as a 0/1 complex array.
  static SamplingPattern from_mask_array(const ComplexArray& mask);
  /// Trajectory stored as a (2, n_points) array.
  static SamplingPattern from_trajectory_array(const ComplexArray& points, Extents grid);

  Kind kind() const noexcept { return kind_; }
  bool is_cartesian() const noexcept { return kind_ == Kind::cartesian; }
  const Extents& grid() const noexcept { return grid_; }
  std::size_t acs_extent() const noexcept { return acs_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  const std::vector<KPoint>& points() const noexcept { return points_; }

  bool sampled(std::size_t i, std::size_t j) const { return mask_[i + grid_[0] * j] != 0; }
  std::size_t sample_count() const;

  /// Sample locations in grid units; for masks, the sampled grid points in
  /// flat (first-index-fastest) order.
  std::vector<KPoint> sample_points() const;

  ComplexArray mask_array() const;
  ComplexArray trajectory_array() const;

 private:
  Kind kind_ = Kind::cartesian;
  Extents grid_;
  std::vector<std::uint8_t> mask_;
  std::vector<KPoint> points_;
  std::size_t acs_ = 0;
};

namespace sampling {

/// Keeps every r1-th index along dim 0 and every r2-th along dim 1, anchored so
/// the centre lines are sampled, plus a fully sampled acs x acs centre block.
SamplingPattern regular_mask(const Extents& grid, std::size_t r1, std::size_t r2, std::size_t acs);

/// Variable-density Poisson-disc mask. The exclusion radius at k is
/// r_min * (1 + |k|/k_max)^density_exponent with k_max the half diagonal of
/// the grid; two samples p, q are at least min(r(p), r(q)) apart. The optional
/// centre block is forced on after generation and is exempt from the spacing
/// rule.
SamplingPattern poisson_disc(const Extents& grid, double r_min, double density_exponent, std::uint64_t seed,
                             std::size_t acs = 0);

/// Exclusion radius used by poisson_disc at location k.
double poisson_radius(const Extents& grid, double r_min, double density_exponent, KPoint k);

/// Diametric spokes at angles i*pi/n_spokes with unit sample spacing along
/// each spoke, t = s - floor(n_samples/2).
SamplingPattern radial_traj(std::size_t n_spokes, std::size_t n_samples, const Extents& grid);

}  // namespace sampling
}  // namespace pics
