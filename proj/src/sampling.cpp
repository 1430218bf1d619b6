#include "pics/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace pics {

SamplingPattern SamplingPattern::cartesian(Extents grid, std::vector<std::uint8_t> mask, std::size_t acs) {
  if (grid.size() != 2) throw std::invalid_argument("cartesian pattern needs a 2D grid");
  if (mask.size() != element_count(grid)) throw std::invalid_argument("mask size does not match grid");
  for (auto& m : mask) {
    if (m > 1) throw std::invalid_argument("mask values must be 0 or 1");
  }
  SamplingPattern p;
  p.kind_ = Kind::cartesian;
  p.grid_ = std::move(grid);
  p.mask_ = std::move(mask);
  p.acs_ = acs;
  if (p.sample_count() == 0) throw std::invalid_argument("cartesian mask has no samples");
  return p;
}

SamplingPattern SamplingPattern::trajectory(Extents grid, std::vector<KPoint> points) {
  if (grid.size() != 2) throw std::invalid_argument("trajectory pattern needs a 2D grid");
  const double hx = static_cast<double>(grid[0]) / 2.0, hy = static_cast<double>(grid[1]) / 2.0;
  for (const auto& k : points) {
    if (!std::isfinite(k.kx) || !std::isfinite(k.ky)) throw std::invalid_argument("trajectory point is not finite");
    if (std::abs(k.kx) > hx || std::abs(k.ky) > hy) {
      throw std::invalid_argument("trajectory point (" + std::to_string(k.kx) + ", " + std::to_string(k.ky) +
                                  ") lies outside the grid " + format_extents(grid));
    }
  }
  SamplingPattern p;
  p.kind_ = Kind::trajectory;
  p.grid_ = std::move(grid);
  p.points_ = std::move(points);
  return p;
}

SamplingPattern SamplingPattern::from_mask_array(const ComplexArray& mask) {
  if (mask.rank() != 2) throw std::invalid_argument("mask array must be 2D, got " + format_extents(mask.extents()));
  std::vector<std::uint8_t> m(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const cplx v = mask[i];
    if (v == cplx(1.0, 0.0)) {
      m[i] = 1;
    } else if (v != cplx(0.0, 0.0)) {
      throw std::invalid_argument("mask values must be 0 or 1");
    }
  }
  return cartesian(mask.extents(), std::move(m));
}

SamplingPattern SamplingPattern::from_trajectory_array(const ComplexArray& points, Extents grid) {
  if (points.rank() != 2 || points.extent(0) != 2) {
    throw std::invalid_argument("trajectory array must have extents (2, n_points)");
  }
  std::vector<KPoint> pts(points.extent(1));
  for (std::size_t p = 0; p < pts.size(); ++p) pts[p] = {points.at({0, p}).real(), points.at({1, p}).real()};
  return trajectory(std::move(grid), std::move(pts));
}

std::size_t SamplingPattern::sample_count() const {
  if (kind_ == Kind::trajectory) return points_.size();
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::vector<KPoint> SamplingPattern::sample_points() const {
  if (kind_ == Kind::trajectory) return points_;
  std::vector<KPoint> out;
  const long cx = static_cast<long>(grid_[0] / 2), cy = static_cast<long>(grid_[1] / 2);
  for (std::size_t j = 0; j < grid_[1]; ++j)
    for (std::size_t i = 0; i < grid_[0]; ++i)
      if (sampled(i, j)) out.push_back({static_cast<double>(static_cast<long>(i) - cx),
                                        static_cast<double>(static_cast<long>(j) - cy)});
  return out;
}

ComplexArray SamplingPattern::mask_array() const {
  if (kind_ != Kind::cartesian) throw std::logic_error("mask_array on a trajectory pattern");
  ComplexArray out(grid_);
  for (std::size_t i = 0; i < mask_.size(); ++i) out[i] = mask_[i] ? 1.0 : 0.0;
  return out;
}

ComplexArray SamplingPattern::trajectory_array() const {
  if (kind_ != Kind::trajectory) throw std::logic_error("trajectory_array on a cartesian pattern");
  ComplexArray out({2, std::max<std::size_t>(points_.size(), 1)});
  for (std::size_t p = 0; p < points_.size(); ++p) {
    out.at({0, p}) = points_[p].kx;
    out.at({1, p}) = points_[p].ky;
  }
  return out;
}

namespace sampling {
namespace {

void require_grid2(const Extents& grid) {
  if (grid.size() != 2) throw std::invalid_argument("sampling: expected a 2D grid");
}

void stamp_acs(const Extents& grid, std::size_t acs, std::vector<std::uint8_t>& mask) {
  if (acs == 0) return;
  if (acs > std::min(grid[0], grid[1])) {
    throw std::invalid_argument("ACS size " + std::to_string(acs) + " exceeds grid " + format_extents(grid));
  }
  const std::size_t x0 = grid[0] / 2 - acs / 2, y0 = grid[1] / 2 - acs / 2;
  for (std::size_t j = y0; j < y0 + acs; ++j)
    for (std::size_t i = x0; i < x0 + acs; ++i) mask[i + grid[0] * j] = 1;
}

}  // namespace

SamplingPattern regular_mask(const Extents& grid, std::size_t r1, std::size_t r2, std::size_t acs) {
  require_grid2(grid);
  if (r1 < 1 || r2 < 1) throw std::invalid_argument("regular_mask: reduction factors must be >= 1");
  if (acs > std::min(grid[0], grid[1])) {
    throw std::invalid_argument("regular_mask: ACS size " + std::to_string(acs) + " exceeds grid " +
                                format_extents(grid));
  }
  std::vector<std::uint8_t> mask(element_count(grid), 0);
  const std::size_t cx = grid[0] / 2, cy = grid[1] / 2;
  for (std::size_t j = 0; j < grid[1]; ++j) {
    const std::size_t dj = (j + grid[1] * r2 - cy) % r2;
    for (std::size_t i = 0; i < grid[0]; ++i) {
      const std::size_t di = (i + grid[0] * r1 - cx) % r1;
      if (di == 0 && dj == 0) mask[i + grid[0] * j] = 1;
    }
  }
  stamp_acs(grid, acs, mask);
  return SamplingPattern::cartesian(grid, std::move(mask), acs);
}

double poisson_radius(const Extents& grid, double r_min, double density_exponent, KPoint k) {
  const double kmax = std::hypot(static_cast<double>(grid[0]) / 2.0, static_cast<double>(grid[1]) / 2.0);
  return r_min * std::pow(1.0 + std::hypot(k.kx, k.ky) / kmax, density_exponent);
}

SamplingPattern poisson_disc(const Extents& grid, double r_min, double density_exponent, std::uint64_t seed,
                             std::size_t acs) {
  require_grid2(grid);
  if (!(r_min > 0.0)) throw std::invalid_argument("poisson_disc: r_min must be positive");
  const long nx = static_cast<long>(grid[0]), ny = static_cast<long>(grid[1]);
  const long cx = nx / 2, cy = ny / 2;
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  constexpr int kCandidates = 30;

  struct Sample {
    KPoint k;
    double r;
  };
  std::vector<Sample> samples;
  std::vector<std::uint8_t> mask(element_count(grid), 0);
  std::vector<std::size_t> active;

  auto radius = [&](KPoint k) { return poisson_radius(grid, r_min, density_exponent, k); };
  auto accept = [&](KPoint k) {
    samples.push_back({k, radius(k)});
    mask[static_cast<std::size_t>(static_cast<long>(k.kx) + cx) +
         grid[0] * static_cast<std::size_t>(static_cast<long>(k.ky) + cy)] = 1;
    active.push_back(samples.size() - 1);
  };
  accept({0.0, 0.0});

  while (!active.empty()) {
    const std::size_t slot = static_cast<std::size_t>(uniform() * static_cast<double>(active.size()));
    const Sample base = samples[active[slot]];
    bool found = false;
    for (int t = 0; t < kCandidates && !found; ++t) {
      const double rad = base.r * (1.0 + uniform());
      const double ang = 2.0 * std::numbers::pi * uniform();
      const long ix = std::lround(base.k.kx + rad * std::cos(ang));
      const long iy = std::lround(base.k.ky + rad * std::sin(ang));
      if (ix < -cx || ix >= nx - cx || iy < -cy || iy >= ny - cy) continue;
      if (mask[static_cast<std::size_t>(ix + cx) + grid[0] * static_cast<std::size_t>(iy + cy)]) continue;
      const KPoint cand{static_cast<double>(ix), static_cast<double>(iy)};
      const double rc = radius(cand);
      bool ok = true;
      for (const auto& s : samples) {
        if (std::hypot(s.k.kx - cand.kx, s.k.ky - cand.ky) < std::min(rc, s.r)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        accept(cand);
        found = true;
      }
    }
    if (!found) {
      active[slot] = active.back();
      active.pop_back();
    }
  }
  stamp_acs(grid, acs, mask);
  return SamplingPattern::cartesian(grid, std::move(mask), acs);
}

SamplingPattern radial_traj(std::size_t n_spokes, std::size_t n_samples, const Extents& grid) {
  require_grid2(grid);
  if (n_spokes < 1) throw std::invalid_argument("radial_traj: n_spokes must be >= 1");
  if (n_samples < 2) throw std::invalid_argument("radial_traj: need at least 2 samples per spoke");
  std::vector<KPoint> pts;
  pts.reserve(n_spokes * n_samples);
  const long half = static_cast<long>(n_samples / 2);
  for (std::size_t s = 0; s < n_spokes; ++s) {
    const double theta = std::numbers::pi * static_cast<double>(s) / static_cast<double>(n_spokes);
    const double c = std::cos(theta), sn = std::sin(theta);
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double t = static_cast<double>(static_cast<long>(i) - half);
      pts.push_back({t * c, t * sn});
    }
  }
  return SamplingPattern::trajectory(grid, std::move(pts));
}

}  // namespace sampling
}  // namespace pics
