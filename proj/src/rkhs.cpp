#include "pics/rkhs.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pics/fft.hpp"

namespace pics::rkhs {
namespace {

long to_integer(double v, const char* what) {
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9) throw std::invalid_argument(std::string(what) + " must lie on integer grid points");
  return static_cast<long>(r);
}

}  // namespace

cplx KernelContext::operator()(std::size_t s, std::size_t t, long dkx, long dky) const {
  const long X = static_cast<long>(grid[0]), Y = static_cast<long>(grid[1]);
  if (dkx <= -X || dkx >= X || dky <= -Y || dky >= Y) {
    throw std::out_of_range("kernel offset (" + std::to_string(dkx) + ", " + std::to_string(dky) +
                            ") outside the table");
  }
  return table.at({static_cast<std::size_t>(dkx + X - 1), static_cast<std::size_t>(dky + Y - 1), s, t});
}

KernelContext build_kernel(const SensitivitySet& maps) {
  maps.validate();
  if (maps.oversample_factor != 1.0) throw std::invalid_argument("build_kernel expects maps on the image grid");
  KernelContext ctx;
  ctx.maps = maps;
  ctx.grid = maps.spatial_extents();
  const std::size_t X = ctx.grid[0], Y = ctx.grid[1], N = maps.n_coils();
  const Extents fine{2 * X, 2 * Y};
  const std::size_t nf = 4 * X * Y;

  // Trigonometric interpolation of each map onto the doubled grid.
  ComplexArray up = ifftc(resize_center(fftc(maps.maps, {0, 1}), {2 * X, 2 * Y, N}), {0, 1});
  up *= cplx(2.0, 0.0);

  ctx.table = ComplexArray({2 * X - 1, 2 * Y - 1, N, N});
  const double norm = 1.0 / std::sqrt(static_cast<double>(nf));
  ComplexArray prod(fine);
  for (std::size_t t = 0; t < N; ++t)
    for (std::size_t s = 0; s < N; ++s) {
      for (std::size_t p = 0; p < nf; ++p) prod[p] = up[p + s * nf] * std::conj(up[p + t * nf]);
      ComplexArray k = resize_center(fftc(prod, {0, 1}), {2 * X - 1, 2 * Y - 1});
      const std::size_t off = (2 * X - 1) * (2 * Y - 1) * (s + N * t);
      for (std::size_t p = 0; p < k.size(); ++p) ctx.table[off + p] = k[p] * norm;
    }
  return ctx;
}

InterpolationSystem::InterpolationSystem(const KernelContext& ctx, const SamplingPattern& samples, double ridge)
    : ctx_(&ctx), points_(samples.sample_points()), n_coils_(ctx.n_coils()), ridge_(ridge) {
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
  if (samples.grid() != ctx.grid) throw std::invalid_argument("sample grid does not match the kernel grid");
  for (const auto& k : points_) {
    to_integer(k.kx, "sample locations");
    to_integer(k.ky, "sample locations");
  }
  const std::size_t P = points_.size(), n = size();
  gram_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n_coils_; ++s)
    for (std::size_t k = 0; k < P; ++k)
      for (std::size_t t = 0; t < n_coils_; ++t)
        for (std::size_t l = 0; l < P; ++l) {
          const long dx = std::lround(points_[k].kx - points_[l].kx);
          const long dy = std::lround(points_[k].ky - points_[l].ky);
          gram_(static_cast<Eigen::Index>(l + P * t), static_cast<Eigen::Index>(k + P * s)) = ctx(s, t, dx, dy);
        }
  if (n == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram_);
  vectors_ = eig.eigenvectors();
  values_ = eig.eigenvalues();
  inv_values_.resize(values_.size());
  const double cutoff = 1e-13 * values_.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const double v = values_(i) + ridge_;
    if (ridge_ == 0.0 && values_(i) <= cutoff) {
      inv_values_(i) = 0.0;
      ++dropped_;
    } else {
      inv_values_(i) = 1.0 / v;
    }
  }
}

double InterpolationSystem::min_eigenvalue() const { return values_.size() ? values_.minCoeff() : 0.0; }
double InterpolationSystem::max_eigenvalue() const { return values_.size() ? values_.maxCoeff() : 0.0; }

Eigen::VectorXcd InterpolationSystem::rhs(long tx, long ty, std::size_t coil) const {
  if (coil >= n_coils_) throw std::invalid_argument("coil index out of range");
  const std::size_t P = points_.size();
  Eigen::VectorXcd b(static_cast<Eigen::Index>(size()));
  for (std::size_t t = 0; t < n_coils_; ++t)
    for (std::size_t l = 0; l < P; ++l) {
      b(static_cast<Eigen::Index>(l + P * t)) =
          (*ctx_)(coil, t, tx - std::lround(points_[l].kx), ty - std::lround(points_[l].ky));
    }
  return b;
}

Eigen::VectorXcd InterpolationSystem::solve(const Eigen::VectorXcd& b) const {
  if (b.size() != static_cast<Eigen::Index>(size())) throw std::invalid_argument("rhs length mismatch");
  if (size() == 0) return b;
  return vectors_ * (inv_values_.cwiseProduct(vectors_.adjoint() * b).eval());
}

Weights solve_weights(const InterpolationSystem& system, long tx, long ty, std::size_t coil) {
  Weights w;
  w.target_x = tx;
  w.target_y = ty;
  w.coil = coil;
  w.rhs = system.rhs(tx, ty, coil);
  w.u = system.solve(w.rhs);
  return w;
}

cplx interpolate(const Weights& weights, const ComplexArray& samples) {
  if (static_cast<Eigen::Index>(samples.size()) != weights.u.size()) {
    throw std::invalid_argument("interpolate: " + std::to_string(samples.size()) + " samples for " +
                                std::to_string(weights.u.size()) + " weights");
  }
  cplx acc{};
  for (std::size_t i = 0; i < samples.size(); ++i) acc += samples[i] * weights.u(static_cast<Eigen::Index>(i));
  return acc;
}

double power_function(const KernelContext& ctx, const Weights& weights) {
  const double kjj = ctx(weights.coil, weights.coil, 0, 0).real();
  const double p2 = kjj - weights.u.dot(weights.rhs).real();
  if (p2 < -1e-8 * std::max(kjj, 1e-300)) {
    throw std::invalid_argument("power function is negative (" + std::to_string(p2) +
                                "): weights inconsistent with the kernel");
  }
  return std::sqrt(std::max(p2, 0.0));
}

ComplexArray power_map(const KernelContext& ctx, const SamplingPattern& samples, const Extents& targets,
                       std::size_t coil, double ridge) {
  if (targets.size() != 2) throw std::invalid_argument("power_map: targets must be a 2D grid");
  const InterpolationSystem system(ctx, samples, ridge);
  ComplexArray out(targets);
  const long cx = static_cast<long>(targets[0] / 2), cy = static_cast<long>(targets[1] / 2);
  for (std::size_t j = 0; j < targets[1]; ++j)
    for (std::size_t i = 0; i < targets[0]; ++i) {
      const Weights w = solve_weights(system, static_cast<long>(i) - cx, static_cast<long>(j) - cy, coil);
      out.at({i, j}) = power_function(ctx, w);
    }
  return out;
}

}  // namespace pics::rkhs
