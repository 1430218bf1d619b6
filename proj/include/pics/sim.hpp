#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "pics/array.hpp"
#include "pics/sampling.hpp"
#include "pics/sensitivity.hpp"

// Analytic multi-coil simulation. Everything here is evaluated in closed
// form so reconstructions are never tested on data produced by their own
// discretization.
namespace pics::sim {

/// Uniform ellipse in FOV units (the FOV is [-0.5, 0.5)^2).
struct Ellipse {
  double cx = 0.0, cy = 0.0;
  double a = 0.0, b = 0.0;  // semi-axes along x and y before rotation
  double angle = 0.0;       // radians, counter-clockwise
  cplx amplitude{1.0, 0.0};
};

/// Ten-ellipse Shepp-Logan head scaled into the FOV (same list as
/// data/shepp_logan.txt).
std::vector<Ellipse> shepp_logan();

/// `cx cy a b angle re im` per line; '#' starts a comment.
std::vector<Ellipse> read_ellipses(const std::filesystem::path& path);
void write_ellipses(const std::filesystem::path& path, const std::vector<Ellipse>& ellipses);

/// Exact continuous Fourier transform of the ellipse superposition,
/// f(k) = integral m(r) exp(-2 pi i k.r) dr.
cplx phantom_kspace(const std::vector<Ellipse>& ellipses, KPoint k);
ComplexArray phantom_kspace(const std::vector<Ellipse>& ellipses, std::span<const KPoint> points);

/// Analytic values on the integer grid k = index - floor(N/2).
ComplexArray phantom_grid_kspace(const std::vector<Ellipse>& ellipses, const Extents& grid);

/// Band-limited image: the truncated Fourier series of the phantom sampled at
/// the pixel centres, sqrt(XY) * ifftc(phantom_grid_kspace).
ComplexArray phantom_image(const std::vector<Ellipse>& ellipses, const Extents& grid);

/// sqrt of the number of grid points: converts physical k-space values into
/// the unitary-FFT convention used by the operators.
double grid_scale(const Extents& grid);

/// Low-order Fourier coefficients of each coil sensitivity, shape (K, K, N),
/// centred at DC: c_j(r) = sum_q coeffs(q, j) exp(2 pi i q.r).
struct CoilFilter {
  ComplexArray coeffs;
  std::size_t kernel_size() const { return coeffs.extent(0); }
  std::size_t n_coils() const { return coeffs.extent(2); }
};

struct SensitivityOptions {
  std::size_t kernel_size = 7;
  /// Width (in k-space samples) of the Gaussian decay envelope.
  double decay = 1.5;
  /// Only the DC coefficient is drawn (constant maps).
  bool dc_only = false;
  double rss_floor = 0.2;
};

/// Evaluates the coil filter on a grid. With fov_scale s the grid spans s FOVs
/// at pixel size 1/X_image, i.e. r_n = (n - floor(N/2)) * s / N.
ComplexArray render_sensitivities(const CoilFilter& filter, const Extents& grid, double fov_scale = 1.0);

/// Seeded random coil filters (Gaussian envelope on complex normal draws),
/// scaled so the maximum root-sum-of-squares over the FOV is 1 and the minimum
/// is at least rss_floor. The rendered maps cover grid (oversample 1).
std::pair<SensitivitySet, CoilFilter> gen_sensitivities(std::size_t n_coils, const Extents& grid,
                                                        std::uint64_t seed, const SensitivityOptions& options = {});

/// Analytic coil k-space: sum_q coeffs_j(q) * phantom_kspace(k - q) for every
/// sample of the pattern. Cartesian patterns give a zero-filled (X, Y, N)
/// array, trajectories give (n_points, N). Values are physical (not grid
/// scaled).
ComplexArray synth_multicoil_kspace(const std::vector<Ellipse>& ellipses, const CoilFilter& filter,
                                    const SamplingPattern& pattern);

/// Same as synth_multicoil_kspace at arbitrary points, (n_points, N).
ComplexArray synth_multicoil_points(const std::vector<Ellipse>& ellipses, const CoilFilter& filter,
                                    std::span<const KPoint> points);

/// Ground-truth coil images c_j * m on the grid, using the band-limited
/// phantom image and rendered maps.
ComplexArray coil_images(const ComplexArray& image, const SensitivitySet& maps);

struct NoiseModel {
  Eigen::MatrixXcd covariance;
  std::uint64_t seed = 0;
};

/// Adds complex Gaussian noise with the given inter-coil covariance (coil is
/// the last dimension). With a mask only sampled locations receive noise.
/// Draws come from a counter-based generator keyed on (seed, element index),
/// so the realization does not depend on evaluation order.
ComplexArray add_noise(const ComplexArray& y, const NoiseModel& model, const std::vector<std::uint8_t>* mask = nullptr);

struct Whitened {
  ComplexArray data;
  Eigen::MatrixXcd whitening;  // L^{-1}, covariance = L L^H
};

/// Applies the inverse Cholesky factor across the coil dimension.
Whitened whiten(const ComplexArray& y, const Eigen::MatrixXcd& covariance);

/// Standard normal pair from the counter-based generator.
std::pair<double, double> counter_normal_pair(std::uint64_t seed, std::uint64_t counter);

}  // namespace pics::sim
