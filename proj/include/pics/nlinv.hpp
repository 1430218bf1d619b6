#pragma once

#include <cstddef>
#include <optional>

#include "pics/array.hpp"
#include "pics/sampling.hpp"
#include "pics/sensitivity.hpp"
#include "pics/solvers.hpp"

namespace pics::calib {

/// Joint unknown x = (m, a_1..a_N) stored as a (X, Y, N+1) array: slice 0 is
/// the image, slice j+1 the Sobolev-weighted k-space coefficients of coil j,
/// c_j = ifftc(w * a_j).
struct NlinvState {
  ComplexArray x;
  double alpha = 1.0;
  std::size_t iteration = 0;

  Extents grid() const { return {x.extent(0), x.extent(1)}; }
  std::size_t n_coils() const { return x.extent(2) - 1; }
  ComplexArray image() const { return x.slice_last(0); }
};

struct NlinvOptions {
  std::size_t newton_steps = 10;
  double alpha0 = 1.0;
  double q_reduction = 0.5;
  /// Negative means the default 220 / X^2 (X the larger grid extent).
  double sobolev_s = -1.0;
  double sobolev_l = 16.0;
  std::size_t cg_max_iter = 100;
  double cg_tol = 1e-5;
  /// Image the quadratic penalty pulls towards, in the data's scale; the
  /// constant initial image if absent. Coil coefficients are always pulled
  /// towards zero.
  std::optional<ComplexArray> reference;
};

struct NlinvResult {
  ComplexArray image;
  SensitivitySet sensitivities;
  solve::SolveReport report;  // objective_trace: data residual after each step
  NlinvState state;
};

/// w(k) = (1 + s |k|^2)^(-l/2) on the centred integer grid.
ComplexArray sobolev_weights(const Extents& grid, double s, double l);

/// Initial guess m = 1, c = 0.
NlinvState nlinv_initial(const Extents& grid, std::size_t n_coils);

/// Coil maps c_j rendered from the state, (X, Y, N).
ComplexArray nlinv_coils(const NlinvState& state, const ComplexArray& weights);

/// P fftc(m c_j), zero-filled (X, Y, N).
ComplexArray nlinv_forward(const NlinvState& state, const ComplexArray& weights, const SamplingPattern& pattern);
/// P fftc(dm c_j + m dc_j).
ComplexArray nlinv_derivative(const NlinvState& state, const ComplexArray& weights, const ComplexArray& dx,
                              const SamplingPattern& pattern);
ComplexArray nlinv_derivative_adjoint(const NlinvState& state, const ComplexArray& weights, const ComplexArray& dy,
                                      const SamplingPattern& pattern);

/// Iteratively regularized Gauss-Newton reconstruction from zero-filled
/// Cartesian data y (X, Y, N). Sensitivities are normalized to unit
/// root-sum-of-squares with the image absorbing the scale.
NlinvResult nlinv(const ComplexArray& y, const SamplingPattern& pattern, const NlinvOptions& options = {});

}  // namespace pics::calib
