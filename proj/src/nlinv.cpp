#include "pics/nlinv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pics/errors.hpp"
#include "pics/fft.hpp"

namespace pics::calib {
namespace {

void require_pattern(const SamplingPattern& pattern, const Extents& grid) {
  if (!pattern.is_cartesian()) throw std::invalid_argument("nlinv needs a Cartesian mask");
  if (pattern.grid() != grid) {
    throw std::invalid_argument("mask extents " + format_extents(pattern.grid()) + " do not match grid " +
                                format_extents(grid));
  }
}

void require_state(const NlinvState& state, const ComplexArray& weights) {
  if (state.x.rank() != 3 || state.x.extent(2) < 2) throw std::invalid_argument("nlinv state must be (X, Y, N+1)");
  if (weights.extents() != state.grid()) throw std::invalid_argument("sobolev weights do not match the grid");
}

void apply_mask(ComplexArray& k, const SamplingPattern& pattern) {
  const std::size_t n = pattern.grid()[0] * pattern.grid()[1], N = k.size() / n;
  const auto& mask = pattern.mask();
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t p = 0; p < n; ++p)
      if (!mask[p]) k[p + c * n] = 0.0;
}

// Coefficient slices 1..N of a state-shaped array rendered as images.
ComplexArray render(const ComplexArray& x, const ComplexArray& weights) {
  const std::size_t X = x.extent(0), Y = x.extent(1), N = x.extent(2) - 1, n = X * Y;
  ComplexArray coeffs({X, Y, N});
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t p = 0; p < n; ++p) coeffs[p + c * n] = weights[p] * x[p + (c + 1) * n];
  return ifftc(coeffs, {0, 1});
}

}  // namespace

ComplexArray sobolev_weights(const Extents& grid, double s, double l) {
  if (grid.size() != 2) throw std::invalid_argument("sobolev_weights: expected a 2D grid");
  ComplexArray w(grid);
  const long cx = static_cast<long>(grid[0] / 2), cy = static_cast<long>(grid[1] / 2);
  for (std::size_t j = 0; j < grid[1]; ++j)
    for (std::size_t i = 0; i < grid[0]; ++i) {
      const double kx = static_cast<double>(static_cast<long>(i) - cx);
      const double ky = static_cast<double>(static_cast<long>(j) - cy);
      w.at({i, j}) = std::pow(1.0 + s * (kx * kx + ky * ky), -l / 2.0);
    }
  return w;
}

NlinvState nlinv_initial(const Extents& grid, std::size_t n_coils) {
  if (grid.size() != 2 || n_coils < 1) throw std::invalid_argument("nlinv_initial: need a 2D grid and N >= 1");
  NlinvState s;
  s.x = ComplexArray({grid[0], grid[1], n_coils + 1});
  for (std::size_t p = 0; p < grid[0] * grid[1]; ++p) s.x[p] = 1.0;
  return s;
}

ComplexArray nlinv_coils(const NlinvState& state, const ComplexArray& weights) {
  require_state(state, weights);
  return render(state.x, weights);
}

ComplexArray nlinv_forward(const NlinvState& state, const ComplexArray& weights, const SamplingPattern& pattern) {
  require_state(state, weights);
  require_pattern(pattern, state.grid());
  ComplexArray c = render(state.x, weights);
  const std::size_t n = weights.size();
  for (std::size_t j = 0; j < state.n_coils(); ++j)
    for (std::size_t p = 0; p < n; ++p) c[p + j * n] *= state.x[p];
  ComplexArray k = fftc(c, {0, 1});
  apply_mask(k, pattern);
  return k;
}

ComplexArray nlinv_derivative(const NlinvState& state, const ComplexArray& weights, const ComplexArray& dx,
                              const SamplingPattern& pattern) {
  require_state(state, weights);
  require_pattern(pattern, state.grid());
  if (dx.extents() != state.x.extents()) throw std::invalid_argument("nlinv_derivative: update extents mismatch");
  const ComplexArray c = render(state.x, weights);
  ComplexArray dc = render(dx, weights);
  const std::size_t n = weights.size();
  for (std::size_t j = 0; j < state.n_coils(); ++j)
    for (std::size_t p = 0; p < n; ++p) dc[p + j * n] = dx[p] * c[p + j * n] + state.x[p] * dc[p + j * n];
  ComplexArray k = fftc(dc, {0, 1});
  apply_mask(k, pattern);
  return k;
}

ComplexArray nlinv_derivative_adjoint(const NlinvState& state, const ComplexArray& weights, const ComplexArray& dy,
                                      const SamplingPattern& pattern) {
  require_state(state, weights);
  require_pattern(pattern, state.grid());
  const std::size_t X = weights.extent(0), Y = weights.extent(1), N = state.n_coils(), n = X * Y;
  if (dy.extents() != Extents{X, Y, N}) throw std::invalid_argument("nlinv_derivative_adjoint: data extents mismatch");
  const ComplexArray c = render(state.x, weights);
  ComplexArray masked = dy;
  apply_mask(masked, pattern);
  ComplexArray z = ifftc(masked, {0, 1});
  ComplexArray out(state.x.extents());
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t p = 0; p < n; ++p) {
      out[p] += std::conj(c[p + j * n]) * z[p + j * n];
      z[p + j * n] *= std::conj(state.x[p]);
    }
  const ComplexArray zk = fftc(z, {0, 1});
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t p = 0; p < n; ++p) out[p + (j + 1) * n] = std::conj(weights[p]) * zk[p + j * n];
  return out;
}

NlinvResult nlinv(const ComplexArray& y, const SamplingPattern& pattern, const NlinvOptions& opt) {
  if (y.rank() != 3) throw std::invalid_argument("nlinv: data must be (X, Y, N)");
  if (opt.newton_steps < 1) throw std::invalid_argument("nlinv: newton_steps must be >= 1");
  if (!(opt.alpha0 > 0.0)) throw std::invalid_argument("nlinv: alpha0 must be > 0");
  if (!(opt.q_reduction > 0.0 && opt.q_reduction < 1.0)) throw std::invalid_argument("nlinv: q must lie in (0, 1)");
  const Extents grid{y.extent(0), y.extent(1)};
  require_pattern(pattern, grid);
  if (!all_finite(y)) throw NumericalError("nlinv: non-finite input data", 0);
  const std::size_t N = y.extent(2), n = grid[0] * grid[1];
  const double X = static_cast<double>(std::max(grid[0], grid[1]));
  const double s = opt.sobolev_s < 0.0 ? 220.0 / (X * X) : opt.sobolev_s;
  const ComplexArray w = sobolev_weights(grid, s, opt.sobolev_l);

  // Work on data scaled to unit mean power per sample so alpha0 has a fixed
  // meaning; the scale is undone on the image at the end.
  ComplexArray data = y;
  apply_mask(data, pattern);
  const double energy = norm_squared(data);
  const double scale =
      energy > 0.0 ? std::sqrt(static_cast<double>(pattern.sample_count() * N) / energy) : 1.0;
  data *= cplx(scale, 0.0);

  NlinvResult res;
  NlinvState state = nlinv_initial(grid, N);
  ComplexArray x0 = state.x;
  if (opt.reference) {
    if (opt.reference->extents() != grid) throw std::invalid_argument("nlinv: reference image extents mismatch");
    for (std::size_t p = 0; p < n; ++p) x0[p] = (*opt.reference)[p] * scale;
  }
  double residual = norm(nlinv_forward(state, w, pattern) - data);
  res.report.objective_trace.push_back(residual / scale);
  std::size_t growth = 0;
  for (std::size_t it = 0; it < opt.newton_steps; ++it) {
    const double alpha = opt.alpha0 * std::pow(opt.q_reduction, static_cast<double>(it));
    state.alpha = alpha;
    ComplexArray rhs = nlinv_derivative_adjoint(state, w, data - nlinv_forward(state, w, pattern), pattern);
    axpy(cplx(alpha, 0.0), x0 - state.x, rhs);
    auto normal = [&](const ComplexArray& d) {
      ComplexArray out = nlinv_derivative_adjoint(state, w, nlinv_derivative(state, w, d, pattern), pattern);
      axpy(cplx(alpha, 0.0), d, out);
      return out;
    };
    solve::Solution step;
    try {
      step = solve::conjugate_gradient(normal, rhs, ComplexArray(state.x.extents()), opt.cg_tol, opt.cg_max_iter);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("nlinv inner cg failed: ") + e.what(), static_cast<long>(it + 1));
    }
    state.x += step.x;
    state.iteration = it + 1;
    const double next = norm(nlinv_forward(state, w, pattern) - data);
    if (!std::isfinite(next)) throw NumericalError("nlinv: non-finite residual", static_cast<long>(it + 1));
    res.report.objective_trace.push_back(next / scale);
    growth = next > residual ? growth + 1 : 0;
    residual = next;
    if (growth >= 3) {
      std::ostringstream dump;
      dump << "newton step " << it + 1 << ", alpha " << alpha << ", residuals:";
      for (double r : res.report.objective_trace) dump << ' ' << r;
      throw DivergenceError("nlinv diverged: residual grew in 3 consecutive steps", static_cast<long>(it + 1),
                            dump.str());
    }
  }
  res.report.iterations = state.iteration;
  res.report.residual_norm = residual / scale;
  res.report.converged = true;

  ComplexArray coils = render(state.x, w);
  ComplexArray image = state.image();
  double max_rss = 0.0;
  std::vector<double> rss(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t j = 0; j < N; ++j) rss[p] += std::norm(coils[p + j * n]);
    rss[p] = std::sqrt(rss[p]);
    max_rss = std::max(max_rss, rss[p]);
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (rss[p] > 1e-9 * max_rss && rss[p] > 0.0) {
      for (std::size_t j = 0; j < N; ++j) coils[p + j * n] /= rss[p];
      image[p] *= rss[p];
    }
  }
  image *= cplx(1.0 / scale, 0.0);
  res.image = std::move(image);
  res.sensitivities.maps = std::move(coils);
  res.state = std::move(state);
  return res;
}

}  // namespace pics::calib
