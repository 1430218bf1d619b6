#include "pics/calib.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

#include "pics/fft.hpp"

namespace pics::calib {
namespace {

// Patch vectors of the signal lie in the span of conj(V_signal): rows of the
// calibration matrix are (unconjugated) patches.
Eigen::MatrixXcd patch_basis(const CalibrationMatrix& cal) {
  if (cal.v_signal.cols() == 0) throw std::invalid_argument("calibration matrix has an empty signal space");
  return cal.v_signal.conjugate();
}

void require_kspace3(const ComplexArray& a, const char* what) {
  if (a.rank() != 3) {
    throw std::invalid_argument(std::string(what) + ": expected (X, Y, N) k-space, got " + format_extents(a.extents()));
  }
}

}  // namespace

CalibrationMatrix build_calibration_matrix(const ComplexArray& acs, std::size_t px, std::size_t py) {
  require_kspace3(acs, "build_calibration_matrix");
  const std::size_t cx = acs.extent(0), cy = acs.extent(1), N = acs.extent(2);
  if (px < 1 || py < 1 || px > cx || py > cy) {
    throw std::invalid_argument("patch " + std::to_string(px) + "x" + std::to_string(py) + " does not fit the " +
                                std::to_string(cx) + "x" + std::to_string(cy) + " calibration region");
  }
  CalibrationMatrix cal;
  cal.patch_x = px;
  cal.patch_y = py;
  cal.n_coils = N;
  const std::size_t nx = cx - px + 1, ny = cy - py + 1;
  cal.matrix.resize(static_cast<Eigen::Index>(nx * ny), static_cast<Eigen::Index>(cal.columns()));
  for (std::size_t b = 0; b < ny; ++b)
    for (std::size_t a = 0; a < nx; ++a) {
      const auto row = static_cast<Eigen::Index>(a + nx * b);
      for (std::size_t c = 0; c < N; ++c)
        for (std::size_t dy = 0; dy < py; ++dy)
          for (std::size_t dx = 0; dx < px; ++dx) {
            cal.matrix(row, static_cast<Eigen::Index>(dx + px * (dy + py * c))) = acs.at({a + dx, b + dy, c});
          }
    }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(cal.matrix, Eigen::ComputeFullV);
  cal.v = svd.matrixV();
  cal.singular_values.assign(cal.columns(), 0.0);
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    cal.singular_values[static_cast<std::size_t>(i)] = svd.singularValues()(i);
  }
  return cal;
}

std::size_t numerical_rank(const CalibrationMatrix& cal, double rel_threshold) {
  if (cal.singular_values.empty()) return 0;
  const double cut = rel_threshold * cal.singular_values.front();
  std::size_t r = 0;
  while (r < cal.singular_values.size() && cal.singular_values[r] >= cut && cal.singular_values[r] > 0.0) ++r;
  return r;
}

CalibrationMatrix split_subspaces(CalibrationMatrix cal, double rel_threshold) {
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0)) {
    throw std::invalid_argument("split_subspaces: threshold must lie in (0, 1)");
  }
  const std::size_t r = numerical_rank(cal, rel_threshold);
  if (r == 0) throw std::invalid_argument("split_subspaces: empty signal space (all singular values below threshold)");
  const auto cols = static_cast<Eigen::Index>(cal.columns());
  cal.v_signal = cal.v.leftCols(static_cast<Eigen::Index>(r));
  cal.v_null = cal.v.rightCols(cols - static_cast<Eigen::Index>(r));
  cal.threshold = rel_threshold;
  return cal;
}

ComplexArray extract_acs(const ComplexArray& kspace, std::size_t acs) {
  require_kspace3(kspace, "extract_acs");
  const std::size_t X = kspace.extent(0), Y = kspace.extent(1), N = kspace.extent(2);
  if (acs < 1 || acs > X || acs > Y) throw std::invalid_argument("ACS size " + std::to_string(acs) + " exceeds grid");
  const std::size_t x0 = X / 2 - acs / 2, y0 = Y / 2 - acs / 2;
  ComplexArray out({acs, acs, N});
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t j = 0; j < acs; ++j)
      for (std::size_t i = 0; i < acs; ++i) out.at({i, j, c}) = kspace.at({x0 + i, y0 + j, c});
  return out;
}

ComplexArray espirit_operator(const CalibrationMatrix& cal, const Extents& grid) {
  const Eigen::MatrixXcd B = patch_basis(cal);
  if (grid.size() != 2 || grid[0] < cal.patch_x || grid[1] < cal.patch_y) {
    throw std::invalid_argument("espirit grid must be 2D and at least the patch size");
  }
  const std::size_t X = grid[0], Y = grid[1], N = cal.n_coils, n = X * Y;
  const std::size_t px = cal.patch_x, py = cal.patch_y;
  const double scale = std::sqrt(static_cast<double>(n));
  const double inv_m = 1.0 / static_cast<double>(px * py);
  ComplexArray w({X, Y, N, N});
  ComplexArray kernel({X, Y, N});
  for (Eigen::Index i = 0; i < B.cols(); ++i) {
    kernel = ComplexArray({X, Y, N});
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t dy = 0; dy < py; ++dy)
        for (std::size_t dx = 0; dx < px; ++dx) {
          kernel.at({X / 2 + dx - px / 2, Y / 2 + dy - py / 2, c}) =
              B(static_cast<Eigen::Index>(dx + px * (dy + py * c)), i);
        }
    const ComplexArray psi = ifftc(kernel, {0, 1});
    for (std::size_t s = 0; s < N; ++s)
      for (std::size_t t = 0; t < N; ++t) {
        cplx* out = w.vector().data() + (t + N * s) * n;
        const cplx* pt = psi.vector().data() + t * n;
        const cplx* ps = psi.vector().data() + s * n;
        for (std::size_t p = 0; p < n; ++p) out[p] += pt[p] * std::conj(ps[p]);
      }
  }
  w *= cplx(scale * scale * inv_m, 0.0);
  return w;
}

ComplexArray apply_espirit_operator(const ComplexArray& w, const ComplexArray& kspace) {
  require_kspace3(kspace, "apply_espirit_operator");
  const std::size_t X = kspace.extent(0), Y = kspace.extent(1), N = kspace.extent(2), n = X * Y;
  if (w.extents() != Extents{X, Y, N, N}) throw std::invalid_argument("espirit operator extents do not match k-space");
  const ComplexArray img = ifftc(kspace, {0, 1});
  ComplexArray out(kspace.extents());
  for (std::size_t s = 0; s < N; ++s)
    for (std::size_t t = 0; t < N; ++t)
      for (std::size_t p = 0; p < n; ++p) out[p + t * n] += w[p + (t + N * s) * n] * img[p + s * n];
  return fftc(out, {0, 1});
}

ComplexArray apply_patch_projection(const CalibrationMatrix& cal, const ComplexArray& kspace) {
  require_kspace3(kspace, "apply_patch_projection");
  const Eigen::MatrixXcd B = patch_basis(cal);
  const std::size_t X = kspace.extent(0), Y = kspace.extent(1), N = kspace.extent(2);
  if (N != cal.n_coils) throw std::invalid_argument("coil count does not match the calibration matrix");
  const std::size_t px = cal.patch_x, py = cal.patch_y;
  const double inv_m = 1.0 / static_cast<double>(px * py);
  Eigen::VectorXcd patch(static_cast<Eigen::Index>(cal.columns()));
  ComplexArray out(kspace.extents());
  for (std::size_t b = 0; b < Y; ++b)
    for (std::size_t a = 0; a < X; ++a) {
      for (std::size_t c = 0; c < N; ++c)
        for (std::size_t dy = 0; dy < py; ++dy)
          for (std::size_t dx = 0; dx < px; ++dx) {
            patch(static_cast<Eigen::Index>(dx + px * (dy + py * c))) = kspace.at({(a + dx) % X, (b + dy) % Y, c});
          }
      const Eigen::VectorXcd proj = B * (B.adjoint() * patch);
      for (std::size_t c = 0; c < N; ++c)
        for (std::size_t dy = 0; dy < py; ++dy)
          for (std::size_t dx = 0; dx < px; ++dx) {
            out.at({(a + dx) % X, (b + dy) % Y, c}) += inv_m * proj(static_cast<Eigen::Index>(dx + px * (dy + py * c)));
          }
    }
  return out;
}

EspiritResult espirit_maps(const CalibrationMatrix& cal, const Extents& grid, std::size_t n_maps, double crop_tol) {
  if (n_maps < 1 || n_maps > cal.n_coils) throw std::invalid_argument("n_maps must lie in [1, N]");
  const ComplexArray w = espirit_operator(cal, grid);
  const std::size_t X = grid[0], Y = grid[1], N = cal.n_coils, n = X * Y;
  EspiritResult res;
  res.threshold = cal.threshold;
  res.eigenvalues = ComplexArray({X, Y, n_maps});
  res.eigenvectors = ComplexArray({X, Y, N, n_maps});
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t s = 0; s < N; ++s)
      for (std::size_t t = 0; t < N; ++t) {
        m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = w[p + (t + N * s) * n];
      }
    eig.compute(m);
    for (std::size_t k = 0; k < n_maps; ++k) {
      const auto col = static_cast<Eigen::Index>(N - 1 - k);
      const double lambda = eig.eigenvalues()(col);
      Eigen::VectorXcd v = eig.eigenvectors().col(col);
      Eigen::Index ref = 0;
      if (std::abs(v(0)) < 1e-6) v.cwiseAbs().maxCoeff(&ref);
      const cplx a = v(ref);
      if (std::abs(a) > 0.0) v *= std::conj(a) / std::abs(a);
      const bool keep = lambda >= crop_tol;
      res.eigenvalues[p + n * k] = lambda;
      for (std::size_t c = 0; c < N; ++c) {
        res.eigenvectors[p + n * (c + N * k)] = keep ? v(static_cast<Eigen::Index>(c)) : cplx{};
      }
    }
  }
  return res;
}

SensitivitySet EspiritResult::sensitivities(std::size_t index) const {
  const std::size_t X = eigenvectors.extent(0), Y = eigenvectors.extent(1), N = eigenvectors.extent(2);
  if (index >= eigenvectors.extent(3)) throw std::invalid_argument("map index out of range");
  const std::size_t len = X * Y * N;
  std::vector<cplx> data(eigenvectors.vector().begin() + static_cast<std::ptrdiff_t>(index * len),
                         eigenvectors.vector().begin() + static_cast<std::ptrdiff_t>((index + 1) * len));
  SensitivitySet s;
  s.maps = ComplexArray({X, Y, N}, std::move(data));
  return s;
}

}  // namespace pics::calib
