#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "pics/array.hpp"
#include "pics/sensitivity.hpp"

namespace pics::calib {

/// Casorati matrix of overlapping multi-coil k-space patches and its SVD.
///
/// Row p holds the patch whose low corner sits at interior position p
/// (first index fastest); column dx + px*(dy + py*coil).
struct CalibrationMatrix {
  Eigen::MatrixXcd matrix;
  std::size_t patch_x = 0, patch_y = 0, n_coils = 0;
  std::vector<double> singular_values;  // descending, one per column
  Eigen::MatrixXcd v;                   // all right-singular vectors
  Eigen::MatrixXcd v_signal;            // populated by split_subspaces
  Eigen::MatrixXcd v_null;
  double threshold = 0.0;

  std::size_t columns() const { return patch_x * patch_y * n_coils; }
};

CalibrationMatrix build_calibration_matrix(const ComplexArray& acs_kspace, std::size_t patch_x, std::size_t patch_y);

/// Signal space: right-singular vectors with sigma >= rel_threshold * sigma_max.
CalibrationMatrix split_subspaces(CalibrationMatrix cal, double rel_threshold);

/// Central acs x acs block of a (X, Y, N) k-space array.
ComplexArray extract_acs(const ComplexArray& kspace, std::size_t acs);

/// Number of singular values above rel_threshold * sigma_max.
std::size_t numerical_rank(const CalibrationMatrix& cal, double rel_threshold);

struct EspiritResult {
  ComplexArray eigenvalues;   // (X, Y, n_maps), real
  ComplexArray eigenvectors;  // (X, Y, N, n_maps)
  double threshold = 0.0;

  /// Map set `index` as sensitivities on the calibration grid.
  SensitivitySet sensitivities(std::size_t index = 0) const;
};

/// Pointwise image-domain form of the calibration projection: a (X, Y, N, N)
/// array holding the Hermitian N x N matrix W(r) at every pixel.
ComplexArray espirit_operator(const CalibrationMatrix& cal, const Extents& grid);

/// Top n_maps eigenpairs of W(r) per pixel, sorted descending, phase-fixed so
/// the reference coil (coil 0, or the largest entry if coil 0 is below 1e-6)
/// is real positive. Maps whose eigenvalue is below crop_tol are zeroed.
EspiritResult espirit_maps(const CalibrationMatrix& cal, const Extents& grid, std::size_t n_maps = 1,
                           double crop_tol = 0.0);

/// Applies the pixelwise operator to multi-coil k-space (X, Y, N):
/// fftc(W(r) ifftc(f)).
ComplexArray apply_espirit_operator(const ComplexArray& w, const ComplexArray& kspace);

/// Same projection computed directly in k-space: the average over all
/// circular patch positions of R^H V V^H R f.
ComplexArray apply_patch_projection(const CalibrationMatrix& cal, const ComplexArray& kspace);

}  // namespace pics::calib
