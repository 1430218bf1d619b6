#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pics/array.hpp"
#include "pics/operators.hpp"

namespace testing {

using pics::ComplexArray;
using pics::cplx;
using pics::Extents;

inline ComplexArray random_array(const Extents& e, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexArray a(e);
  for (auto& v : a.vector()) v = cplx(n(rng), n(rng));
  return a;
}

/// Centred 1D DFT matrix: row k, column n, exp(-2 pi i (k-c)(n-c)/N)/sqrt(N).
inline Eigen::MatrixXcd dft_matrix(std::size_t N) {
  Eigen::MatrixXcd m(N, N);
  const double c = static_cast<double>(N / 2);
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t n = 0; n < N; ++n) {
      const double ph = -2.0 * std::numbers::pi * (k - c) * (n - c) / static_cast<double>(N);
      m(k, n) = std::polar(1.0 / std::sqrt(static_cast<double>(N)), ph);
    }
  return m;
}

/// 2D centred DFT as a dense (XY x XY) matrix in first-index-fastest order.
inline Eigen::MatrixXcd dft2_matrix(std::size_t X, std::size_t Y) {
  const Eigen::MatrixXcd fx = dft_matrix(X), fy = dft_matrix(Y);
  Eigen::MatrixXcd m(X * Y, X * Y);
  for (std::size_t j = 0; j < Y; ++j)
    for (std::size_t i = 0; i < X; ++i)
      for (std::size_t b = 0; b < Y; ++b)
        for (std::size_t a = 0; a < X; ++a) m(i + X * j, a + X * b) = fx(i, a) * fy(j, b);
  return m;
}

inline Eigen::VectorXcd to_vector(const ComplexArray& a) {
  Eigen::VectorXcd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i];
  return v;
}

inline ComplexArray from_vector(const Eigen::VectorXcd& v, const Extents& e) {
  ComplexArray a(e);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = v(i);
  return a;
}

/// Dense matrix of an operator, one apply per unit vector.
inline Eigen::MatrixXcd materialize(const pics::op::LinearOperator& op) {
  const std::size_t n = pics::element_count(op.domain()), m = pics::element_count(op.codomain());
  Eigen::MatrixXcd a(m, n);
  ComplexArray e(op.domain());
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.col(j) = to_vector(op.apply(e));
    e[j] = 0.0;
  }
  return a;
}

/// Worst relative adjoint mismatch |<Ax, y> - <x, A^H y>| / (|Ax||y|) over
/// random pairs.
inline double adjoint_mismatch(const pics::op::LinearOperator& op, int pairs, std::uint64_t seed) {
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const ComplexArray x = random_array(op.domain(), seed + 2 * p);
    const ComplexArray y = random_array(op.codomain(), seed + 2 * p + 1);
    const ComplexArray ax = op.apply(x);
    const cplx lhs = pics::dot(ax, y), rhs = pics::dot(x, op.adjoint(y));
    const double scale = pics::norm(ax) * pics::norm(y);
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

/// Direct non-uniform DFT sum_r x(r) exp(-2 pi i k.r)/sqrt(XY).
inline cplx direct_dft(const ComplexArray& x, double kx, double ky) {
  const std::size_t X = x.extent(0), Y = x.extent(1);
  cplx acc{};
  for (std::size_t j = 0; j < Y; ++j)
    for (std::size_t i = 0; i < X; ++i) {
      const double rx = (static_cast<double>(i) - static_cast<double>(X / 2)) / static_cast<double>(X);
      const double ry = (static_cast<double>(j) - static_cast<double>(Y / 2)) / static_cast<double>(Y);
      acc += x.at({i, j}) * std::polar(1.0, -2.0 * std::numbers::pi * (kx * rx + ky * ry));
    }
  return acc / std::sqrt(static_cast<double>(X * Y));
}

}  // namespace testing
