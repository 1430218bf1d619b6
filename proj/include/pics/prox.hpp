#pragma once

#include <cstddef>
#include <vector>

#include "pics/array.hpp"

namespace pics {

/// Complex soft-threshold z * max(|z| - t, 0) / |z|.
ComplexArray prox_l1(const ComplexArray& z, double threshold);

/// argmin_x rho/2 |x - z|^2 + lambda/2 |x|^2.
ComplexArray prox_l2(const ComplexArray& z, double lambda, double rho);

/// Forward differences along `dims`, stacked as a new last dimension. The
/// last difference along each dim is zero (Neumann boundary).
ComplexArray finite_difference(const ComplexArray& x, const std::vector<std::size_t>& dims);
/// Adjoint of finite_difference.
ComplexArray finite_difference_adjoint(const ComplexArray& g, const std::vector<std::size_t>& dims);

/// Groupwise shrinkage of a stacked gradient: each pixel's vector of
/// differences is shrunk in joint magnitude.
ComplexArray shrink_groups(const ComplexArray& g, double threshold);

double tv_norm(const ComplexArray& x, const std::vector<std::size_t>& dims);

/// Approximate argmin_x rho/2 |x - z|^2 + lambda TV(x) for isotropic TV over
/// `dims` (empty means every dimension), by a fixed number of fast projected
/// gradient steps on the dual problem.
ComplexArray prox_tv_iso(const ComplexArray& z, double lambda, double rho, std::size_t inner_iters = 50,
                         std::vector<std::size_t> dims = {});

}  // namespace pics
