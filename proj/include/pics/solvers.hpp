#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pics/array.hpp"
#include "pics/operators.hpp"
#include "pics/wavelet.hpp"

namespace pics::solve {

/// alpha/2 <x - x0, W (x - x0)> with diagonal W.
struct QuadraticPenalty {
  double alpha = 0.0;
  std::optional<ComplexArray> weight;     // real, positive; identity if absent
  std::optional<ComplexArray> reference;  // x0; zero if absent

  void validate(const Extents& domain) const;
  double value(const ComplexArray& x) const;
  /// alpha * W * v
  ComplexArray apply_weight(const ComplexArray& v) const;
};

enum class PenaltyKind { l1_transform, l2, tv_iso };

/// One term R(B x) of the objective together with its proximal map.
///
/// l1_transform: lambda |T x|_1 (T orthonormal, identity if no transform).
/// l2:           lambda/2 |x|^2.
/// tv_iso:       lambda * isotropic TV over tv_dims (all dims if empty).
struct ProxPenalty {
  PenaltyKind kind = PenaltyKind::l1_transform;
  double lambda = 0.0;
  TransformHandle transform;
  std::vector<std::size_t> tv_dims;
  std::size_t tv_inner_iters = 50;

  void validate() const;
  double value(const ComplexArray& x) const;
  /// argmin_x 1/2 |x - z|^2 + tau R(x), in the image domain.
  ComplexArray prox(const ComplexArray& z, double tau) const;

  /// Splitting transform B used by admm (T, the gradient, or identity) and
  /// the prox of the penalty expressed on B x.
  ComplexArray split(const ComplexArray& x) const;
  ComplexArray split_adjoint(const ComplexArray& v) const;
  ComplexArray split_prox(const ComplexArray& v, double rho) const;
};

struct SolveReport {
  std::size_t iterations = 0;
  std::vector<double> objective_trace;
  double residual_norm = 0.0;
  bool converged = false;
  /// admm only: final primal |Bx - z| and dual rho |B^H (z - z_prev)| norms.
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

struct Solution {
  ComplexArray x;
  SolveReport report;
};

/// Called after every outer iteration with (iteration, objective, residual).
using ProgressFn = std::function<void(std::size_t, double, double)>;

/// Conjugate gradients for a Hermitian positive (semi-)definite system A x = b
/// from the start x0. The objective trace holds 1/2 <x, A x> - Re<b, x> +
/// offset. Stops when |r| <= tol |b|.
Solution conjugate_gradient(const std::function<ComplexArray(const ComplexArray&)>& normal, const ComplexArray& b,
                            ComplexArray x0, double tol, std::size_t max_iter, double offset = 0.0,
                            const ProgressFn& progress = {});

/// Minimizes 1/2 |F x - y|^2 + alpha/2 <x - x0, W (x - x0)> by CG on the
/// shifted normal equations (F^H F + alpha W) d = F^H (y - F x0), x = x0 + d.
Solution cg_normal(const op::OperatorHandle& op, const ComplexArray& y, const QuadraticPenalty& penalty,
                   double tol = 1e-6, std::size_t max_iter = 100, const ProgressFn& progress = {});

/// Largest eigenvalue of op->normal by power iteration from a seeded random
/// start.
double power_iteration(const op::OperatorHandle& op, std::size_t iters = 30, std::uint64_t seed = 0x5eed);

/// 1/2 |F x - y|^2 + sum of the penalty values.
double objective(const op::OperatorHandle& op, const ComplexArray& y, const std::vector<ProxPenalty>& penalties,
                 const ComplexArray& x);

/// Proximal gradient descent. step <= 0 selects 1/L with L from
/// power_iteration; an explicit step must lie in (0, 2/L).
Solution ista(const op::OperatorHandle& op, const ComplexArray& y, const ProxPenalty& penalty, double step = 0.0,
              std::size_t max_iter = 100, double tol = 0.0, const ProgressFn& progress = {});

/// ista with Nesterov momentum, t_1 = 1, t_{n+1} = (1 + sqrt(1 + 4 t_n^2))/2.
Solution fista(const op::OperatorHandle& op, const ComplexArray& y, const ProxPenalty& penalty, double step = 0.0,
               std::size_t max_iter = 100, double tol = 0.0, const ProgressFn& progress = {});

/// FISTA momentum weights t_1..t_n.
std::vector<double> fista_momentum(std::size_t n);

/// Scaled-form ADMM with one splitting variable z_n = B_n x per penalty. The
/// x-update solves (F^H F + rho sum B_n^H B_n) x = F^H y + rho sum B_n^H (z_n - u_n)
/// by warm-started CG (tolerance 1e-6).
Solution admm(const op::OperatorHandle& op, const ComplexArray& y, const std::vector<ProxPenalty>& penalties,
              double rho = 1.0, std::size_t max_iter = 100, double tol = 0.0, const ProgressFn& progress = {});

}  // namespace pics::solve
