#include "pics/solvers.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pics/errors.hpp"
#include "pics/prox.hpp"
#include "pics/sim.hpp"

namespace pics::solve {
namespace {

void require_finite(const ComplexArray& a, const char* what, long iteration) {
  if (!all_finite(a)) {
    throw NumericalError(std::string(what) + ": non-finite value", iteration);
  }
}

void require_extents(const ComplexArray& a, const Extents& e, const char* what) {
  if (a.extents() != e) {
    throw std::invalid_argument(std::string(what) + ": extents " + format_extents(a.extents()) + ", expected " +
                                format_extents(e));
  }
}

std::vector<std::size_t> tv_dims_for(const ProxPenalty& p, const ComplexArray& x) {
  if (!p.tv_dims.empty()) return p.tv_dims;
  std::vector<std::size_t> d(x.rank());
  std::iota(d.begin(), d.end(), std::size_t{0});
  return d;
}

double checked_step(const op::OperatorHandle& op, double step) {
  const double L = power_iteration(op);
  if (step <= 0.0) {
    if (!(L > 0.0)) throw std::invalid_argument("cannot derive a step size: operator normal is zero");
    return 1.0 / L;
  }
  if (L > 0.0 && step >= 2.0 / L) {
    throw std::invalid_argument("step " + std::to_string(step) + " outside (0, 2/L) with L = " + std::to_string(L));
  }
  return step;
}

double l1_sum(const ComplexArray& a) {
  double s = 0.0;
  for (const auto& v : a.vector()) s += std::abs(v);
  return s;
}

bool small_change(const ComplexArray& next, const ComplexArray& prev, double tol) {
  if (tol <= 0.0) return false;
  const double n = norm(next);
  return norm(next - prev) <= tol * (n > 0.0 ? n : 1.0);
}

}  // namespace

void QuadraticPenalty::validate(const Extents& domain) const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("quadratic penalty: alpha must be >= 0");
  if (weight) {
    require_extents(*weight, domain, "quadratic penalty weight");
    for (const auto& w : weight->vector()) {
      if (!(w.real() > 0.0) || w.imag() != 0.0) throw std::invalid_argument("quadratic penalty: weights must be > 0");
    }
  }
  if (reference) require_extents(*reference, domain, "quadratic penalty reference");
}

ComplexArray QuadraticPenalty::apply_weight(const ComplexArray& v) const {
  ComplexArray out = weight ? multiply(*weight, v) : v;
  out *= cplx(alpha, 0.0);
  return out;
}

double QuadraticPenalty::value(const ComplexArray& x) const {
  if (alpha == 0.0) return 0.0;
  const ComplexArray d = reference ? x - *reference : x;
  return 0.5 * dot(d, apply_weight(d)).real();
}

void ProxPenalty::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("penalty lambda must be >= 0");
}

double ProxPenalty::value(const ComplexArray& x) const {
  switch (kind) {
    case PenaltyKind::l1_transform:
      return lambda * l1_sum(transform ? transform->forward(x) : x);
    case PenaltyKind::l2:
      return 0.5 * lambda * norm_squared(x);
    case PenaltyKind::tv_iso:
      return lambda * tv_norm(x, tv_dims_for(*this, x));
  }
  return 0.0;
}

ComplexArray ProxPenalty::prox(const ComplexArray& z, double tau) const {
  switch (kind) {
    case PenaltyKind::l1_transform:
      if (transform) return transform->inverse(prox_l1(transform->forward(z), tau * lambda));
      return prox_l1(z, tau * lambda);
    case PenaltyKind::l2:
      return prox_l2(z, lambda, 1.0 / tau);
    case PenaltyKind::tv_iso:
      return prox_tv_iso(z, lambda, 1.0 / tau, tv_inner_iters, tv_dims_for(*this, z));
  }
  return z;
}

ComplexArray ProxPenalty::split(const ComplexArray& x) const {
  switch (kind) {
    case PenaltyKind::l1_transform:
      return transform ? transform->forward(x) : x;
    case PenaltyKind::l2:
      return x;
    case PenaltyKind::tv_iso:
      return finite_difference(x, tv_dims_for(*this, x));
  }
  return x;
}

ComplexArray ProxPenalty::split_adjoint(const ComplexArray& v) const {
  switch (kind) {
    case PenaltyKind::l1_transform:
      return transform ? transform->inverse(v) : v;
    case PenaltyKind::l2:
      return v;
    case PenaltyKind::tv_iso: {
      Extents ext = v.extents();
      ext.pop_back();
      return finite_difference_adjoint(v, tv_dims_for(*this, ComplexArray(ext)));
    }
  }
  return v;
}

ComplexArray ProxPenalty::split_prox(const ComplexArray& v, double rho) const {
  switch (kind) {
    case PenaltyKind::l1_transform:
      return prox_l1(v, lambda / rho);
    case PenaltyKind::l2:
      return prox_l2(v, lambda, rho);
    case PenaltyKind::tv_iso:
      return shrink_groups(v, lambda / rho);
  }
  return v;
}

Solution conjugate_gradient(const std::function<ComplexArray(const ComplexArray&)>& normal, const ComplexArray& b,
                            ComplexArray x, double tol, std::size_t max_iter, double offset,
                            const ProgressFn& progress) {
  if (!(tol > 0.0)) throw std::invalid_argument("cg: tol must be > 0");
  require_extents(x, b.extents(), "cg start");
  require_finite(b, "cg", 0);
  Solution out;
  ComplexArray r = b - normal(x);
  require_finite(r, "cg", 0);
  auto objective_at = [&](const ComplexArray& xx, const ComplexArray& rr) {
    return -0.5 * dot(xx, b + rr).real() + offset;
  };
  const double bnorm = norm(b);
  double rs = norm_squared(r);
  out.report.objective_trace.push_back(objective_at(x, r));
  if (std::sqrt(rs) <= tol * bnorm || rs == 0.0) {
    out.report.converged = true;
    out.report.residual_norm = std::sqrt(rs);
    out.x = std::move(x);
    return out;
  }
  ComplexArray p = r;
  std::size_t it = 0;
  while (it < max_iter) {
    const ComplexArray Ap = normal(p);
    const double pAp = dot(p, Ap).real();
    require_finite(Ap, "cg", static_cast<long>(it + 1));
    if (!(pAp > 0.0)) break;
    const double a = rs / pAp;
    axpy(cplx(a, 0.0), p, x);
    axpy(cplx(-a, 0.0), Ap, r);
    ++it;
    require_finite(x, "cg", static_cast<long>(it));
    const double rs_new = norm_squared(r);
    const double obj = objective_at(x, r);
    out.report.objective_trace.push_back(obj);
    if (progress) progress(it, obj, std::sqrt(rs_new));
    if (std::sqrt(rs_new) <= tol * bnorm) {
      out.report.converged = true;
      rs = rs_new;
      break;
    }
    const double beta = rs_new / rs;
    rs = rs_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  out.report.iterations = it;
  out.report.residual_norm = std::sqrt(rs);
  out.x = std::move(x);
  return out;
}

Solution cg_normal(const op::OperatorHandle& op, const ComplexArray& y, const QuadraticPenalty& penalty, double tol,
                   std::size_t max_iter, const ProgressFn& progress) {
  if (!(tol > 0.0)) throw std::invalid_argument("cg_normal: tol must be > 0");
  require_extents(y, op->codomain(), "cg_normal data");
  penalty.validate(op->domain());
  require_finite(y, "cg_normal", 0);
  const ComplexArray x0 = penalty.reference ? *penalty.reference : ComplexArray(op->domain());
  const ComplexArray misfit = y - op->apply(x0);
  const ComplexArray b = op->adjoint(misfit);
  auto normal = [&](const ComplexArray& d) {
    ComplexArray out = op->normal(d);
    if (penalty.alpha > 0.0) out += penalty.apply_weight(d);
    return out;
  };
  Solution s = conjugate_gradient(normal, b, ComplexArray(op->domain()), tol, max_iter, 0.5 * norm_squared(misfit),
                                  progress);
  s.x += x0;
  return s;
}

double power_iteration(const op::OperatorHandle& op, std::size_t iters, std::uint64_t seed) {
  ComplexArray v(op->domain());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto [a, b] = sim::counter_normal_pair(seed, i);
    v[i] = cplx(a, b);
  }
  v *= cplx(1.0 / norm(v), 0.0);
  double L = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    ComplexArray w = op->normal(v);
    L = dot(v, w).real();
    const double n = norm(w);
    if (n == 0.0) return 0.0;
    w *= cplx(1.0 / n, 0.0);
    v = std::move(w);
  }
  return L;
}

double objective(const op::OperatorHandle& op, const ComplexArray& y, const std::vector<ProxPenalty>& penalties,
                 const ComplexArray& x) {
  double f = 0.5 * norm_squared(op->apply(x) - y);
  for (const auto& p : penalties) f += p.value(x);
  return f;
}

Solution ista(const op::OperatorHandle& op, const ComplexArray& y, const ProxPenalty& penalty, double step,
              std::size_t max_iter, double tol, const ProgressFn& progress) {
  require_extents(y, op->codomain(), "ista data");
  penalty.validate();
  const double tau = checked_step(op, step);
  Solution out;
  ComplexArray x(op->domain());
  ComplexArray residual = op->apply(x) - y;
  out.report.objective_trace.push_back(0.5 * norm_squared(residual) + penalty.value(x));
  std::size_t it = 0;
  while (it < max_iter) {
    ComplexArray z = x;
    axpy(cplx(-tau, 0.0), op->adjoint(residual), z);
    ComplexArray next = penalty.prox(z, tau);
    ++it;
    require_finite(next, "ista", static_cast<long>(it));
    residual = op->apply(next) - y;
    const double obj = 0.5 * norm_squared(residual) + penalty.value(next);
    out.report.objective_trace.push_back(obj);
    const bool done = small_change(next, x, tol);
    out.report.residual_norm = norm(next - x);
    x = std::move(next);
    if (progress) progress(it, obj, out.report.residual_norm);
    if (done) {
      out.report.converged = true;
      break;
    }
  }
  out.report.iterations = it;
  out.x = std::move(x);
  return out;
}

std::vector<double> fista_momentum(std::size_t n) {
  std::vector<double> t;
  t.reserve(n);
  double v = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back(v);
    v = (1.0 + std::sqrt(1.0 + 4.0 * v * v)) / 2.0;
  }
  return t;
}

Solution fista(const op::OperatorHandle& op, const ComplexArray& y, const ProxPenalty& penalty, double step,
               std::size_t max_iter, double tol, const ProgressFn& progress) {
  require_extents(y, op->codomain(), "fista data");
  penalty.validate();
  const double tau = checked_step(op, step);
  Solution out;
  ComplexArray x(op->domain());
  ComplexArray v = x;
  out.report.objective_trace.push_back(0.5 * norm_squared(y) + penalty.value(x));
  double t = 1.0;
  std::size_t it = 0;
  while (it < max_iter) {
    ComplexArray z = v;
    axpy(cplx(-tau, 0.0), op->adjoint(op->apply(v) - y), z);
    ComplexArray next = penalty.prox(z, tau);
    ++it;
    require_finite(next, "fista", static_cast<long>(it));
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const ComplexArray delta = next - x;
    v = next;
    axpy(cplx((t - 1.0) / t_next, 0.0), delta, v);
    t = t_next;
    const double obj = 0.5 * norm_squared(op->apply(next) - y) + penalty.value(next);
    out.report.objective_trace.push_back(obj);
    const bool done = small_change(next, x, tol);
    out.report.residual_norm = norm(delta);
    x = std::move(next);
    if (progress) progress(it, obj, out.report.residual_norm);
    if (done) {
      out.report.converged = true;
      break;
    }
  }
  out.report.iterations = it;
  out.x = std::move(x);
  return out;
}

Solution admm(const op::OperatorHandle& op, const ComplexArray& y, const std::vector<ProxPenalty>& penalties,
              double rho, std::size_t max_iter, double tol, const ProgressFn& progress) {
  if (!(rho > 0.0)) throw std::invalid_argument("admm: rho must be > 0");
  if (penalties.empty()) throw std::invalid_argument("admm: at least one penalty is required");
  require_extents(y, op->codomain(), "admm data");
  for (const auto& p : penalties) p.validate();

  Solution out;
  ComplexArray x(op->domain());
  const ComplexArray Fhy = op->adjoint(y);
  std::vector<ComplexArray> z, u;
  for (const auto& p : penalties) {
    z.push_back(p.split(x));
    u.push_back(ComplexArray(z.back().extents()));
  }
  auto normal = [&](const ComplexArray& v) {
    ComplexArray acc = op->normal(v);
    for (const auto& p : penalties) axpy(cplx(rho, 0.0), p.split_adjoint(p.split(v)), acc);
    return acc;
  };
  out.report.objective_trace.push_back(objective(op, y, penalties, x));
  std::size_t it = 0;
  while (it < max_iter) {
    ComplexArray rhs = Fhy;
    for (std::size_t n = 0; n < penalties.size(); ++n) {
      axpy(cplx(rho, 0.0), penalties[n].split_adjoint(z[n] - u[n]), rhs);
    }
    ComplexArray next;
    try {
      next = conjugate_gradient(normal, rhs, x, 1e-6, 200).x;
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("admm inner cg failed: ") + e.what(), static_cast<long>(it + 1));
    }
    ++it;
    double primal = 0.0, dual = 0.0;
    for (std::size_t n = 0; n < penalties.size(); ++n) {
      const ComplexArray Bx = penalties[n].split(next);
      ComplexArray z_next = penalties[n].split_prox(Bx + u[n], rho);
      const ComplexArray gap = Bx - z_next;
      u[n] += gap;
      primal += norm_squared(gap);
      dual += rho * rho * norm_squared(penalties[n].split_adjoint(z_next - z[n]));
      z[n] = std::move(z_next);
    }
    const double obj = objective(op, y, penalties, next);
    out.report.objective_trace.push_back(obj);
    out.report.primal_residual = std::sqrt(primal);
    out.report.dual_residual = std::sqrt(dual);
    const bool done = small_change(next, x, tol);
    out.report.residual_norm = norm(next - x);
    x = std::move(next);
    if (progress) progress(it, obj, out.report.primal_residual);
    if (done) {
      out.report.converged = true;
      break;
    }
  }
  out.report.iterations = it;
  out.x = std::move(x);
  return out;
}

}  // namespace pics::solve
