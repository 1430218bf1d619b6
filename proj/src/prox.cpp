#include "pics/prox.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pics {
namespace {

std::vector<std::size_t> resolve_dims(const ComplexArray& x, std::vector<std::size_t> dims) {
  if (dims.empty()) {
    dims.resize(x.rank());
    std::iota(dims.begin(), dims.end(), std::size_t{0});
  }
  for (auto d : dims) {
    if (d >= x.rank()) throw std::invalid_argument("finite difference dim out of range");
  }
  return dims;
}

}  // namespace

ComplexArray prox_l1(const ComplexArray& z, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("prox_l1: negative threshold");
  ComplexArray out = z;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = std::abs(z[i]);
    out[i] = a > threshold ? z[i] * ((a - threshold) / a) : cplx{};
  }
  return out;
}

ComplexArray prox_l2(const ComplexArray& z, double lambda, double rho) {
  if (lambda < 0.0 || !(rho > 0.0)) throw std::invalid_argument("prox_l2: need lambda >= 0, rho > 0");
  ComplexArray out = z;
  out *= cplx(rho / (rho + lambda), 0.0);
  return out;
}

ComplexArray finite_difference(const ComplexArray& x, const std::vector<std::size_t>& dims) {
  Extents ext = x.extents();
  ext.push_back(dims.size());
  ComplexArray g(ext);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::size_t d = dims[k], stride = x.stride(d), len = x.extent(d);
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t i = (p / stride) % len;
      if (i + 1 < len) g[p + k * n] = x[p + stride] - x[p];
    }
  }
  return g;
}

ComplexArray finite_difference_adjoint(const ComplexArray& g, const std::vector<std::size_t>& dims) {
  Extents ext = g.extents();
  ext.pop_back();
  ComplexArray x(ext);
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const std::size_t d = dims[k], stride = x.stride(d), len = x.extent(d);
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t i = (p / stride) % len;
      if (i + 1 < len) {
        const cplx v = g[p + k * n];
        x[p] -= v;
        x[p + stride] += v;
      }
    }
  }
  return x;
}

ComplexArray shrink_groups(const ComplexArray& g, double threshold) {
  const std::size_t groups = g.extent(g.rank() - 1), n = g.size() / groups;
  ComplexArray out = g;
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < groups; ++k) s += std::norm(g[p + k * n]);
    const double a = std::sqrt(s);
    const double f = a > threshold ? (a - threshold) / a : 0.0;
    for (std::size_t k = 0; k < groups; ++k) out[p + k * n] *= f;
  }
  return out;
}

double tv_norm(const ComplexArray& x, const std::vector<std::size_t>& dims) {
  const auto d = resolve_dims(x, dims);
  const ComplexArray g = finite_difference(x, d);
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) s += std::norm(g[p + k * n]);
    total += std::sqrt(s);
  }
  return total;
}

ComplexArray prox_tv_iso(const ComplexArray& z, double lambda, double rho, std::size_t inner_iters,
                         std::vector<std::size_t> dims) {
  if (lambda < 0.0 || !(rho > 0.0)) throw std::invalid_argument("prox_tv_iso: need lambda >= 0, rho > 0");
  if (lambda == 0.0) return z;
  dims = resolve_dims(z, std::move(dims));
  const double theta = lambda / rho;
  const double step = 1.0 / (4.0 * static_cast<double>(dims.size()) * theta);
  const std::size_t n = z.size(), m = dims.size();

  // Dual variable p with |p_i| <= 1 per pixel; x = z - theta D^H p.
  Extents gext = z.extents();
  gext.push_back(m);
  ComplexArray p(gext), p_prev(gext), r(gext);
  double t = 1.0;
  for (std::size_t it = 0; it < inner_iters; ++it) {
    ComplexArray x = finite_difference_adjoint(r, dims);
    x *= cplx(-theta, 0.0);
    x += z;
    ComplexArray grad = finite_difference(x, dims);
    p_prev = p;
    p = r;
    axpy(cplx(step, 0.0), grad, p);
    for (std::size_t q = 0; q < n; ++q) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += std::norm(p[q + k * n]);
      if (s > 1.0) {
        const double f = 1.0 / std::sqrt(s);
        for (std::size_t k = 0; k < m; ++k) p[q + k * n] *= f;
      }
    }
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    r = p;
    ComplexArray diff = p - p_prev;
    axpy(cplx((t - 1.0) / t_next, 0.0), diff, r);
    t = t_next;
  }
  ComplexArray x = finite_difference_adjoint(p, dims);
  x *= cplx(-theta, 0.0);
  x += z;
  return x;
}

}  // namespace pics
