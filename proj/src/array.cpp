#include "pics/array.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pics {

std::size_t element_count(const Extents& extents) {
  return std::accumulate(extents.begin(), extents.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string format_extents(const Extents& extents) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < extents.size(); ++i) {
    if (i) os << ", ";
    os << extents[i];
  }
  os << ')';
  return os.str();
}

namespace {
void check_extents(const Extents& extents) {
  for (auto e : extents) {
    if (e == 0) throw std::invalid_argument("array extents must be >= 1, got " + format_extents(extents));
  }
}
}  // namespace

ComplexArray::ComplexArray(Extents extents, cplx fill)
    : extents_(std::move(extents)) {
  check_extents(extents_);
  data_.assign(element_count(extents_), fill);
}

ComplexArray::ComplexArray(Extents extents, std::vector<cplx> data)
    : extents_(std::move(extents)), data_(std::move(data)) {
  check_extents(extents_);
  if (data_.size() != element_count(extents_)) {
    throw std::invalid_argument("data length " + std::to_string(data_.size()) +
                                " does not match extents " + format_extents(extents_));
  }
}

std::size_t ComplexArray::extent(std::size_t dim) const {
  if (dim >= extents_.size()) {
    throw std::invalid_argument("dimension " + std::to_string(dim) + " out of range for rank " +
                                std::to_string(extents_.size()));
  }
  return extents_[dim];
}

std::size_t ComplexArray::stride(std::size_t dim) const {
  std::size_t s = 1;
  for (std::size_t d = 0; d < dim && d < extents_.size(); ++d) s *= extents_[d];
  return s;
}

std::size_t ComplexArray::offset(std::span<const std::size_t> indices) const {
  if (indices.size() != extents_.size()) throw std::invalid_argument("index rank mismatch");
  std::size_t off = 0, s = 1;
  for (std::size_t d = 0; d < indices.size(); ++d) {
    if (indices[d] >= extents_[d]) throw std::out_of_range("array index out of range");
    off += indices[d] * s;
    s *= extents_[d];
  }
  return off;
}

cplx& ComplexArray::at(std::initializer_list<std::size_t> indices) {
  return data_[offset(std::span<const std::size_t>(indices.begin(), indices.size()))];
}

const cplx& ComplexArray::at(std::initializer_list<std::size_t> indices) const {
  return data_[offset(std::span<const std::size_t>(indices.begin(), indices.size()))];
}

ComplexArray ComplexArray::reshaped(Extents extents) const {
  return ComplexArray(std::move(extents), data_);
}

ComplexArray ComplexArray::slice_last(std::size_t index) const {
  if (extents_.empty()) throw std::invalid_argument("slice_last on rank-0 array");
  Extents sub(extents_.begin(), extents_.end() - 1);
  if (sub.empty()) sub.push_back(1);
  std::size_t n = element_count(sub);
  if (index >= extents_.back()) throw std::out_of_range("slice index out of range");
  auto first = data_.begin() + static_cast<std::ptrdiff_t>(index * n);
  return ComplexArray(std::move(sub), std::vector<cplx>(first, first + static_cast<std::ptrdiff_t>(n)));
}

void ComplexArray::set_slice_last(std::size_t index, const ComplexArray& slab) {
  std::size_t n = data_.size() / extents_.back();
  if (slab.size() != n) throw std::invalid_argument("slab size mismatch in set_slice_last");
  if (index >= extents_.back()) throw std::out_of_range("slice index out of range");
  std::copy(slab.vector().begin(), slab.vector().end(),
            data_.begin() + static_cast<std::ptrdiff_t>(index * n));
}

ComplexArray& ComplexArray::operator+=(const ComplexArray& other) {
  require_same_extents(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexArray& ComplexArray::operator-=(const ComplexArray& other) {
  require_same_extents(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ComplexArray& ComplexArray::operator*=(cplx scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

ComplexArray operator+(ComplexArray a, const ComplexArray& b) { return a += b; }
ComplexArray operator-(ComplexArray a, const ComplexArray& b) { return a -= b; }
ComplexArray operator*(cplx s, ComplexArray a) { return a *= s; }

cplx dot(const ComplexArray& a, const ComplexArray& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  cplx acc{};
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm_squared(const ComplexArray& a) {
  double acc = 0.0;
  for (const auto& v : a.vector()) acc += std::norm(v);
  return acc;
}

double norm(const ComplexArray& a) { return std::sqrt(norm_squared(a)); }

double relative_error(const ComplexArray& a, const ComplexArray& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

void axpy(cplx s, const ComplexArray& x, ComplexArray& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

ComplexArray multiply(const ComplexArray& a, const ComplexArray& b) {
  require_same_extents(a, b, "multiply");
  ComplexArray out(a.extents());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

bool all_finite(const ComplexArray& a) {
  for (const auto& v : a.vector()) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

void require_same_extents(const ComplexArray& a, const ComplexArray& b, const char* what) {
  if (a.extents() != b.extents()) {
    throw std::invalid_argument(std::string(what) + ": extents " + format_extents(a.extents()) +
                                " vs " + format_extents(b.extents()));
  }
}

}  // namespace pics
