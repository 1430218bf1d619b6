#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pics {

using cplx = std::complex<double>;
using Extents = std::vector<std::size_t>;

/// Product of all extents (1 for an empty list).
std::size_t element_count(const Extents& extents);

std::string format_extents(const Extents& extents);

/// Dense n-dimensional complex array, first dimension fastest.
///
/// The last dimension is the coil dimension whenever an array carries one
/// (images are (X, Y), coil images and gridded k-space are (X, Y, N)).
class ComplexArray {
 public:
  ComplexArray() = default;
  explicit ComplexArray(Extents extents, cplx fill = {});
  ComplexArray(Extents extents, std::vector<cplx> data);

  const Extents& extents() const noexcept { return extents_; }
  std::size_t extent(std::size_t dim) const;
  std::size_t rank() const noexcept { return extents_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Stride (in elements) of dimension `dim`.
  std::size_t stride(std::size_t dim) const;

  cplx& operator[](std::size_t i) noexcept { return data_[i]; }
  const cplx& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Multi-index access; indices.size() must equal rank().
  cplx& at(std::initializer_list<std::size_t> indices);
  const cplx& at(std::initializer_list<std::size_t> indices) const;
  std::size_t offset(std::span<const std::size_t> indices) const;

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }
  std::vector<cplx>& vector() noexcept { return data_; }
  const std::vector<cplx>& vector() const noexcept { return data_; }

  /// Same data, different shape with equal element count.
  ComplexArray reshaped(Extents extents) const;

  /// Contiguous slab of the last dimension (e.g. one coil image).
  ComplexArray slice_last(std::size_t index) const;
  void set_slice_last(std::size_t index, const ComplexArray& slab);

  ComplexArray& operator+=(const ComplexArray& other);
  ComplexArray& operator-=(const ComplexArray& other);
  ComplexArray& operator*=(cplx scale);

  friend bool operator==(const ComplexArray& a, const ComplexArray& b) = default;

 private:
  Extents extents_;
  std::vector<cplx> data_;
};

ComplexArray operator+(ComplexArray a, const ComplexArray& b);
ComplexArray operator-(ComplexArray a, const ComplexArray& b);
ComplexArray operator*(cplx s, ComplexArray a);

/// <a, b> = sum conj(a_i) b_i.
cplx dot(const ComplexArray& a, const ComplexArray& b);
double norm(const ComplexArray& a);
double norm_squared(const ComplexArray& a);

/// ||a - b|| / ||b||; returns ||a|| when b is zero.
double relative_error(const ComplexArray& a, const ComplexArray& b);

/// y += s * x
void axpy(cplx s, const ComplexArray& x, ComplexArray& y);

/// Elementwise product a_i * b_i (equal extents).
ComplexArray multiply(const ComplexArray& a, const ComplexArray& b);

bool all_finite(const ComplexArray& a);

/// Throws std::invalid_argument unless the extents agree.
void require_same_extents(const ComplexArray& a, const ComplexArray& b, const char* what);

}  // namespace pics
