#include "pics/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

namespace pics {
namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* ptr;
};

// Plans are created once per (length, direction) and executed on fresh
// aligned buffers through the new-array interface.
fftw_plan line_plan(std::size_t n, int sign) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(n, sign);
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  FftwBuffer in(n), out(n);
  fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in.ptr, out.ptr, sign, FFTW_ESTIMATE);
  if (!p) throw std::runtime_error("FFTW failed to create a plan of length " + std::to_string(n));
  plans.emplace(key, p);
  return p;
}

void check_dims(const ComplexArray& x, const std::vector<std::size_t>& dims) {
  for (auto d : dims) {
    if (d >= x.rank()) {
      throw std::invalid_argument("fft dimension " + std::to_string(d) + " out of range for array of rank " +
                                  std::to_string(x.rank()));
    }
  }
}

void transform_dim(ComplexArray& x, std::size_t dim, int sign) {
  const std::size_t n = x.extent(dim);
  if (n == 1) return;
  const std::size_t stride = x.stride(dim);
  const std::size_t outer = x.size() / (n * stride);
  const std::size_t c = n / 2;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  fftw_plan plan = line_plan(n, sign);
  FftwBuffer in(n), out(n);
  auto* data = x.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < stride; ++i) {
      cplx* base = data + o * n * stride + i;
      for (std::size_t k = 0; k < n; ++k) {
        const cplx v = base[k * stride];
        auto* dst = in.ptr[(k + n - c) % n];
        dst[0] = v.real();
        dst[1] = v.imag();
      }
      fftw_execute_dft(plan, in.ptr, out.ptr);
      for (std::size_t k = 0; k < n; ++k) {
        const auto* src = out.ptr[k];
        base[((k + c) % n) * stride] = cplx(src[0] * scale, src[1] * scale);
      }
    }
  }
}

ComplexArray transform(const ComplexArray& x, const std::vector<std::size_t>& dims, int sign) {
  check_dims(x, dims);
  ComplexArray y = x;
  for (auto d : dims) transform_dim(y, d, sign);
  return y;
}

}  // namespace

ComplexArray fftc(const ComplexArray& x, const std::vector<std::size_t>& dims) {
  return transform(x, dims, FFTW_FORWARD);
}

ComplexArray ifftc(const ComplexArray& x, const std::vector<std::size_t>& dims) {
  return transform(x, dims, FFTW_BACKWARD);
}

std::vector<std::size_t> leading_dims(std::size_t n) {
  std::vector<std::size_t> dims(n);
  for (std::size_t i = 0; i < n; ++i) dims[i] = i;
  return dims;
}

ComplexArray resize_center(const ComplexArray& x, const Extents& new_extents) {
  if (new_extents.size() != x.rank()) {
    throw std::invalid_argument("resize_center: rank mismatch " + format_extents(x.extents()) + " -> " +
                                format_extents(new_extents));
  }
  ComplexArray y(new_extents);
  const std::size_t rank = x.rank();
  std::vector<long> shift(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    shift[d] = static_cast<long>(new_extents[d] / 2) - static_cast<long>(x.extent(d) / 2);
  }
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < y.size(); ++flat) {
    std::size_t src = 0, s = 1;
    bool inside = true;
    for (std::size_t d = 0; d < rank; ++d) {
      long j = static_cast<long>(idx[d]) - shift[d];
      if (j < 0 || j >= static_cast<long>(x.extent(d))) {
        inside = false;
        break;
      }
      src += static_cast<std::size_t>(j) * s;
      s *= x.extent(d);
    }
    if (inside) y[flat] = x[src];
    for (std::size_t d = 0; d < rank; ++d) {
      if (++idx[d] < new_extents[d]) break;
      idx[d] = 0;
    }
  }
  return y;
}

}  // namespace pics
