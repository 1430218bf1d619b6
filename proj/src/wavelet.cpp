#include "pics/wavelet.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pics {
namespace {

const std::array<double, 4>& lowpass() {
  static const std::array<double, 4> h = [] {
    const double s3 = std::sqrt(3.0), d = 4.0 * std::sqrt(2.0);
    return std::array<double, 4>{(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
  }();
  return h;
}

const std::array<double, 4>& highpass() {
  static const std::array<double, 4> g = [] {
    const auto& h = lowpass();
    return std::array<double, 4>{h[3], -h[2], h[1], -h[0]};
  }();
  return g;
}

// One analysis step on a strided line of even length n.
void analyze(cplx* line, std::size_t n, std::size_t stride, std::vector<cplx>& tmp) {
  const auto& h = lowpass();
  const auto& g = highpass();
  tmp.assign(n, cplx{});
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    cplx a{}, d{};
    for (std::size_t k = 0; k < 4; ++k) {
      const cplx v = line[((2 * i + k) % n) * stride];
      a += h[k] * v;
      d += g[k] * v;
    }
    tmp[i] = a;
    tmp[half + i] = d;
  }
  for (std::size_t i = 0; i < n; ++i) line[i * stride] = tmp[i];
}

void synthesize(cplx* line, std::size_t n, std::size_t stride, std::vector<cplx>& tmp) {
  const auto& h = lowpass();
  const auto& g = highpass();
  tmp.assign(n, cplx{});
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const cplx a = line[i * stride], d = line[(half + i) * stride];
    for (std::size_t k = 0; k < 4; ++k) tmp[(2 * i + k) % n] += h[k] * a + g[k] * d;
  }
  for (std::size_t i = 0; i < n; ++i) line[i * stride] = tmp[i];
}

void check_extents(const ComplexArray& x, std::size_t levels) {
  if (x.rank() < 2) throw std::invalid_argument("dwt needs at least 2 dimensions");
  const std::size_t div = std::size_t{1} << levels;
  for (std::size_t d = 0; d < 2; ++d) {
    if (x.extent(d) % div != 0 || x.extent(d) < div) {
      throw std::invalid_argument("dwt: extent " + std::to_string(x.extent(d)) + " not divisible by 2^" +
                                  std::to_string(levels));
    }
  }
}

template <class Step>
void run_level(ComplexArray& x, std::size_t nx, std::size_t ny, Step step) {
  const std::size_t X = x.extent(0), plane = X * x.extent(1), slices = x.size() / plane;
  std::vector<cplx> tmp;
  for (std::size_t s = 0; s < slices; ++s) {
    cplx* base = x.vector().data() + s * plane;
    for (std::size_t j = 0; j < ny; ++j) step(base + j * X, nx, 1, tmp);
    for (std::size_t i = 0; i < nx; ++i) step(base + i, ny, X, tmp);
  }
}

class Wavelet final : public Transform {
 public:
  explicit Wavelet(std::size_t levels) : levels_(levels) {}
  ComplexArray forward(const ComplexArray& x) const override { return dwt(x, levels_); }
  ComplexArray inverse(const ComplexArray& c) const override { return idwt(c, levels_); }

 private:
  std::size_t levels_;
};

}  // namespace

ComplexArray dwt(const ComplexArray& x, std::size_t levels) {
  check_extents(x, levels);
  ComplexArray c = x;
  std::size_t nx = x.extent(0), ny = x.extent(1);
  for (std::size_t l = 0; l < levels; ++l) {
    run_level(c, nx, ny, analyze);
    nx /= 2;
    ny /= 2;
  }
  return c;
}

ComplexArray idwt(const ComplexArray& c, std::size_t levels) {
  check_extents(c, levels);
  ComplexArray x = c;
  for (std::size_t l = levels; l-- > 0;) {
    run_level(x, c.extent(0) >> l, c.extent(1) >> l, synthesize);
  }
  return x;
}

TransformHandle wavelet_transform(std::size_t levels) { return std::make_shared<Wavelet>(levels); }

}  // namespace pics
