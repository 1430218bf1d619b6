#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pics/fft.hpp"
#include "pics/operators.hpp"

namespace pics::op {
namespace {

constexpr double kPi = std::numbers::pi;

// One axis of the gridding setup: oversampled length, kernel shape and the
// image-domain deapodization.
struct Axis {
  std::size_t image = 0;
  std::size_t grid = 0;
  double beta = 0.0;
  double width = 0.0;
  std::vector<double> deapod;  // per centred image index

  double kernel(double s) const {
    const double t = 2.0 * s / width;
    if (std::abs(t) > 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - t * t));
  }

  // Continuous Fourier transform of the kernel at image offset n:
  // integral kernel(s) exp(2 pi i s n / G) ds.
  double kernel_ft(double n) const {
    const double a = kPi * width * n / static_cast<double>(grid);
    const double d = beta * beta - a * a;
    if (d > 1e-12) {
      const double r = std::sqrt(d);
      return width * std::sinh(r) / r;
    }
    if (d < -1e-12) {
      const double r = std::sqrt(-d);
      return width * std::sin(r) / r;
    }
    return width;
  }
};

Axis make_axis(std::size_t image, double oversample, int width) {
  Axis ax;
  ax.image = image;
  ax.grid = static_cast<std::size_t>(std::ceil(oversample * static_cast<double>(image)));
  if (ax.grid % 2) ++ax.grid;
  ax.width = static_cast<double>(width);
  ax.beta = kaiser_bessel_beta(static_cast<double>(ax.grid) / static_cast<double>(image), width);
  const double scale = std::sqrt(static_cast<double>(ax.grid) / static_cast<double>(image));
  ax.deapod.resize(image);
  for (std::size_t i = 0; i < image; ++i) {
    const double n = static_cast<double>(static_cast<long>(i) - static_cast<long>(image / 2));
    ax.deapod[i] = scale / ax.kernel_ft(n);
  }
  return ax;
}

struct Footprint {
  std::vector<std::size_t> index;  // flat oversampled-grid indices
  std::vector<double> weight;
};

class Nufft final : public LinearOperator {
 public:
  Nufft(const SamplingPattern& traj, const Extents& image, double oversample, int width)
      : image_(image), points_(traj.points()) {
    if (traj.is_cartesian()) throw std::invalid_argument("nufft needs a trajectory pattern");
    if (image.size() != 2) throw std::invalid_argument("nufft: image must be 2D");
    if (!(oversample >= 1.25)) throw std::invalid_argument("nufft: oversample must be >= 1.25");
    if (width < 3) throw std::invalid_argument("nufft: kernel width must be >= 3");
    if (points_.empty()) throw std::invalid_argument("nufft: empty trajectory");
    ax_ = make_axis(image[0], oversample, width);
    ay_ = make_axis(image[1], oversample, width);
    grid_ = {ax_.grid, ay_.grid};
    data_ = {points_.size()};
    const double hx = static_cast<double>(image[0]) / 2.0, hy = static_cast<double>(image[1]) / 2.0;
    for (const auto& k : points_) {
      if (!std::isfinite(k.kx) || !std::isfinite(k.ky) || std::abs(k.kx) > hx || std::abs(k.ky) > hy) {
        throw std::invalid_argument("nufft: trajectory point outside the grid");
      }
    }
    build_footprints();
  }

  ComplexArray apply(const ComplexArray& x) const override {
    if (x.extents() != image_) throw std::invalid_argument("nufft apply: image extents mismatch");
    ComplexArray scaled = x;
    for (std::size_t j = 0; j < image_[1]; ++j)
      for (std::size_t i = 0; i < image_[0]; ++i) scaled.at({i, j}) *= ax_.deapod[i] * ay_.deapod[j];
    const ComplexArray g = fftc(resize_center(scaled, grid_), {0, 1});
    ComplexArray y(data_);
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const auto& fp = foot_[p];
      cplx acc{};
      for (std::size_t t = 0; t < fp.index.size(); ++t) acc += fp.weight[t] * g[fp.index[t]];
      y[p] = acc;
    }
    return y;
  }

  ComplexArray adjoint(const ComplexArray& y) const override {
    if (y.extents() != data_) throw std::invalid_argument("nufft adjoint: data extents mismatch");
    ComplexArray g(grid_);
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const auto& fp = foot_[p];
      for (std::size_t t = 0; t < fp.index.size(); ++t) g[fp.index[t]] += fp.weight[t] * y[p];
    }
    ComplexArray x = resize_center(ifftc(g, {0, 1}), image_);
    for (std::size_t j = 0; j < image_[1]; ++j)
      for (std::size_t i = 0; i < image_[0]; ++i) x.at({i, j}) *= ax_.deapod[i] * ay_.deapod[j];
    return x;
  }

  const Extents& domain() const override { return image_; }
  const Extents& codomain() const override { return data_; }
  const std::vector<KPoint>& points() const { return points_; }
  double oversample() const { return static_cast<double>(ax_.grid) / static_cast<double>(ax_.image); }
  int width() const { return static_cast<int>(ax_.width); }

 private:
  void build_footprints() {
    foot_.resize(points_.size());
    for (std::size_t p = 0; p < points_.size(); ++p) {
      const double ux = points_[p].kx * static_cast<double>(ax_.grid) / static_cast<double>(ax_.image);
      const double uy = points_[p].ky * static_cast<double>(ay_.grid) / static_cast<double>(ay_.image);
      const long x0 = static_cast<long>(std::ceil(ux - ax_.width / 2.0));
      const long x1 = static_cast<long>(std::floor(ux + ax_.width / 2.0));
      const long y0 = static_cast<long>(std::ceil(uy - ay_.width / 2.0));
      const long y1 = static_cast<long>(std::floor(uy + ay_.width / 2.0));
      const long gx = static_cast<long>(ax_.grid), gy = static_cast<long>(ay_.grid);
      auto& fp = foot_[p];
      for (long my = y0; my <= y1; ++my) {
        const double wy = ay_.kernel(uy - static_cast<double>(my));
        const std::size_t iy = static_cast<std::size_t>(((my + gy / 2) % gy + gy) % gy);
        for (long mx = x0; mx <= x1; ++mx) {
          const double w = wy * ax_.kernel(ux - static_cast<double>(mx));
          if (w == 0.0) continue;
          const std::size_t ix = static_cast<std::size_t>(((mx + gx / 2) % gx + gx) % gx);
          fp.index.push_back(ix + ax_.grid * iy);
          fp.weight.push_back(w);
        }
      }
    }
  }

  Extents image_, grid_, data_;
  std::vector<KPoint> points_;
  Axis ax_, ay_;
  std::vector<Footprint> foot_;
};

class SenseNufft final : public LinearOperator {
 public:
  SenseNufft(const SensitivitySet& maps, const SamplingPattern& traj, double oversample, int width)
      : maps_(maps.maps) {
    maps.validate();
    if (maps.oversample_factor != 1.0) throw std::invalid_argument("sense_nufft expects maps on the image grid");
    image_ = maps.spatial_extents();
    nufft_ = std::make_shared<Nufft>(traj, image_, oversample, width);
    data_ = {nufft_->codomain()[0], maps.n_coils()};
  }

  ComplexArray apply(const ComplexArray& x) const override {
    if (x.extents() != image_) throw std::invalid_argument("sense_nufft apply: image extents mismatch");
    const std::size_t n = x.size(), P = data_[0];
    ComplexArray y(data_);
    ComplexArray coil(image_);
    for (std::size_t c = 0; c < data_[1]; ++c) {
      for (std::size_t p = 0; p < n; ++p) coil[p] = x[p] * maps_[p + c * n];
      const ComplexArray yc = nufft_->apply(coil);
      std::copy(yc.vector().begin(), yc.vector().end(), y.vector().begin() + static_cast<std::ptrdiff_t>(c * P));
    }
    return y;
  }

  ComplexArray adjoint(const ComplexArray& y) const override {
    if (y.extents() != data_) throw std::invalid_argument("sense_nufft adjoint: data extents mismatch");
    const std::size_t n = element_count(image_);
    ComplexArray x(image_);
    for (std::size_t c = 0; c < data_[1]; ++c) {
      const ComplexArray zc = nufft_->adjoint(y.slice_last(c));
      for (std::size_t p = 0; p < n; ++p) x[p] += std::conj(maps_[p + c * n]) * zc[p];
    }
    return x;
  }

  const Extents& domain() const override { return image_; }
  const Extents& codomain() const override { return data_; }
  const Nufft& base() const { return *nufft_; }
  const ComplexArray& maps() const { return maps_; }

 private:
  ComplexArray maps_;
  Extents image_, data_;
  std::shared_ptr<Nufft> nufft_;
};

class Toeplitz final : public LinearOperator {
 public:
  Toeplitz(OperatorHandle inner, const Nufft& base, const ComplexArray* maps) : inner_(std::move(inner)) {
    image_ = base.domain();
    padded_ = {2 * image_[0], 2 * image_[1]};
    if (maps) maps_ = *maps;
    // PSF from the adjoint gridding of unit samples on the doubled grid, where
    // the points scale by 2 so the phase exp(2 pi i k.d / X) is unchanged.
    std::vector<KPoint> doubled = base.points();
    for (auto& k : doubled) {
      k.kx *= 2.0;
      k.ky *= 2.0;
    }
    Nufft big(SamplingPattern::trajectory(padded_, doubled), padded_, base.oversample(), base.width());
    ComplexArray ones(big.codomain(), cplx(1.0, 0.0));
    psf_ = big.adjoint(ones);
    psf_ *= std::sqrt(static_cast<double>(element_count(padded_))) / static_cast<double>(element_count(image_));
    kernel_ = fftc(psf_, {0, 1});
    kernel_ *= std::sqrt(static_cast<double>(element_count(padded_)));
  }

  ComplexArray apply(const ComplexArray& x) const override { return inner_->apply(x); }
  ComplexArray adjoint(const ComplexArray& y) const override { return inner_->adjoint(y); }

  ComplexArray normal(const ComplexArray& x) const override {
    if (x.extents() != image_) throw std::invalid_argument("toeplitz normal: image extents mismatch");
    if (maps_.empty()) return convolve(x);
    const std::size_t n = x.size(), N = maps_.extent(2);
    ComplexArray out(image_), coil(image_);
    for (std::size_t c = 0; c < N; ++c) {
      for (std::size_t p = 0; p < n; ++p) coil[p] = x[p] * maps_[p + c * n];
      const ComplexArray t = convolve(coil);
      for (std::size_t p = 0; p < n; ++p) out[p] += std::conj(maps_[p + c * n]) * t[p];
    }
    return out;
  }

  const Extents& domain() const override { return inner_->domain(); }
  const Extents& codomain() const override { return inner_->codomain(); }
  const ComplexArray& psf() const { return psf_; }

 private:
  ComplexArray convolve(const ComplexArray& x) const {
    ComplexArray f = fftc(resize_center(x, padded_), {0, 1});
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= kernel_[i];
    return resize_center(ifftc(f, {0, 1}), image_);
  }

  OperatorHandle inner_;
  Extents image_, padded_;
  ComplexArray maps_;
  ComplexArray psf_, kernel_;
};

}  // namespace

double kaiser_bessel_beta(double oversample, int kernel_width) {
  const double w = static_cast<double>(kernel_width);
  const double t = (w / oversample) * (w / oversample) * (oversample - 0.5) * (oversample - 0.5) - 0.8;
  return kPi * std::sqrt(std::max(t, 0.0));
}

OperatorHandle nufft(const SamplingPattern& trajectory, const Extents& image, double oversample, int kernel_width) {
  return std::make_shared<Nufft>(trajectory, image, oversample, kernel_width);
}

OperatorHandle sense_nufft(const SensitivitySet& maps, const SamplingPattern& trajectory, double oversample,
                           int kernel_width) {
  return std::make_shared<SenseNufft>(maps, trajectory, oversample, kernel_width);
}

OperatorHandle toeplitz_normal(const OperatorHandle& op) {
  if (auto nu = std::dynamic_pointer_cast<const Nufft>(op)) {
    return std::make_shared<Toeplitz>(op, *nu, nullptr);
  }
  if (auto sn = std::dynamic_pointer_cast<const SenseNufft>(op)) {
    return std::make_shared<Toeplitz>(op, sn->base(), &sn->maps());
  }
  throw std::invalid_argument("toeplitz_normal needs a nufft or sense_nufft operator");
}

ComplexArray toeplitz_psf(const OperatorHandle& toeplitz_op) {
  auto t = std::dynamic_pointer_cast<const Toeplitz>(toeplitz_op);
  if (!t) throw std::invalid_argument("toeplitz_psf needs a toeplitz_normal handle");
  return t->psf();
}

}  // namespace pics::op
