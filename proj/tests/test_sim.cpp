#include <filesystem>

#include "doctest.h"
#include "pics/errors.hpp"
#include "pics/fft.hpp"
#include "pics/sim.hpp"
#include "support.hpp"

using namespace pics;
using namespace pics::sim;

namespace {

std::vector<Ellipse> three_ellipses() {
  return {{0.0, 0.0, 0.35, 0.42, 0.0, cplx(1.0, 0.0)},
          {0.1, -0.05, 0.12, 0.2, 0.4, cplx(-0.4, 0.2)},
          {-0.15, 0.12, 0.08, 0.05, -0.7, cplx(0.3, 0.0)}};
}

// Point-in-ellipse rasterization with s x s sub-pixel samples per pixel.
ComplexArray rasterize(const std::vector<Ellipse>& ellipses, std::size_t M, std::size_t s) {
  ComplexArray img({M, M});
  for (std::size_t j = 0; j < M; ++j)
    for (std::size_t i = 0; i < M; ++i) {
      cplx acc{};
      for (std::size_t b = 0; b < s; ++b)
        for (std::size_t a = 0; a < s; ++a) {
          const double x = (static_cast<double>(i) - M / 2.0 + (a + 0.5) / s - 0.5) / M;
          const double y = (static_cast<double>(j) - M / 2.0 + (b + 0.5) / s - 0.5) / M;
          for (const auto& e : ellipses) {
            const double dx = x - e.cx, dy = y - e.cy;
            const double u = dx * std::cos(e.angle) + dy * std::sin(e.angle);
            const double v = -dx * std::sin(e.angle) + dy * std::cos(e.angle);
            if ((u / e.a) * (u / e.a) + (v / e.b) * (v / e.b) <= 1.0) acc += e.amplitude;
          }
        }
      img.at({i, j}) = acc / static_cast<double>(s * s);
    }
  return img;
}

// Relative error of an oversampled SENSE forward model against analytic
// coil k-space over the central half of the sampled grid.
double sense_discretization_error(std::size_t X) {
  const auto ellipses = three_ellipses();
  const auto [unused, filter] = gen_sensitivities(4, {X, X}, 17);
  const std::size_t G = 2 * X;
  const ComplexArray maps = render_sensitivities(filter, {G, G}, 2.0);
  const ComplexArray x = resize_center(phantom_image(ellipses, {X, X}), {G, G});
  ComplexArray coil(maps.extents());
  const std::size_t n = G * G, N = filter.n_coils();
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t p = 0; p < n; ++p) coil[p + c * n] = x[p] * maps[p + c * n];
  ComplexArray k = fftc(coil, {0, 1});
  k *= std::sqrt(static_cast<double>(n)) / static_cast<double>(X * X);

  std::vector<KPoint> pts;
  std::vector<std::size_t> idx;
  for (std::size_t j = G / 4; j < 3 * G / 4; ++j)
    for (std::size_t i = G / 4; i < 3 * G / 4; ++i) {
      pts.push_back({(static_cast<double>(i) - X) / 2.0, (static_cast<double>(j) - X) / 2.0});
      idx.push_back(i + G * j);
    }
  const ComplexArray ref = synth_multicoil_points(ellipses, filter, pts);
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t p = 0; p < pts.size(); ++p) {
      num += std::norm(k[idx[p] + c * n] - ref.at({p, c}));
      den += std::norm(ref.at({p, c}));
    }
  return std::sqrt(num / den);
}

Eigen::MatrixXcd sample_covariance(const ComplexArray& y) {
  const std::size_t N = y.extents().back(), n = y.size() / N;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(N, N);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = 0; b < N; ++b) c(a, b) += y[s + a * n] * std::conj(y[s + b * n]);
  return c / static_cast<double>(n);
}

}  // namespace

TEST_CASE("ellipse transform at DC is the integral") {
  const std::vector<Ellipse> e{{0.0, 0.0, 0.3, 0.2, 0.0, cplx(2.0, 0.0)}};
  CHECK(std::abs(phantom_kspace(e, KPoint{0.0, 0.0}) - 2.0 * std::numbers::pi * 0.3 * 0.2) < 1e-14);
}

TEST_CASE("real phantoms have Hermitian-symmetric k-space") {
  const auto e = shepp_logan();
  for (int t = 0; t < 20; ++t) {
    const KPoint k{0.37 * t - 3.1, 1.3 - 0.21 * t};
    CHECK(std::abs(phantom_kspace(e, KPoint{-k.kx, -k.ky}) - std::conj(phantom_kspace(e, k))) < 1e-13);
  }
}

TEST_CASE("phantom k-space is linear in amplitude and obeys the shift rule") {
  auto e = three_ellipses();
  auto doubled = e;
  for (auto& x : doubled) x.amplitude *= 2.0;
  auto shifted = e;
  const double dx = 0.031, dy = -0.047;
  for (auto& x : shifted) {
    x.cx += dx;
    x.cy += dy;
  }
  for (int t = 0; t < 15; ++t) {
    const KPoint k{1.7 * t - 11.0, 4.0 - 0.9 * t};
    const cplx v = phantom_kspace(e, k);
    CHECK(std::abs(phantom_kspace(doubled, k) - 2.0 * v) <= 1e-15 * std::abs(v) + 1e-300);
    const cplx phase = std::polar(1.0, -2.0 * std::numbers::pi * (k.kx * dx + k.ky * dy));
    CHECK(std::abs(phantom_kspace(shifted, k) - phase * v) < 1e-12);
  }
}

TEST_CASE("analytic k-space agrees with a finely rasterized phantom") {
  const auto e = three_ellipses();
  const std::size_t M = 512, X = 64;
  ComplexArray raster = fftc(rasterize(e, M, 2), {0, 1});
  raster *= 1.0 / static_cast<double>(M);
  const ComplexArray grid = resize_center(raster, {X, X});
  const ComplexArray exact = phantom_grid_kspace(e, {X, X});
  const ComplexArray a = resize_center(grid, {32, 32}), b = resize_center(exact, {32, 32});
  CHECK(relative_error(a, b) < 2e-2);
}

TEST_CASE("Shepp-Logan list matches the shipped data file") {
  const auto file = read_ellipses(std::filesystem::path(PICS_DATA_DIR) / "shepp_logan.txt");
  const auto built = shepp_logan();
  REQUIRE(file.size() == built.size());
  for (std::size_t i = 0; i < file.size(); ++i) {
    CHECK(file[i].cx == doctest::Approx(built[i].cx).epsilon(1e-15));
    CHECK(file[i].a == doctest::Approx(built[i].a).epsilon(1e-15));
    CHECK(file[i].angle == doctest::Approx(built[i].angle).epsilon(1e-15));
    CHECK(file[i].amplitude == built[i].amplitude);
  }
}

TEST_CASE("ellipse files round-trip") {
  const auto path = std::filesystem::temp_directory_path() / "pics_ellipses.txt";
  write_ellipses(path, three_ellipses());
  const auto back = read_ellipses(path);
  REQUIRE(back.size() == 3);
  CHECK(back[1].amplitude == cplx(-0.4, 0.2));
  CHECK(back[2].angle == -0.7);
}

TEST_CASE("DC-only filters give constant maps") {
  SensitivityOptions opt;
  opt.dc_only = true;
  const auto [maps, filter] = gen_sensitivities(1, {12, 10}, 3, opt);
  for (std::size_t p = 0; p < 120; ++p) CHECK(std::abs(maps.maps[p] - maps.maps[0]) < 1e-14);
  CHECK(std::abs(std::abs(maps.maps[0]) - 1.0) < 1e-14);
}

TEST_CASE("sensitivities are deterministic and meet the RSS floor") {
  const auto a = gen_sensitivities(8, {32, 32}, 99);
  const auto b = gen_sensitivities(8, {32, 32}, 99);
  CHECK(a.first.maps == b.first.maps);
  CHECK(a.second.coeffs == b.second.coeffs);
  const std::size_t n = 32 * 32;
  double lo = 1e9, hi = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < 8; ++c) s += std::norm(a.first.maps[p + c * n]);
    lo = std::min(lo, std::sqrt(s));
    hi = std::max(hi, std::sqrt(s));
  }
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lo >= 0.2 - 1e-12);
  CHECK_THROWS_AS(gen_sensitivities(0, {8, 8}, 1), std::invalid_argument);
}

TEST_CASE("rendered maps equal the zero-padded inverse FFT of the coefficients") {
  const auto [maps, filter] = gen_sensitivities(3, {16, 20}, 5);
  ComplexArray padded = resize_center(filter.coeffs, {16, 20, 3});
  ComplexArray ref = ifftc(padded, {0, 1});
  ref *= std::sqrt(16.0 * 20.0);
  CHECK(relative_error(maps.maps, ref) < 1e-12);
}

TEST_CASE("coil k-space with a unit DC filter is the phantom k-space") {
  CoilFilter f{ComplexArray({3, 3, 2})};
  f.coeffs.at({1, 1, 0}) = 1.0;
  f.coeffs.at({1, 1, 1}) = 1.0;
  const auto e = three_ellipses();
  const auto pattern = SamplingPattern::trajectory({16, 16}, {{0.5, 1.5}, {-3.2, 2.0}, {7.0, -8.0}});
  const ComplexArray y = synth_multicoil_kspace(e, f, pattern);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t c = 0; c < 2; ++c) CHECK(std::abs(y.at({p, c}) - phantom_kspace(e, pattern.points()[p])) < 1e-15);
}

TEST_CASE("Cartesian synthesis matches pointwise synthesis") {
  const auto e = three_ellipses();
  const auto [maps, filter] = gen_sensitivities(3, {12, 12}, 8);
  std::vector<std::uint8_t> mask(144, 0);
  for (std::size_t i = 0; i < 144; i += 5) mask[i] = 1;
  const auto pattern = SamplingPattern::cartesian({12, 12}, mask);
  const ComplexArray grid = synth_multicoil_kspace(e, filter, pattern);
  const auto pts = pattern.sample_points();
  const ComplexArray ref = synth_multicoil_points(e, filter, pts);
  std::size_t p = 0;
  for (std::size_t j = 0; j < 12; ++j)
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t c = 0; c < 3; ++c) {
        const cplx v = grid.at({i, j, c});
        if (pattern.sampled(i, j)) {
          CHECK(std::abs(v - ref.at({p, c})) < 1e-13);
        } else {
          CHECK(v == cplx{});
        }
      }
      if (pattern.sampled(i, j)) ++p;
    }
}

TEST_CASE("complex coil k-space is not conjugate symmetric") {
  const auto e = three_ellipses();
  const auto [maps, filter] = gen_sensitivities(2, {16, 16}, 4);
  const std::vector<KPoint> pts{{2.0, 3.0}, {-2.0, -3.0}};
  const ComplexArray y = synth_multicoil_points(e, filter, pts);
  CHECK(std::abs(y.at({1, 0}) - std::conj(y.at({0, 0}))) > 1e-3);
}

TEST_CASE("32-coil simulations are supported") {
  const auto [maps, filter] = gen_sensitivities(32, {24, 24}, 1);
  CHECK(maps.n_coils() == 32);
  const auto pattern = SamplingPattern::trajectory({24, 24}, {{0.0, 0.0}, {1.0, 2.0}});
  CHECK(synth_multicoil_kspace(shepp_logan(), filter, pattern).extents() == Extents{2, 32});
}

TEST_CASE("synthesis rejects empty patterns") {
  const auto [maps, filter] = gen_sensitivities(2, {8, 8}, 4);
  const auto pattern = SamplingPattern::trajectory({8, 8}, {});
  CHECK_THROWS_AS(synth_multicoil_kspace(three_ellipses(), filter, pattern), std::invalid_argument);
}

TEST_CASE("oversampled SENSE discretization error is small and shrinks with resolution") {
  const double e32 = sense_discretization_error(32);
  const double e64 = sense_discretization_error(64);
  const double e128 = sense_discretization_error(128);
  MESSAGE("discretization error 32/64/128: " << e32 << " " << e64 << " " << e128);
  CHECK(e128 < 1e-3);
  CHECK(e32 / e64 >= 2.0);
  CHECK(e64 / e128 >= 2.0);
}

TEST_CASE("vanishing noise leaves data unchanged") {
  const ComplexArray y = testing::random_array({5, 4, 3}, 2);
  NoiseModel m{Eigen::MatrixXcd::Identity(3, 3) * 1e-30, 7};
  CHECK(relative_error(add_noise(y, m), y) < 1e-12);
}

TEST_CASE("noise is deterministic and has the model covariance") {
  Eigen::MatrixXcd cov(3, 3);
  cov << 2.0, cplx(0.5, 0.3), 0.2, cplx(0.5, -0.3), 1.0, cplx(0.0, 0.1), 0.2, cplx(0.0, -0.1), 0.5;
  const NoiseModel m{cov, 42};
  const ComplexArray zero({100000, 3});
  const ComplexArray a = add_noise(zero, m), b = add_noise(zero, m);
  CHECK(a == b);
  const Eigen::MatrixXcd emp = sample_covariance(a);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (std::abs(cov(i, j)) > 0.0) {
        CHECK(std::abs(emp(i, j) - cov(i, j)) <= 0.05 * std::abs(cov(i, j)) + 0.01 * std::sqrt(std::abs(cov(i, i) * cov(j, j))));
      }
    }
  CHECK_THROWS_AS(add_noise(ComplexArray({4, 2}), m), std::invalid_argument);
}

TEST_CASE("whitening") {
  const ComplexArray y = testing::random_array({7, 2}, 3);
  CHECK(whiten(y, Eigen::MatrixXcd::Identity(2, 2)).data == y);
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 1.0;
  const auto w = whiten(y, d);
  for (std::size_t s = 0; s < 7; ++s) {
    CHECK(std::abs(w.data.at({s, 0}) - 0.5 * y.at({s, 0})) < 1e-15);
    CHECK(w.data.at({s, 1}) == y.at({s, 1}));
  }
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(whiten(y, bad), NumericalError);
}

TEST_CASE("whitened noise has identity covariance") {
  Eigen::MatrixXcd cov(2, 2);
  cov << 3.0, cplx(1.0, 0.5), cplx(1.0, -0.5), 1.5;
  const ComplexArray noise = add_noise(ComplexArray({100000, 2}), {cov, 5});
  const Eigen::MatrixXcd emp = sample_covariance(whiten(noise, cov).data);
  CHECK((emp - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
}
