#include "pics/sim.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pics/errors.hpp"
#include "pics/fft.hpp"

namespace pics::sim {
namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1].
double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

cplx ellipse_ft(const Ellipse& e, double kx, double ky) {
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  const double u = e.a * (kx * c + ky * s);
  const double v = e.b * (-kx * s + ky * c);
  const double rho = std::hypot(u, v);
  double shape;
  if (rho < 1e-12) {
    shape = kPi;
  } else {
    shape = std::cyl_bessel_j(1.0, 2.0 * kPi * rho) / rho;
  }
  const double phase = -2.0 * kPi * (kx * e.cx + ky * e.cy);
  return e.amplitude * (e.a * e.b * shape) * cplx(std::cos(phase), std::sin(phase));
}

void require_grid2(const Extents& grid, const char* what) {
  if (grid.size() != 2) throw std::invalid_argument(std::string(what) + ": expected a 2D grid");
}

long center(std::size_t n) { return static_cast<long>(n / 2); }

}  // namespace

std::vector<Ellipse> shepp_logan() {
  // Modified Shepp-Logan on [-1, 1]^2, scaled by 0.45 into the unit FOV.
  struct Row { double amp, a, b, x, y, deg; };
  static constexpr Row rows[] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},          {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},      {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},         {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},       {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},     {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  };
  constexpr double scale = 0.45;
  std::vector<Ellipse> out;
  for (const auto& r : rows) {
    out.push_back({scale * r.x, scale * r.y, scale * r.a, scale * r.b, r.deg * kPi / 180.0, cplx(r.amp, 0.0)});
  }
  return out;
}

std::vector<Ellipse> read_ellipses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ellipse file " + path.string());
  std::vector<Ellipse> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Ellipse e;
    double re, im;
    if (!(ls >> e.cx >> e.cy >> e.a >> e.b >> e.angle >> re >> im)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 'cx cy a b angle re im'");
    }
    if (!(e.a > 0.0 && e.b > 0.0)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": semi-axes must be positive");
    }
    e.amplitude = cplx(re, im);
    out.push_back(e);
  }
  return out;
}

void write_ellipses(const std::filesystem::path& path, const std::vector<Ellipse>& ellipses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  // Shortest representation that reads back to the same double.
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  out << "# cx cy a b angle re im\n";
  for (const auto& e : ellipses) {
    out << num(e.cx) << ' ' << num(e.cy) << ' ' << num(e.a) << ' ' << num(e.b) << ' ' << num(e.angle) << ' '
        << num(e.amplitude.real()) << ' ' << num(e.amplitude.imag()) << '\n';
  }
}

cplx phantom_kspace(const std::vector<Ellipse>& ellipses, KPoint k) {
  cplx acc{};
  for (const auto& e : ellipses) acc += ellipse_ft(e, k.kx, k.ky);
  return acc;
}

ComplexArray phantom_kspace(const std::vector<Ellipse>& ellipses, std::span<const KPoint> points) {
  ComplexArray out({std::max<std::size_t>(points.size(), 1)});
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = phantom_kspace(ellipses, points[i]);
  return out;
}

ComplexArray phantom_grid_kspace(const std::vector<Ellipse>& ellipses, const Extents& grid) {
  require_grid2(grid, "phantom_grid_kspace");
  ComplexArray out(grid);
  for (std::size_t j = 0; j < grid[1]; ++j) {
    for (std::size_t i = 0; i < grid[0]; ++i) {
      out.at({i, j}) = phantom_kspace(ellipses, {static_cast<double>(static_cast<long>(i) - center(grid[0])),
                                                 static_cast<double>(static_cast<long>(j) - center(grid[1]))});
    }
  }
  return out;
}

double grid_scale(const Extents& grid) { return std::sqrt(static_cast<double>(element_count(grid))); }

ComplexArray phantom_image(const std::vector<Ellipse>& ellipses, const Extents& grid) {
  ComplexArray img = ifftc(phantom_grid_kspace(ellipses, grid), {0, 1});
  img *= grid_scale(grid);
  return img;
}

ComplexArray render_sensitivities(const CoilFilter& filter, const Extents& grid, double fov_scale) {
  require_grid2(grid, "render_sensitivities");
  const std::size_t K = filter.kernel_size(), N = filter.n_coils();
  if (filter.coeffs.extent(1) != K) throw std::invalid_argument("coil filter must be K x K x N");
  const long hk = static_cast<long>(K / 2);
  auto phasors = [&](std::size_t n) {
    // e[q][i] = exp(2 pi i q r_i)
    std::vector<std::vector<cplx>> e(K, std::vector<cplx>(n));
    for (std::size_t q = 0; q < K; ++q) {
      const double freq = static_cast<double>(static_cast<long>(q) - hk);
      for (std::size_t i = 0; i < n; ++i) {
        const double r = static_cast<double>(static_cast<long>(i) - center(n)) * fov_scale / static_cast<double>(n);
        const double ph = 2.0 * kPi * freq * r;
        e[q][i] = cplx(std::cos(ph), std::sin(ph));
      }
    }
    return e;
  };
  // Pixel size follows the image grid: rendering s FOVs on n points means the
  // image grid has n / s points.
  const auto ex = phasors(grid[0]);
  const auto ey = phasors(grid[1]);
  ComplexArray maps({grid[0], grid[1], N});
  std::vector<cplx> partial(K * grid[0]);
  for (std::size_t c = 0; c < N; ++c) {
    for (std::size_t qy = 0; qy < K; ++qy) {
      for (std::size_t i = 0; i < grid[0]; ++i) {
        cplx acc{};
        for (std::size_t qx = 0; qx < K; ++qx) acc += filter.coeffs.at({qx, qy, c}) * ex[qx][i];
        partial[qy * grid[0] + i] = acc;
      }
    }
    for (std::size_t j = 0; j < grid[1]; ++j) {
      for (std::size_t i = 0; i < grid[0]; ++i) {
        cplx acc{};
        for (std::size_t qy = 0; qy < K; ++qy) acc += partial[qy * grid[0] + i] * ey[qy][j];
        maps.at({i, j, c}) = acc;
      }
    }
  }
  return maps;
}

namespace {

std::pair<double, double> rss_range(const ComplexArray& maps) {
  const std::size_t n = maps.extent(0) * maps.extent(1), N = maps.extent(2);
  double lo = INFINITY, hi = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < N; ++c) s += std::norm(maps[p + c * n]);
    s = std::sqrt(s);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo, hi};
}

}  // namespace

std::pair<SensitivitySet, CoilFilter> gen_sensitivities(std::size_t n_coils, const Extents& grid, std::uint64_t seed,
                                                        const SensitivityOptions& options) {
  if (n_coils < 1) throw std::invalid_argument("gen_sensitivities: n_coils must be >= 1");
  require_grid2(grid, "gen_sensitivities");
  const std::size_t K = options.kernel_size;
  if (K % 2 == 0) throw std::invalid_argument("gen_sensitivities: kernel size must be odd");
  const long hk = static_cast<long>(K / 2);
  CoilFilter filter{ComplexArray({K, K, n_coils})};
  std::uint64_t counter = 0;
  for (std::size_t c = 0; c < n_coils; ++c) {
    for (std::size_t qy = 0; qy < K; ++qy) {
      for (std::size_t qx = 0; qx < K; ++qx) {
        const double fx = static_cast<double>(static_cast<long>(qx) - hk);
        const double fy = static_cast<double>(static_cast<long>(qy) - hk);
        auto [g1, g2] = counter_normal_pair(seed, counter++);
        const bool dc = qx == static_cast<std::size_t>(hk) && qy == static_cast<std::size_t>(hk);
        if (options.dc_only && !dc) continue;
        const double env = std::exp(-(fx * fx + fy * fy) / (2.0 * options.decay * options.decay));
        filter.coeffs.at({qx, qy, c}) = env * cplx(g1, g2) / std::sqrt(2.0);
      }
    }
  }
  // Unit-modulus DC offsets, applied in growing amounts until the RSS floor
  // holds; the draw depends only on the seed.
  std::vector<cplx> dc_phase(n_coils);
  for (std::size_t c = 0; c < n_coils; ++c) {
    auto [g1, g2] = counter_normal_pair(seed ^ 0xD1B54A32D192ED03ULL, c);
    dc_phase[c] = std::polar(1.0, std::atan2(g2, g1));
  }
  const std::size_t dc_idx = static_cast<std::size_t>(hk);
  for (int round = 0;; ++round) {
    ComplexArray maps = render_sensitivities(filter, grid, 1.0);
    auto [lo, hi] = rss_range(maps);
    if (hi <= 0.0) throw NumericalError("gen_sensitivities: all-zero coil filter");
    if (lo / hi >= options.rss_floor || round >= 1000) {
      filter.coeffs *= 1.0 / hi;
      maps *= 1.0 / hi;
      return {SensitivitySet{std::move(maps), 1.0, std::nullopt}, std::move(filter)};
    }
    for (std::size_t c = 0; c < n_coils; ++c) {
      filter.coeffs.at({dc_idx, dc_idx, c}) += 0.1 * hi / std::sqrt(static_cast<double>(n_coils)) * dc_phase[c];
    }
  }
}

ComplexArray synth_multicoil_points(const std::vector<Ellipse>& ellipses, const CoilFilter& filter,
                                    std::span<const KPoint> points) {
  if (points.empty()) throw std::invalid_argument("synth_multicoil_kspace: empty sampling pattern");
  const std::size_t K = filter.kernel_size(), N = filter.n_coils();
  const long hk = static_cast<long>(K / 2);
  ComplexArray out({points.size(), N});
  std::vector<cplx> local(K * K);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t qy = 0; qy < K; ++qy) {
      for (std::size_t qx = 0; qx < K; ++qx) {
        local[qx + K * qy] = phantom_kspace(
            ellipses, {points[p].kx - static_cast<double>(static_cast<long>(qx) - hk),
                       points[p].ky - static_cast<double>(static_cast<long>(qy) - hk)});
      }
    }
    for (std::size_t c = 0; c < N; ++c) {
      cplx acc{};
      for (std::size_t q = 0; q < K * K; ++q) acc += filter.coeffs[q + K * K * c] * local[q];
      out.at({p, c}) = acc;
    }
  }
  return out;
}

ComplexArray synth_multicoil_kspace(const std::vector<Ellipse>& ellipses, const CoilFilter& filter,
                                    const SamplingPattern& pattern) {
  if (pattern.sample_count() == 0) throw std::invalid_argument("synth_multicoil_kspace: empty sampling pattern");
  if (!pattern.is_cartesian()) return synth_multicoil_points(ellipses, filter, pattern.points());

  const Extents& grid = pattern.grid();
  const std::size_t K = filter.kernel_size(), N = filter.n_coils();
  const long hk = static_cast<long>(K / 2);
  // Phantom on the grid extended by the filter half-width, shared by all coils.
  const std::size_t ex = grid[0] + K - 1, ey = grid[1] + K - 1;
  std::vector<cplx> ext(ex * ey);
  std::vector<std::uint8_t> needed(ex * ey, 0);
  for (std::size_t j = 0; j < grid[1]; ++j) {
    for (std::size_t i = 0; i < grid[0]; ++i) {
      if (!pattern.sampled(i, j)) continue;
      for (std::size_t qy = 0; qy < K; ++qy)
        for (std::size_t qx = 0; qx < K; ++qx) needed[(i + K - 1 - qx) + ex * (j + K - 1 - qy)] = 1;
    }
  }
  for (std::size_t j = 0; j < ey; ++j) {
    for (std::size_t i = 0; i < ex; ++i) {
      if (!needed[i + ex * j]) continue;
      const double kx = static_cast<double>(static_cast<long>(i) - hk - center(grid[0]));
      const double ky = static_cast<double>(static_cast<long>(j) - hk - center(grid[1]));
      ext[i + ex * j] = phantom_kspace(ellipses, {kx, ky});
    }
  }
  ComplexArray out({grid[0], grid[1], N});
  for (std::size_t c = 0; c < N; ++c) {
    for (std::size_t j = 0; j < grid[1]; ++j) {
      for (std::size_t i = 0; i < grid[0]; ++i) {
        if (!pattern.sampled(i, j)) continue;
        cplx acc{};
        // k - q with q = (qx - hk, qy - hk) lands at extended index i + K - 1 - qx.
        for (std::size_t qy = 0; qy < K; ++qy)
          for (std::size_t qx = 0; qx < K; ++qx)
            acc += filter.coeffs.at({qx, qy, c}) * ext[(i + K - 1 - qx) + ex * (j + K - 1 - qy)];
        out.at({i, j, c}) = acc;
      }
    }
  }
  return out;
}

ComplexArray coil_images(const ComplexArray& image, const SensitivitySet& maps) {
  const std::size_t n = image.size(), N = maps.n_coils();
  if (maps.maps.size() != n * N) throw std::invalid_argument("coil_images: map extents do not match the image");
  ComplexArray out(maps.maps.extents());
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t p = 0; p < n; ++p) out[p + c * n] = image[p] * maps.maps[p + c * n];
  return out;
}

std::pair<double, double> counter_normal_pair(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
  const double u1 = to_unit(splitmix64(key));
  const double u2 = to_unit(splitmix64(key ^ 0xA0761D6478BD642FULL));
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
}

namespace {

Eigen::MatrixXcd cholesky_lower(const Eigen::MatrixXcd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) throw std::invalid_argument("covariance must be square");
  const double scale = cov.norm();
  if ((cov - cov.adjoint()).norm() > 1e-12 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("covariance is not Hermitian");
  }
  Eigen::LLT<Eigen::MatrixXcd> llt(cov);
  if (llt.info() != Eigen::Success || scale == 0.0) {
    throw NumericalError("covariance is not positive definite");
  }
  Eigen::MatrixXcd L = llt.matrixL();
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i).real() > 0.0)) throw NumericalError("covariance is not positive definite");
  }
  return L;
}

}  // namespace

ComplexArray add_noise(const ComplexArray& y, const NoiseModel& model, const std::vector<std::uint8_t>* mask) {
  const std::size_t N = y.extents().back();
  if (static_cast<std::size_t>(model.covariance.rows()) != N) {
    throw std::invalid_argument("add_noise: covariance is " + std::to_string(model.covariance.rows()) +
                                "x" + std::to_string(model.covariance.cols()) + " but data has " +
                                std::to_string(N) + " coils");
  }
  const Eigen::MatrixXcd L = cholesky_lower(model.covariance);
  const std::size_t n = y.size() / N;
  if (mask && mask->size() != n) throw std::invalid_argument("add_noise: mask size does not match data");
  ComplexArray out = y;
  Eigen::VectorXcd w(static_cast<Eigen::Index>(N));
  for (std::size_t s = 0; s < n; ++s) {
    if (mask && !(*mask)[s]) continue;
    for (std::size_t c = 0; c < N; ++c) {
      auto [g1, g2] = counter_normal_pair(model.seed, s * N + c);
      w(static_cast<Eigen::Index>(c)) = cplx(g1, g2) / std::sqrt(2.0);
    }
    const Eigen::VectorXcd e = L * w;
    for (std::size_t c = 0; c < N; ++c) out[s + c * n] += e(static_cast<Eigen::Index>(c));
  }
  return out;
}

Whitened whiten(const ComplexArray& y, const Eigen::MatrixXcd& covariance) {
  const std::size_t N = y.extents().back();
  if (static_cast<std::size_t>(covariance.rows()) != N) {
    throw std::invalid_argument("whiten: covariance size does not match the coil dimension");
  }
  const Eigen::MatrixXcd L = cholesky_lower(covariance);
  const Eigen::MatrixXcd W =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXcd::Identity(L.rows(), L.cols()));
  const std::size_t n = y.size() / N;
  ComplexArray out(y.extents());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t a = 0; a < N; ++a) {
      cplx acc{};
      for (std::size_t b = 0; b <= a; ++b) acc += W(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * y[s + b * n];
      out[s + a * n] = acc;
    }
  }
  return {std::move(out), W};
}

}  // namespace pics::sim
