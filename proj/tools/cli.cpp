#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pics/calib.hpp"
#include "pics/errors.hpp"
#include "pics/fft.hpp"
#include "pics/io.hpp"
#include "pics/nlinv.hpp"
#include "pics/operators.hpp"
#include "pics/rkhs.hpp"
#include "pics/sampling.hpp"
#include "pics/sim.hpp"
#include "pics/solvers.hpp"
#include "png_export.hpp"

namespace pics::cli {
namespace {

namespace fs = std::filesystem;

ComplexArray load(const std::string& path) {
  if (fs::path(path).extension() == ".npy") return io::read_npy(path);
  return io::read_array(path);
}

void save(const std::string& path, const ComplexArray& a) {
  if (fs::path(path).extension() == ".npy") {
    io::write_npy(path, a);
  } else {
    io::write_array(path, a);
  }
}

Extents grid_from(const std::vector<std::size_t>& size) {
  if (size.size() == 1) return {size[0], size[0]};
  return {size[0], size[1]};
}

SensitivitySet load_maps(const std::string& path) {
  SensitivitySet s;
  s.maps = load(path);
  if (s.maps.rank() != 3) throw std::invalid_argument("maps must be (X, Y, N), got " + format_extents(s.maps.extents()));
  return s;
}

/// A Cartesian mask file, or a trajectory file on the given grid.
SamplingPattern load_pattern(const std::string& mask, const std::string& traj, const Extents& grid) {
  if (!mask.empty() && !traj.empty()) throw std::invalid_argument("give either --pattern or --traj, not both");
  if (!mask.empty()) return SamplingPattern::from_mask_array(load(mask));
  if (!traj.empty()) return SamplingPattern::from_trajectory_array(load(traj), grid);
  throw std::invalid_argument("a sampling pattern is required (--pattern or --traj)");
}

std::vector<std::uint8_t> require_mask(const SamplingPattern& p, const char* what) {
  if (!p.is_cartesian()) throw std::invalid_argument(std::string(what) + " needs a Cartesian mask");
  return p.mask();
}

/// JSON-lines solve log written in one piece at the end.
class Report {
 public:
  explicit Report(std::string path) : path_(std::move(path)) {}
  bool enabled() const { return !path_.empty(); }
  void line(const nlohmann::json& j) {
    if (enabled()) text_ += j.dump() + "\n";
  }
  solve::ProgressFn progress() {
    if (!enabled()) return {};
    return [this](std::size_t it, double objective, double residual) {
      line({{"iteration", it}, {"objective", objective}, {"residual", residual}});
    };
  }
  void finish(const solve::SolveReport& r) {
    line({{"event", "done"},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"residual", r.residual_norm},
          {"objective", r.objective_trace.empty() ? 0.0 : r.objective_trace.back()}});
    if (enabled()) io::write_file_atomic(path_, text_);
  }

 private:
  std::string path_;
  std::string text_;
};

solve::ProxPenalty make_penalty(const std::string& reg, double lambda, std::size_t levels) {
  solve::ProxPenalty p;
  p.lambda = lambda;
  if (reg == "l1wav") {
    p.kind = solve::PenaltyKind::l1_transform;
    p.transform = wavelet_transform(levels);
  } else if (reg == "l2") {
    p.kind = solve::PenaltyKind::l2;
  } else if (reg == "tv") {
    p.kind = solve::PenaltyKind::tv_iso;
    p.tv_dims = {0, 1};
  } else {
    throw std::invalid_argument("unknown regularizer '" + reg + "' (l2, l1wav or tv)");
  }
  return p;
}

struct ReconInputs {
  std::string kspace, maps, pattern, traj, out, report;
  bool toeplitz = false;
};

struct LoadedRecon {
  ComplexArray y;
  op::OperatorHandle op;
};

LoadedRecon load_recon(const ReconInputs& in) {
  LoadedRecon r;
  r.y = load(in.kspace);
  const SensitivitySet maps = load_maps(in.maps);
  const SamplingPattern p = load_pattern(in.pattern, in.traj, maps.image_extents());
  if (p.is_cartesian()) {
    if (in.toeplitz) throw std::invalid_argument("--toeplitz applies to trajectories only");
    r.op = op::sense_cartesian(maps, p);
  } else {
    r.op = op::sense_nufft(maps, p);
    if (in.toeplitz) r.op = op::toeplitz_normal(r.op);
  }
  if (r.y.extents() != r.op->codomain()) {
    throw std::invalid_argument("k-space extents " + format_extents(r.y.extents()) + " do not match the operator's " +
                                format_extents(r.op->codomain()));
  }
  return r;
}

void add_recon_inputs(CLI::App* sub, ReconInputs& in) {
  sub->add_option("--kspace", in.kspace, "k-space data")->required();
  sub->add_option("--maps", in.maps, "sensitivity maps (X, Y, N)")->required();
  sub->add_option("--pattern", in.pattern, "Cartesian mask");
  sub->add_option("--traj", in.traj, "trajectory (2, n_points)");
  sub->add_flag("--toeplitz", in.toeplitz, "Toeplitz normal operator for trajectories");
  sub->add_option("--out", in.out, "reconstructed image")->required();
  sub->add_option("--report", in.report, "JSON-lines solve report");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parallel imaging and compressed sensing pipeline", "pics"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for every stochastic stage")->capture_default_str();
  // Subcommands also accept --seed so any stage can be called uniformly.
  app.fallthrough();

  std::function<void()> action;

  // convert
  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand("convert", "copy an array between .hdr/.dat and .npy");
  convert->add_option("input", conv_in)->required();
  convert->add_option("output", conv_out)->required();
  convert->callback([&] {
    action = [&] {
      const ComplexArray a = load(conv_in);
      save(conv_out, a);
    };
  });

  // phantom
  std::vector<std::size_t> size{64};
  std::string ellipses, out_path;
  auto* phantom = app.add_subcommand("phantom", "band-limited ellipse phantom image");
  phantom->add_option("--size", size, "grid extents X [Y]")->expected(1, 2)->capture_default_str();
  phantom->add_option("--ellipses", ellipses, "ellipse list (default Shepp-Logan)");
  phantom->add_option("--out", out_path)->required();
  auto load_ellipses = [&] { return ellipses.empty() ? sim::shepp_logan() : sim::read_ellipses(ellipses); };
  phantom->callback([&] {
    action = [&] {
      const auto e = load_ellipses();
      save(out_path, sim::phantom_image(e, grid_from(size)));
    };
  });

  // sens
  std::size_t coils = 8, kernel = 7;
  double decay = 1.5;
  std::string filter_out;
  auto* sens = app.add_subcommand("sens", "random smooth coil sensitivities");
  sens->add_option("--coils", coils)->capture_default_str();
  sens->add_option("--size", size, "grid extents X [Y]")->expected(1, 2);
  sens->add_option("--kernel", kernel, "Fourier coefficients per axis")->capture_default_str();
  sens->add_option("--decay", decay)->capture_default_str();
  sens->add_option("--out", out_path, "rendered maps (X, Y, N)")->required();
  sens->add_option("--filter-out", filter_out, "coil Fourier coefficients for synth");
  sens->callback([&] {
    action = [&] {
      sim::SensitivityOptions o;
      o.kernel_size = kernel;
      o.decay = decay;
      const auto [maps, filter] = sim::gen_sensitivities(coils, grid_from(size), seed, o);
      save(out_path, maps.maps);
      if (!filter_out.empty()) save(filter_out, filter.coeffs);
    };
  });

  // sample
  std::vector<std::size_t> regular;
  std::vector<double> poisson;
  std::vector<std::size_t> radial;
  std::size_t acs = 0;
  auto* sample = app.add_subcommand("sample", "sampling masks and trajectories");
  sample->add_option("--size", size, "grid extents X [Y]")->expected(1, 2);
  auto* o_reg = sample->add_option("--regular", regular, "r1 r2")->expected(2);
  auto* o_poi = sample->add_option("--poisson", poisson, "rmin exponent")->expected(2);
  auto* o_rad = sample->add_option("--radial", radial, "spokes samples")->expected(2);
  o_reg->excludes(o_poi)->excludes(o_rad);
  o_poi->excludes(o_rad);
  sample->add_option("--acs", acs, "fully sampled centre block")->capture_default_str();
  sample->add_option("--out", out_path)->required();
  sample->callback([&] {
    action = [&] {
      const Extents g = grid_from(size);
      if (!regular.empty()) {
        save(out_path, sampling::regular_mask(g, regular[0], regular[1], acs).mask_array());
      } else if (!poisson.empty()) {
        save(out_path, sampling::poisson_disc(g, poisson[0], poisson[1], seed, acs).mask_array());
      } else if (!radial.empty()) {
        save(out_path, sampling::radial_traj(radial[0], radial[1], g).trajectory_array());
      } else {
        throw std::invalid_argument("sample needs one of --regular, --poisson, --radial");
      }
    };
  });

  // synth
  std::string filter_in, mask_in, traj_in;
  auto* synth = app.add_subcommand("synth", "analytic multi-coil k-space");
  synth->add_option("--filter", filter_in, "coil Fourier coefficients from sens --filter-out")->required();
  synth->add_option("--pattern", mask_in, "Cartesian mask");
  synth->add_option("--traj", traj_in, "trajectory (2, n_points)");
  synth->add_option("--size", size, "grid for trajectories X [Y]")->expected(1, 2);
  synth->add_option("--ellipses", ellipses);
  synth->add_option("--out", out_path)->required();
  synth->callback([&] {
    action = [&] {
      sim::CoilFilter f{load(filter_in)};
      if (f.coeffs.rank() != 3) throw std::invalid_argument("coil filter must be (K, K, N)");
      const auto e = load_ellipses();
      const SamplingPattern p = load_pattern(mask_in, traj_in, grid_from(size));
      ComplexArray y = sim::synth_multicoil_kspace(e, f, p);
      y *= cplx(sim::grid_scale(p.grid()), 0.0);
      save(out_path, y);
    };
  });

  // noise
  std::string in_path, cov_in, cov_out;
  double sigma = -1.0;
  auto* noise = app.add_subcommand("noise", "add complex Gaussian noise");
  noise->add_option("--in", in_path)->required();
  noise->add_option("--out", out_path)->required();
  noise->add_option("--sigma", sigma, "white noise standard deviation per coil");
  noise->add_option("--cov", cov_in, "coil covariance (N, N)");
  noise->add_option("--cov-out", cov_out, "write the covariance used");
  noise->add_option("--pattern", mask_in, "only sampled locations receive noise");
  noise->callback([&] {
    action = [&] {
      const ComplexArray y = load(in_path);
      const std::size_t N = y.extents().back();
      Eigen::MatrixXcd cov;
      if (!cov_in.empty()) {
        const ComplexArray c = load(cov_in);
        if (c.extents() != Extents{N, N}) throw std::invalid_argument("covariance must be (N, N)");
        cov = Eigen::Map<const Eigen::MatrixXcd>(c.data().data(), N, N);
      } else if (sigma >= 0.0) {
        cov = Eigen::MatrixXcd::Identity(N, N) * (sigma * sigma);
      } else {
        throw std::invalid_argument("noise needs --sigma or --cov");
      }
      std::optional<std::vector<std::uint8_t>> mask;
      if (!mask_in.empty()) mask = require_mask(SamplingPattern::from_mask_array(load(mask_in)), "noise --pattern");
      const ComplexArray noisy = sim::add_noise(y, {cov, seed}, mask ? &*mask : nullptr);
      save(out_path, noisy);
      if (!cov_out.empty()) save(cov_out, ComplexArray({N, N}, std::vector<cplx>(cov.data(), cov.data() + N * N)));
    };
  });

  // whiten
  auto* whiten = app.add_subcommand("whiten", "decorrelate coils with the inverse Cholesky factor");
  whiten->add_option("--in", in_path)->required();
  whiten->add_option("--cov", cov_in, "coil covariance (N, N)")->required();
  whiten->add_option("--out", out_path)->required();
  whiten->callback([&] {
    action = [&] {
      const ComplexArray y = load(in_path);
      const ComplexArray c = load(cov_in);
      const std::size_t N = y.extents().back();
      if (c.extents() != Extents{N, N}) throw std::invalid_argument("covariance must be (N, N)");
      save(out_path, sim::whiten(y, Eigen::Map<const Eigen::MatrixXcd>(c.data().data(), N, N)).data);
    };
  });

  // recon-cg
  ReconInputs cg_in;
  double alpha = 0.0, tol = 1e-6;
  std::size_t max_iter = 100;
  std::string x0_path;
  auto* rcg = app.add_subcommand("recon-cg", "Tikhonov-regularized SENSE by conjugate gradients");
  add_recon_inputs(rcg, cg_in);
  rcg->add_option("--alpha", alpha)->capture_default_str();
  rcg->add_option("--tol", tol)->capture_default_str();
  rcg->add_option("--max-iter", max_iter)->capture_default_str();
  rcg->add_option("--x0", x0_path, "reference image for the penalty");
  rcg->callback([&] {
    action = [&] {
      const LoadedRecon r = load_recon(cg_in);
      solve::QuadraticPenalty pen{alpha, {}, {}};
      if (!x0_path.empty()) pen.reference = load(x0_path);
      Report report(cg_in.report);
      const auto s = solve::cg_normal(r.op, r.y, pen, tol, max_iter, report.progress());
      save(cg_in.out, s.x);
      report.finish(s.report);
    };
  });

  // recon-fista / recon-admm
  ReconInputs fi_in, ad_in;
  std::string reg = "l1wav";
  double lambda = 0.01, step = 0.0, rho = 1.0, stop_tol = 0.0;
  std::size_t levels = 3;
  auto* rfi = app.add_subcommand("recon-fista", "sparsity-regularized SENSE by FISTA");
  add_recon_inputs(rfi, fi_in);
  auto* rad = app.add_subcommand("recon-admm", "sparsity-regularized SENSE by ADMM");
  add_recon_inputs(rad, ad_in);
  for (auto* sub : {rfi, rad}) {
    sub->add_option("--reg", reg, "l2, l1wav or tv")->capture_default_str();
    sub->add_option("--lambda", lambda)->capture_default_str();
    sub->add_option("--tol", stop_tol, "stop on relative change, 0 runs all iterations")->capture_default_str();
    sub->add_option("--max-iter", max_iter)->capture_default_str();
    sub->add_option("--levels", levels, "wavelet levels")->capture_default_str();
  }
  rfi->add_option("--step", step, "gradient step, 1/L if not positive")->capture_default_str();
  rad->add_option("--rho", rho)->capture_default_str();
  rfi->callback([&] {
    action = [&] {
      const LoadedRecon r = load_recon(fi_in);
      const auto pen = make_penalty(reg, lambda, levels);
      Report report(fi_in.report);
      const auto s = solve::fista(r.op, r.y, pen, step, max_iter, stop_tol, report.progress());
      save(fi_in.out, s.x);
      report.finish(s.report);
    };
  });
  rad->callback([&] {
    action = [&] {
      const LoadedRecon r = load_recon(ad_in);
      const auto pen = make_penalty(reg, lambda, levels);
      Report report(ad_in.report);
      const auto s = solve::admm(r.op, r.y, {pen}, rho, max_iter, stop_tol, report.progress());
      save(ad_in.out, s.x);
      report.finish(s.report);
    };
  });

  // ecalib
  std::string kspace_in, maps_out, eig_out;
  std::size_t patch = 6, n_maps = 1;
  std::size_t cal_block = 24;
  double thresh = 1e-3, crop = 0.0;
  auto* ecalib = app.add_subcommand("ecalib", "ESPIRiT sensitivity calibration");
  ecalib->add_option("--kspace", kspace_in, "k-space (X, Y, N) with a fully sampled centre")->required();
  ecalib->add_option("--acs", cal_block, "calibration block size")->capture_default_str();
  ecalib->add_option("--patch", patch)->capture_default_str();
  ecalib->add_option("--thresh", thresh, "relative singular value cutoff")->capture_default_str();
  ecalib->add_option("--maps", n_maps, "number of eigenvector maps")->capture_default_str();
  ecalib->add_option("--crop", crop, "zero maps whose eigenvalue is below this")->capture_default_str();
  ecalib->add_option("--out-maps", maps_out, "eigenvector maps (X, Y, N) or (X, Y, N, M)")->required();
  ecalib->add_option("--out-eig", eig_out, "eigenvalue maps (X, Y) or (X, Y, M)");
  ecalib->callback([&] {
    action = [&] {
      const ComplexArray k = load(kspace_in);
      if (k.rank() != 3) throw std::invalid_argument("ecalib needs (X, Y, N) k-space");
      const auto cal = calib::split_subspaces(calib::build_calibration_matrix(calib::extract_acs(k, cal_block), patch, patch),
                                              thresh);
      const Extents g{k.extent(0), k.extent(1)};
      const auto res = calib::espirit_maps(cal, g, n_maps, crop);
      if (n_maps == 1) {
        save(maps_out, res.eigenvectors.reshaped({g[0], g[1], k.extent(2)}));
        if (!eig_out.empty()) save(eig_out, res.eigenvalues.reshaped(g));
      } else {
        save(maps_out, res.eigenvectors);
        if (!eig_out.empty()) save(eig_out, res.eigenvalues);
      }
    };
  });

  // nlinv
  std::string image_out, report_path;
  std::size_t newton = 10;
  double alpha0 = 1.0, q = 0.5;
  auto* nlinv = app.add_subcommand("nlinv", "joint image and sensitivity estimation by Gauss-Newton");
  nlinv->add_option("--kspace", kspace_in)->required();
  nlinv->add_option("--pattern", mask_in, "Cartesian mask")->required();
  nlinv->add_option("--newton", newton)->capture_default_str();
  nlinv->add_option("--alpha0", alpha0)->capture_default_str();
  nlinv->add_option("--q", q, "regularization reduction per step")->capture_default_str();
  nlinv->add_option("--out-image", image_out)->required();
  nlinv->add_option("--out-maps", maps_out)->required();
  nlinv->add_option("--report", report_path);
  nlinv->callback([&] {
    action = [&] {
      const ComplexArray y = load(kspace_in);
      const auto p = SamplingPattern::from_mask_array(load(mask_in));
      calib::NlinvOptions o;
      o.newton_steps = newton;
      o.alpha0 = alpha0;
      o.q_reduction = q;
      const auto r = calib::nlinv(y, p, o);
      save(image_out, r.image);
      save(maps_out, r.sensitivities.maps);
      Report report(report_path);
      for (std::size_t i = 0; i < r.report.objective_trace.size(); ++i)
        report.line({{"iteration", i}, {"residual", r.report.objective_trace[i]}});
      report.finish(r.report);
    };
  });

  // power
  std::size_t coil = 0, max_unknowns = 4000;
  double ridge = 0.0;
  std::string maps_in;
  auto* power = app.add_subcommand("power", "RKHS power function over the grid");
  power->add_option("--pattern", mask_in, "Cartesian mask")->required();
  power->add_option("--maps", maps_in)->required();
  power->add_option("--coil", coil)->capture_default_str();
  power->add_option("--ridge", ridge)->capture_default_str();
  power->add_option("--max-unknowns", max_unknowns, "subsample the pattern above this Gram size")
      ->capture_default_str();
  power->add_option("--out", out_path)->required();
  power->callback([&] {
    action = [&] {
      const SensitivitySet maps = load_maps(maps_in);
      SamplingPattern p = SamplingPattern::from_mask_array(load(mask_in));
      require_mask(p, "power");
      const std::size_t N = maps.n_coils(), limit = std::max<std::size_t>(max_unknowns / N, 1);
      if (p.sample_count() > limit) {
        std::vector<std::size_t> on;
        for (std::size_t i = 0; i < p.mask().size(); ++i)
          if (p.mask()[i]) on.push_back(i);
        std::mt19937_64 rng(seed);
        std::shuffle(on.begin(), on.end(), rng);
        std::vector<std::uint8_t> mask(p.mask().size(), 0);
        for (std::size_t i = 0; i < limit; ++i) mask[on[i]] = 1;
        err << "pics: power: keeping " << limit << " of " << p.sample_count() << " samples\n";
        p = SamplingPattern::cartesian(p.grid(), mask);
      }
      const rkhs::KernelContext ctx = rkhs::build_kernel(maps);
      save(out_path, rkhs::power_map(ctx, p, p.grid(), coil, ridge));
    };
  });

  // png
  std::string mode = "magnitude", png_out;
  std::size_t slice = 0;
  auto* png = app.add_subcommand("png", "8-bit RGB magnitude or phase image");
  png->add_option("--in", in_path)->required();
  png->add_option("--out", png_out)->required();
  png->add_option("--mode", mode, "magnitude or phase")->capture_default_str();
  png->add_option("--slice", slice, "index along the last dimension of a 3D array")->capture_default_str();
  png->callback([&] {
    action = [&] {
      const png::Mode m = png::parse_mode(mode);
      ComplexArray a = load(in_path);
      if (a.rank() == 3) {
        if (slice >= a.extent(2)) throw std::invalid_argument("--slice out of range");
        a = a.slice_last(slice);
      }
      png::export_png(a, m, png_out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    action();
  } catch (const NumericalError& e) {
    err << "pics: numerical failure: " << e.what() << "\n";
    if (const auto* d = dynamic_cast<const DivergenceError*>(&e)) err << d->state_dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "pics: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pics::cli
