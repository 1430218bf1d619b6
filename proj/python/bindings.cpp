#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <stdexcept>
#include <string>

#include "pics/calib.hpp"
#include "pics/errors.hpp"
#include "pics/fft.hpp"
#include "pics/nlinv.hpp"
#include "pics/operators.hpp"
#include "pics/rkhs.hpp"
#include "pics/sampling.hpp"
#include "pics/sim.hpp"
#include "pics/solvers.hpp"
#include "pics/wavelet.hpp"

namespace py = pybind11;
using namespace pics;

namespace {

using CArray = py::array_t<cplx, py::array::f_style | py::array::forcecast>;
using MaskArray = py::array_t<std::uint8_t, py::array::f_style | py::array::forcecast>;

// Column-major numpy layout matches the first-index-fastest storage.
ComplexArray to_array(const CArray& a) {
  Extents ext(a.shape(), a.shape() + a.ndim());
  return ComplexArray(ext, std::vector<cplx>(a.data(), a.data() + a.size()));
}

py::array_t<cplx> to_numpy(const ComplexArray& x) {
  std::vector<py::ssize_t> shape(x.extents().begin(), x.extents().end());
  py::array_t<cplx, py::array::f_style> out(shape);
  std::copy(x.data().begin(), x.data().end(), out.mutable_data());
  return out;
}

Extents to_grid(const std::vector<std::size_t>& shape) {
  if (shape.size() != 2) throw std::invalid_argument("shape must have two entries");
  return {shape[0], shape[1]};
}

SamplingPattern mask_pattern(const MaskArray& mask, std::size_t acs = 0) {
  if (mask.ndim() != 2) throw std::invalid_argument("mask must be two-dimensional");
  Extents grid{static_cast<std::size_t>(mask.shape(0)), static_cast<std::size_t>(mask.shape(1))};
  return SamplingPattern::cartesian(grid, std::vector<std::uint8_t>(mask.data(), mask.data() + mask.size()), acs);
}

py::array_t<std::uint8_t> mask_numpy(const SamplingPattern& p) {
  py::array_t<std::uint8_t, py::array::f_style> out({p.grid()[0], p.grid()[1]});
  std::copy(p.mask().begin(), p.mask().end(), out.mutable_data());
  return out;
}

SensitivitySet map_set(const CArray& maps) {
  SensitivitySet s{to_array(maps), 1.0, std::nullopt};
  s.validate();
  return s;
}

sim::CoilFilter coil_filter(const CArray& coeffs) { return sim::CoilFilter{to_array(coeffs)}; }

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

py::dict report_dict(const solve::SolveReport& r) {
  py::dict d;
  d["iterations"] = r.iterations;
  d["objective"] = r.objective_trace;
  d["residual"] = r.residual_norm;
  d["converged"] = r.converged;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Parallel imaging reconstruction core";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("fftc", [](const CArray& x, std::vector<std::size_t> dims) { return to_numpy(fftc(to_array(x), dims)); },
        py::arg("x"), py::arg("dims"), "Centered unitary FFT along the given axes.");
  m.def("ifftc", [](const CArray& x, std::vector<std::size_t> dims) { return to_numpy(ifftc(to_array(x), dims)); },
        py::arg("x"), py::arg("dims"));

  m.def("grid_scale", [](const std::vector<std::size_t>& shape) { return sim::grid_scale(to_grid(shape)); },
        py::arg("shape"));
  m.def("phantom_image",
        [](const std::vector<std::size_t>& shape) {
          return to_numpy(sim::phantom_image(sim::shepp_logan(), to_grid(shape)));
        },
        py::arg("shape"), "Shepp-Logan phantom rendered on the grid.");
  m.def("phantom_kspace",
        [](const std::vector<std::size_t>& shape) {
          return to_numpy(sim::phantom_grid_kspace(sim::shepp_logan(), to_grid(shape)));
        },
        py::arg("shape"), "Analytic Shepp-Logan k-space on the grid (physical scale).");

  m.def("gen_sensitivities",
        [](std::size_t coils, const std::vector<std::size_t>& shape, std::uint64_t seed, std::size_t kernel_size,
           double decay) {
          sim::SensitivityOptions opt;
          opt.kernel_size = kernel_size;
          opt.decay = decay;
          auto [maps, filter] = sim::gen_sensitivities(coils, to_grid(shape), seed, opt);
          return py::make_tuple(to_numpy(maps.maps), to_numpy(filter.coeffs));
        },
        py::arg("coils"), py::arg("shape"), py::arg("seed") = 0, py::arg("kernel_size") = 7, py::arg("decay") = 1.5,
        "Random smooth coil maps; returns (maps, filter coefficients).");

  m.def("regular_mask",
        [](const std::vector<std::size_t>& shape, std::size_t r1, std::size_t r2, std::size_t acs) {
          return mask_numpy(sampling::regular_mask(to_grid(shape), r1, r2, acs));
        },
        py::arg("shape"), py::arg("r1"), py::arg("r2"), py::arg("acs") = 0);
  m.def("poisson_disc",
        [](const std::vector<std::size_t>& shape, double r_min, double exponent, std::uint64_t seed, std::size_t acs) {
          return mask_numpy(sampling::poisson_disc(to_grid(shape), r_min, exponent, seed, acs));
        },
        py::arg("shape"), py::arg("r_min"), py::arg("exponent"), py::arg("seed") = 0, py::arg("acs") = 0);
  m.def("radial_traj",
        [](std::size_t spokes, std::size_t samples, const std::vector<std::size_t>& shape) {
          const auto pts = sampling::radial_traj(spokes, samples, to_grid(shape)).points();
          py::array_t<double> out({pts.size(), std::size_t{2}});
          auto v = out.mutable_unchecked<2>();
          for (std::size_t i = 0; i < pts.size(); ++i) {
            v(i, 0) = pts[i].kx;
            v(i, 1) = pts[i].ky;
          }
          return out;
        },
        py::arg("spokes"), py::arg("samples"), py::arg("shape"), "Radial trajectory as (n, 2) grid-unit points.");

  m.def("synth_kspace",
        [](const CArray& filter, const MaskArray& mask) {
          const SamplingPattern p = mask_pattern(mask);
          ComplexArray y = sim::synth_multicoil_kspace(sim::shepp_logan(), coil_filter(filter), p);
          y *= sim::grid_scale(p.grid());
          return to_numpy(y);
        },
        py::arg("filter"), py::arg("mask"), "Analytic multi-coil phantom k-space at unitary FFT scale, zero off-mask.");

  m.def("ecalib",
        [](const CArray& kspace, std::size_t acs, std::size_t patch, double thresh, std::size_t n_maps, double crop) {
          const ComplexArray k = to_array(kspace);
          auto cal = calib::split_subspaces(
              calib::build_calibration_matrix(calib::extract_acs(k, acs), patch, patch), thresh);
          const auto res = calib::espirit_maps(cal, {k.extent(0), k.extent(1)}, n_maps, crop);
          return py::make_tuple(to_numpy(res.eigenvectors), to_numpy(res.eigenvalues));
        },
        py::arg("kspace"), py::arg("acs") = 24, py::arg("patch") = 6, py::arg("thresh") = 1e-3,
        py::arg("n_maps") = 1, py::arg("crop") = 0.0,
        "ESPIRiT maps (X, Y, N, M) and eigenvalues (X, Y, M) from Cartesian k-space.");

  m.def("sense_cg",
        [](const CArray& kspace, const CArray& maps, const MaskArray& mask, double alpha, double tol,
           std::size_t max_iter) {
          const auto op = op::sense_cartesian(map_set(maps), mask_pattern(mask));
          solve::QuadraticPenalty pen;
          pen.alpha = alpha;
          const auto sol = solve::cg_normal(op, to_array(kspace), pen, tol, max_iter);
          return py::make_tuple(to_numpy(sol.x), report_dict(sol.report));
        },
        py::arg("kspace"), py::arg("maps"), py::arg("mask"), py::arg("alpha") = 0.0, py::arg("tol") = 1e-6,
        py::arg("max_iter") = 100, "Tikhonov-regularized SENSE by conjugate gradients; returns (image, report).");

  m.def("sense_fista",
        [](const CArray& kspace, const CArray& maps, const MaskArray& mask, const std::string& reg, double lambda,
           std::size_t max_iter, std::size_t levels) {
          const auto op = op::sense_cartesian(map_set(maps), mask_pattern(mask));
          const auto sol = solve::fista(op, to_array(kspace), make_penalty(reg, lambda, levels), 0.0, max_iter);
          return py::make_tuple(to_numpy(sol.x), report_dict(sol.report));
        },
        py::arg("kspace"), py::arg("maps"), py::arg("mask"), py::arg("reg") = "l1wav", py::arg("lam") = 1e-3,
        py::arg("max_iter") = 100, py::arg("levels") = 3);

  m.def("nlinv",
        [](const CArray& kspace, const MaskArray& mask, std::size_t newton_steps, double alpha0, double q) {
          calib::NlinvOptions opt;
          opt.newton_steps = newton_steps;
          opt.alpha0 = alpha0;
          opt.q_reduction = q;
          const auto res = calib::nlinv(to_array(kspace), mask_pattern(mask), opt);
          return py::make_tuple(to_numpy(res.image), to_numpy(res.sensitivities.maps), report_dict(res.report));
        },
        py::arg("kspace"), py::arg("mask"), py::arg("newton_steps") = 10, py::arg("alpha0") = 1.0,
        py::arg("q") = 0.5, "Joint image and coil estimation; returns (image, maps, report).");

  m.def("power_map",
        [](const CArray& maps, const MaskArray& mask, std::size_t coil, double ridge) {
          const auto ctx = rkhs::build_kernel(map_set(maps));
          const SamplingPattern p = mask_pattern(mask);
          return to_numpy(rkhs::power_map(ctx, p, p.grid(), coil, ridge));
        },
        py::arg("maps"), py::arg("mask"), py::arg("coil") = 0, py::arg("ridge") = 0.0,
        "Worst-case interpolation error bound at every grid point for one coil.");
}
