"""Parallel imaging reconstruction: simulation, calibration, solvers and error bounds."""

from ._core import (
    NumericalError,
    ecalib,
    fftc,
    gen_sensitivities,
    grid_scale,
    ifftc,
    nlinv,
    phantom_image,
    phantom_kspace,
    poisson_disc,
    power_map,
    radial_traj,
    regular_mask,
    sense_cg,
    sense_fista,
    synth_kspace,
)

__all__ = [
    "NumericalError",
    "ecalib",
    "fftc",
    "gen_sensitivities",
    "grid_scale",
    "ifftc",
    "nlinv",
    "phantom_image",
    "phantom_kspace",
    "poisson_disc",
    "power_map",
    "radial_traj",
    "regular_mask",
    "sense_cg",
    "sense_fista",
    "synth_kspace",
]
