"""Desk-scale laboratory for the discretized stochastic NLS channel."""

from .propagator import (
    ChannelParams,
    Coupling,
    NoiseStream,
    Scheme,
    dispersion_step,
    hamiltonian,
    interaction_rhs,
    jacobian_det,
    nonlinear_step,
    propagate_deterministic,
    propagate_stochastic,
)
from .spectrum import Ensemble, ModeGrid, Spectrum, TimeSignal, power, sample_gaussian_input, transform

__version__ = "0.1.0"
