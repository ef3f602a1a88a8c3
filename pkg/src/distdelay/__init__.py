"""Distortion/delay tradeoff for a buffered Gaussian source over block fading."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .channel import ChannelSpec, EigenSample, make_stream, mutual_information, sample_eigenvalues
from .distortion import (
    DistortionCurve,
    DistortionPoint,
    d_delay_mimo,
    d_delay_simo,
    d_delay_siso,
    d_infinite,
    d_upper_asymptotic,
    d_zero,
    ergodic_capacity,
    ergodic_capacity_m1,
)
from .effcap import (
    QosSpec,
    balance_exponents,
    effective_capacity_mc,
    effective_capacity_quadrature,
    end_to_end_bound,
)
from .exponent import ExponentProfile, exponent_buffered, exponent_no_buffer, fit_exponent
from .queuesim import SimConfig, SimResult, simulate
from .specfun import ConvergenceError, DivergenceError, DomainError, PoleError, QuadratureSpec
