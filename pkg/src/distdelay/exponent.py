"""High-SNR distortion exponents, analytic and fitted."""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .channel import ChannelSpec


class DegenerateFitError(ValueError):
    """The fitted curve is flat (or not positive), so no slope can be read off."""


def _check_eta(eta):
    if eta < 0 or not math.isfinite(eta):
        raise ValueError(f"eta must be finite and >= 0, got {eta}")


def exponent_no_buffer(channel: ChannelSpec, eta: float) -> float:
    """``sum_i min(eta, 2i - 1 + d)`` over the ``m_star`` eigenmodes."""
    _check_eta(eta)
    i = np.arange(1, channel.m_star + 1)
    return float(np.minimum(eta, 2 * i - 1 + channel.d).sum())


def exponent_buffered(channel: ChannelSpec, eta: float, tau_n: float) -> float:
    """``sum_i min(eta, tau_n (2i - 1 + d))``; a delay of ``tau_n`` frames
    stretches each eigenmode's diversity cap by ``tau_n``."""
    _check_eta(eta)
    if not tau_n > 0:
        raise ValueError(f"tau_n must be positive, got {tau_n}")
    i = np.arange(1, channel.m_star + 1)
    return float(np.minimum(eta, tau_n * (2 * i - 1 + channel.d)).sum())


@dataclass(frozen=True)
class FitDiagnostics:
    slope: float
    intercept: float
    r_squared: float
    max_residual: float
    snr_db: np.ndarray
    log10_distortion: np.ndarray


def fit_exponent(curve_fn: Callable[[float], float], snr_db_range, points=16, drop_low=0,
                 diagnostics=False):
    """Least-squares slope of ``-log10 D`` against ``log10 rho``.

    ``curve_fn`` takes linear SNR. The grid is ``points`` equally spaced dB
    values over ``snr_db_range`` (at least 20 dB wide); the ``drop_low``
    lowest points are discarded before fitting.
    """
    lo, hi = map(float, snr_db_range)
    if hi - lo < 20.0:
        raise ValueError("fit range must span at least 20 dB")
    if int(points) != points or points < 4:
        raise ValueError("need at least 4 points")
    if not 0 <= drop_low <= points - 4:
        raise ValueError("drop_low leaves fewer than 4 points")
    snr_db = np.linspace(lo, hi, int(points))[int(drop_low):]
    vals = np.array([curve_fn(10.0 ** (s / 10.0)) for s in snr_db], dtype=float)
    if not np.all(np.isfinite(vals) & (vals > 0)):
        raise DegenerateFitError("curve must be positive and finite over the fit range")
    x = snr_db / 10.0
    y = -np.log10(vals)
    if np.ptp(y) <= 1e-12 * max(1.0, np.max(np.abs(y))):
        raise DegenerateFitError("curve is constant over the fit range")
    slope, intercept = np.polyfit(x, y, 1)
    if not diagnostics:
        return float(slope)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot
    return float(slope), FitDiagnostics(float(slope), float(intercept), float(r2),
                                        float(np.max(np.abs(resid))), snr_db, -y)


@dataclass(frozen=True)
class ExponentProfile:
    eta_grid: np.ndarray
    analytic: np.ndarray
    mt: int
    mr: int
    tau_n: object  # float, or "no-buffer"
    fitted: Optional[np.ndarray] = None

    def __post_init__(self):
        eta = np.asarray(self.eta_grid, dtype=float)
        alpha = np.asarray(self.analytic, dtype=float)
        if eta.ndim != 1 or eta.shape != alpha.shape:
            raise ValueError("eta_grid and analytic must be 1-D and the same length")
        if np.any(np.diff(eta) <= 0):
            raise ValueError("eta_grid must be strictly ascending")
        if np.any(alpha < 0) or np.any(np.diff(alpha) < -1e-12):
            raise ValueError("analytic exponents must be nonnegative and nondecreasing")
        object.__setattr__(self, "eta_grid", eta)
        object.__setattr__(self, "analytic", alpha)
        if self.fitted is not None:
            fitted = np.asarray(self.fitted, dtype=float)
            if fitted.shape != eta.shape:
                raise ValueError("fitted must match eta_grid")
            object.__setattr__(self, "fitted", fitted)

    @property
    def ceiling(self):
        m_star, m_sup = min(self.mt, self.mr), max(self.mt, self.mr)
        if self.tau_n == "no-buffer":
            return float(self.mt * self.mr)
        d = m_sup - m_star
        return float(self.tau_n * sum(2 * i - 1 + d for i in range(1, m_star + 1)))

    def rows(self):
        fitted = self.fitted if self.fitted is not None else [None] * len(self.eta_grid)
        return [(float(e), float(a), None if f is None else float(f))
                for e, a, f in zip(self.eta_grid, self.analytic, fitted)]


def exponent_profile(mt, mr, eta_grid: Sequence[float], tau_n="no-buffer", fit_fn=None,
                     snr_db_range=(30.0, 60.0), points=16):
    """Analytic exponent over ``eta_grid``; if ``fit_fn(channel, eta)`` is given
    (returning a curve of linear SNR) the numerical slope is added."""
    base = ChannelSpec(mt, mr, 1.0)
    if tau_n == "no-buffer":
        analytic = [exponent_no_buffer(base, e) for e in eta_grid]
    else:
        analytic = [exponent_buffered(base, e, float(tau_n)) for e in eta_grid]
    fitted = None
    if fit_fn is not None:
        fitted = [fit_exponent(fit_fn(base, e), snr_db_range, points) for e in eta_grid]
    return ExponentProfile(np.asarray(eta_grid, float), np.asarray(analytic), mt, mr, tau_n,
                           fitted)
