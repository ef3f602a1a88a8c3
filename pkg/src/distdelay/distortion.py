"""Closed-form and quadrature distortion expressions.

Conventions: ``rho`` is the linear SNR, ``eta`` channel uses per source
sample, ``tau_n`` the buffer delay in frames and ``lam = 1 / tau_n``.
A delay ``tau_n`` means the QoS exponent ``theta = 1 / (K tau_n)``, so the
per-frame exponent ``theta K eta`` equals ``eta / tau_n`` and the frame
length ``K`` drops out of every distortion value.

Expectations over the ordered Wishart eigenvalues are computed as Gram
determinants in the orthonormal generalized-Laguerre basis (Andreief
identity). This equals ``det(G) / prod Gamma(i) Gamma(d+i)`` for the Hankel
moment matrix ``G`` but stays well conditioned at high SNR and many antennas.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import ChannelSpec, wishart_log_normalizer
from .specfun import (
    EULER_GAMMA,
    ConvergenceError,
    DomainError,
    PoleError,
    default_quadrature,
    exp_integral_e1,
    exp_integral_e1_scaled,
    gamma_complete,
    gamma_upper_incomplete,
    hyp1f1,
    integrate_semiinfinite,
)

METHODS = (
    "d0", "d_inf", "siso_closed", "simo_closed", "mimo_hankel",
    "upper_asymptotic", "quadrature_oracle", "monte_carlo",
)
AXES = ("snr_sweep", "delay_sweep", "eta_sweep")

XI = EULER_GAMMA
PHI = (6.0 * XI**2 - math.pi**2) / 12.0


@dataclass(frozen=True)
class DistortionPoint:
    snr: float
    normalized_delay: float
    eta: float
    value: float
    method: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not (0.0 < self.value <= 1.0 + 1e-12):
            raise ValueError(f"distortion must lie in (0, 1], got {self.value!r}")

    @property
    def snr_db(self):
        return 10.0 * math.log10(self.snr)

    @property
    def value_db(self):
        return 10.0 * math.log10(self.value)


@dataclass(frozen=True)
class DistortionCurve:
    points: tuple
    axis: str

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        key = {"snr_sweep": "snr", "delay_sweep": "normalized_delay", "eta_sweep": "eta"}[self.axis]
        fixed = [k for k in ("snr", "normalized_delay", "eta") if k != key]
        xs = [getattr(p, key) for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"points must be strictly increasing in {key}")
        for k in fixed:
            if len({getattr(p, k) for p in pts}) > 1:
                raise ValueError(f"{k} must be constant along a {self.axis}")

    def values(self):
        return np.array([p.value for p in self.points])


# ---------------------------------------------------------------------------
# Wishart expectations


def _laguerre_orthonormal(m, d, x):
    """Rows ``p_0..p_{m-1}`` orthonormal w.r.t. ``x^d e^{-x}`` on ``[0, inf)``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((m,) + x.shape)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for n in range(m):
        # norm of L_n^{(d)} is Gamma(n + d + 1) / n!
        out[n] = cur * math.exp(0.5 * (special.gammaln(n + 1) - special.gammaln(n + d + 1)))
        nxt = ((2 * n + 1 + d - x) * cur - (n + d) * prev) / (n + 1)
        prev, cur = cur, nxt
    return out


def _gram(channel, s, deficit, spec):
    m, d, c = channel.m_star, channel.d, channel.gain

    def f(x):
        p = _laguerre_orthonormal(m, d, x)
        logw = -s * np.log1p(c * x)
        w = -np.expm1(logw) if deficit else np.exp(logw)
        if d:
            w = w * x**d
        return (p[:, None, :] * p[None, :, :] * w).reshape(m * m, -1)

    g = np.asarray(integrate_semiinfinite(f, spec)).reshape(m, m)
    return 0.5 * (g + g.T)


def log_wishart_mgf(channel, s, spec=None):
    """``ln E[prod_i (1 + (snr/mt) lambda_i)^(-s)]`` over the Wishart eigenvalues."""
    channel.require_analytic()
    if s < 0:
        raise DomainError("exponent s must be nonnegative")
    if s == 0:
        return 0.0
    spec = default_quadrature() if spec is None else spec
    m = channel.m_star
    delta = _gram(channel, s, True, spec)
    if np.max(np.abs(delta)) < 0.5:
        sign, logdet = np.linalg.slogdet(np.eye(m) - delta)
    else:
        sign, logdet = np.linalg.slogdet(_gram(channel, s, False, spec))
    if sign <= 0:
        raise ConvergenceError("moment determinant lost positivity; tighten the quadrature")
    return float(logdet)


def ergodic_capacity(channel, spec=None):
    """``E[ln det(I + (snr/mt) H H^H)]`` in nats per channel use.

    Integrates ``ln(1 + c x)`` against the one-point eigenvalue density
    ``sum_i p_i(x)^2 x^d e^{-x}``.
    """
    channel.require_analytic()
    m, d, c = channel.m_star, channel.d, channel.gain

    def f(x):
        p = _laguerre_orthonormal(m, d, x)
        w = np.log1p(c * x)
        if d:
            w = w * x**d
        return (p * p).sum(axis=0) * w

    return float(integrate_semiinfinite(f, spec))


def hankel_normalizer(channel):
    """``prod_{i=1}^{m_star} Gamma(i) Gamma(d + i)``, the determinant of G at zero exponent."""
    return math.exp(wishart_log_normalizer(channel))


def hankel_matrix(channel, exponent, spec=None):
    """Moment matrix ``g_ij = int (1 + (snr/mt) l)^(-exponent) l^(i+j+d) e^-l dl``."""
    channel.require_analytic()
    m, d, c = channel.m_star, channel.d, channel.gain
    powers = (np.arange(m)[:, None] + np.arange(m)[None, :] + d).reshape(-1)

    def f(x):
        w = np.exp(-exponent * np.log1p(c * x))
        return x[None, :] ** powers[:, None] * w

    return np.asarray(integrate_semiinfinite(f, spec)).reshape(m, m)


# ---------------------------------------------------------------------------
# No-delay / infinite-delay


def d_zero(channel, eta, spec=None):
    """No-buffer distortion ``E[det(I + (snr/mt) H H^H)^(-eta)]``."""
    if eta <= 0:
        raise DomainError("eta must be positive")
    return math.exp(log_wishart_mgf(channel, eta, spec))


def d_infinite(channel, eta, spec=None):
    """Infinite-delay distortion ``exp(-eta * C_erg)``."""
    if eta <= 0:
        raise DomainError("eta must be positive")
    return math.exp(-eta * ergodic_capacity(channel, spec))


def ergodic_capacity_m1(rho):
    """SISO ergodic capacity ``e^(1/rho) E1(1/rho)`` in nats per channel use."""
    if rho <= 0:
        raise DomainError("rho must be positive")
    return exp_integral_e1_scaled(1.0 / rho)


# ---------------------------------------------------------------------------
# Finite delay


def _siso_log_moment(rho, nu, spec):
    # ln int (1 + rho x)^(-nu) e^-x dx, via whichever of I or 1 - I is small
    if nu == 0:
        return 0.0
    spec = default_quadrature() if spec is None else spec
    deficit = integrate_semiinfinite(lambda x: -np.expm1(-nu * np.log1p(rho * x)), spec)
    if deficit < 0.5:
        return math.log1p(-deficit)
    moment = integrate_semiinfinite(lambda x: np.exp(-nu * np.log1p(rho * x)), spec)
    return math.log(moment)


def d_delay_siso(rho, eta, tau_n, method="quadrature", spec=None):
    """SISO distortion bound at normalized delay ``tau_n``.

    ``[int_0^inf (1 + rho x)^(-lam eta) e^-x dx]^(1/lam)``. With
    ``method="closed_form"`` the inner integral is
    ``rho^(-nu) e^(1/rho) Gamma(1 - nu, 1/rho)``, ``nu = lam eta``, which
    requires ``nu < 1``.
    """
    if rho <= 0 or eta <= 0 or tau_n <= 0:
        raise DomainError("rho, eta and tau_n must be positive")
    nu = eta / tau_n
    if method == "quadrature":
        return math.exp(tau_n * _siso_log_moment(rho, nu, spec))
    if method == "closed_form":
        if nu >= 1:
            raise DomainError("closed form needs lam * eta < 1; use the quadrature path")
        inner = -nu * math.log(rho) + 1.0 / rho + math.log(gamma_upper_incomplete(1.0 - nu, 1.0 / rho))
        return math.exp(tau_n * inner)
    raise ValueError(f"unknown method {method!r}")


def d_delay_simo(m, rho, tau_n, power_divided=False):
    """Closed form for ``m``-branch SIMO (or MISO with ``power_divided``), ``eta = 1``.

    Two 1F1 terms raised to ``tau_n``; singular whenever ``lam = 1/tau_n``
    is an integer, in which case the quadrature route must be used.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    if rho <= 0 or tau_n <= 0:
        raise DomainError("rho and tau_n must be positive")
    lam = 1.0 / tau_n
    if abs(lam - round(lam)) < 1e-12:
        raise PoleError(f"lam = {lam} is an integer: gamma pole in the closed form")
    r = rho / m if power_divided else rho
    z = 1.0 / r
    first = (gamma_complete(lam - m) / gamma_complete(lam) * r ** (-m)
             * hyp1f1(m, m - lam + 1.0, z))
    second = (gamma_complete(m - lam) / gamma_complete(m) * r ** (-lam)
              * hyp1f1(lam, lam - m + 1.0, z))
    inner = first + second
    if not inner > 0:
        raise ConvergenceError("cancellation in the SIMO closed form; use the quadrature route")
    return math.exp(tau_n * math.log(inner))


def d_delay_mimo(channel, eta, tau_n, k=200, spec=None):
    """MIMO bound ``[det G / B]^(1/(K theta))`` with ``theta = 1/(K tau_n)``."""
    if eta <= 0 or tau_n <= 0:
        raise DomainError("eta and tau_n must be positive")
    theta = 1.0 / (k * tau_n)
    log_mgf = log_wishart_mgf(channel, theta * k * eta, spec)
    return math.exp(log_mgf / (theta * k))


# ---------------------------------------------------------------------------
# Large-delay asymptotics (SISO, eta = 1)


def d_upper_asymptotic(rho, tau_n):
    """Asymptotic upper bound on the SISO distortion for ``lam = 1/tau_n`` in (0, 1)."""
    lam = 1.0 / tau_n
    if not 0.0 < lam < 1.0:
        raise DomainError("upper bound needs 0 < lam < 1")
    ex = math.exp(1.0 / rho)
    inner = (ex - 1.0) / (lam - 1.0) + rho ** (-lam) * ex / (1.0 - XI * lam + PHI * lam * lam)
    if not inner > 0:
        raise DomainError(f"upper bound undefined here (base {inner:.3g} <= 0)")
    return math.exp(math.log(inner) / lam)


def asymptotic_constants(rho, as_printed=False):
    """Coefficients of ``base(lam) = 1 + a lam + b lam^2 + O(lam^3)``.

    Then ``ln D_upper(lam) = a + (b - a^2/2) lam + O(lam^2)``. The default
    ``b`` is the actual Taylor coefficient, whose last term is
    ``ln(rho)^2 e^(1/rho) / 2``; ``as_printed=True`` returns the variant with
    a bare ``ln(rho)^2`` instead.
    """
    ex = math.exp(1.0 / rho)
    lr = math.log(rho)
    a = 1.0 - ex + XI * ex - lr * ex
    b = 1.0 - ex + (XI**2 - PHI) * ex - XI * lr * ex
    b += lr**2 if as_printed else 0.5 * lr**2 * ex
    return a, b


def appendix_a8_gap(rho):
    """``|1 - e^(-1/rho) - xi + ln rho - E1(1/rho)|``."""
    x = 1.0 / rho
    f = 1.0 - math.exp(-x) - XI + math.log(rho)
    return abs(f - exp_integral_e1(x))


# ---------------------------------------------------------------------------
# Dispatch for sweeps


def distortion_point(channel, eta, delay, spec=None):
    """Evaluate one point; ``delay`` is ``tau_n``, ``math.inf`` or ``"inf"``, or ``"zero"``."""
    if delay == "zero":
        return DistortionPoint(channel.snr, 0.0, eta, d_zero(channel, eta, spec), "d0")
    if delay == "inf" or delay == math.inf:
        return DistortionPoint(channel.snr, math.inf, eta, d_infinite(channel, eta, spec), "d_inf")
    tau_n = float(delay)
    if channel.mt == 1 and channel.mr == 1:
        value = d_delay_siso(channel.snr, eta, tau_n, spec=spec)
        return DistortionPoint(channel.snr, tau_n, eta, value, "siso_closed")
    value = d_delay_mimo(channel, eta, tau_n, spec=spec)
    return DistortionPoint(channel.snr, tau_n, eta, value, "mimo_hankel")


def snr_curve(mt, mr, eta, delay, snr_db_grid, spec=None):
    """``DistortionCurve`` over an SNR grid (dB) at fixed delay."""
    pts = [distortion_point(ChannelSpec.from_db(mt, mr, s), eta, delay, spec) for s in snr_db_grid]
    return DistortionCurve(tuple(pts), "snr_sweep")
