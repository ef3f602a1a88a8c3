"""Special functions and quadrature on ``[0, inf)``.

Everything here is a pure function of its arguments. Integrals are written
against the Laguerre weight: ``integrate_semiinfinite(f)`` returns
``int_0^inf f(x) exp(-x) dx``.
"""

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from . import _backend

EULER_GAMMA = float(np.euler_gamma)

# Panel edges for the graded composite rule: 0, 2^-1022, 2^-1020, ..., 2^10.
# Grading down to the smallest normal double keeps the first panel negligible
# for integrable endpoint singularities up to about x^-0.97.
_GRADED_EDGES = np.concatenate([[0.0], np.ldexp(1.0, np.arange(-1022, 11, 2))])


class PoleError(ValueError):
    """Argument sits on a pole of a gamma-type function."""


class DomainError(ValueError):
    """Argument outside the domain where the function is defined."""


class DivergenceError(DomainError):
    """The defining integral diverges."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature failed to reach its tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    """How ``integrate_semiinfinite`` evaluates an integral.

    ``gauss_laguerre`` compares ``node_count // 2`` against ``node_count``
    nodes; when they disagree beyond ``rel_tol`` it either falls back to the
    adaptive rule (``fallback=True``) or raises ``ConvergenceError``.
    ``adaptive_semiinfinite`` goes straight to the adaptive graded rule.
    """

    node_count: int = 128
    kind: str = "gauss_laguerre"
    rel_tol: float = 1e-9
    fallback: bool = True

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 2:
            raise ValueError(f"node_count must be an integer >= 2, got {self.node_count!r}")
        if self.kind not in ("gauss_laguerre", "adaptive_semiinfinite"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if not (0.0 < self.rel_tol <= 1e-2):
            raise ValueError(f"rel_tol must lie in (0, 1e-2], got {self.rel_tol!r}")


def default_quadrature():
    """Default spec; ``DD_QUAD_TOL`` in the environment overrides ``rel_tol``."""
    tol = os.environ.get("DD_QUAD_TOL")
    if tol:
        return QuadratureSpec(rel_tol=float(tol))
    return QuadratureSpec()


def gamma_complete(x):
    """Gamma function, rejecting the poles at 0, -1, -2, ..."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"gamma argument must be finite, got {x}")
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"gamma has a pole at {x}")
    return math.gamma(x)


def gamma_lower_incomplete(s, x):
    """Lower incomplete gamma ``int_0^x t^(s-1) e^-t dt`` for ``s > 0``."""
    if s <= 0:
        raise DomainError("lower incomplete gamma needs s > 0")
    if x < 0:
        raise DomainError("lower incomplete gamma needs x >= 0")
    return float(special.gammainc(s, x) * math.gamma(s))


def gamma_upper_incomplete(s, x):
    """Upper incomplete gamma ``Gamma(s, x) = int_x^inf t^(s-1) e^-t dt``.

    For ``s > 0`` this is the regularized scipy value times ``Gamma(s)``.
    For ``s <= 0`` the recurrence in ``s`` cancels badly near zero, so the
    integral is evaluated directly after the shift ``t = x + u``.
    """
    s = float(s)
    x = float(x)
    if x < 0 or not math.isfinite(x):
        raise DomainError(f"upper incomplete gamma needs finite x >= 0, got {x}")
    if x == 0.0:
        if s <= 0:
            raise DivergenceError(f"Gamma({s}, 0) diverges for s <= 0")
        return math.gamma(s)
    if s > 0:
        return float(special.gammaincc(s, x) * math.gamma(s))
    spec = QuadratureSpec(kind="adaptive_semiinfinite", rel_tol=1e-12)
    tail = integrate_semiinfinite(lambda u: (x + u) ** (s - 1.0), spec)
    return math.exp(-x) * tail


def _e1_series(x):
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= -x / k
        inc = term / k
        total += inc
        if abs(inc) <= 1e-17 * abs(total) or k > 500:
            break
        k += 1
    return -EULER_GAMMA - math.log(x) - total


def _e1_scaled_continued_fraction(x):
    # exp(x) E1(x) by modified Lentz on the standard continued fraction.
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -float(i * i)
        b += 2.0
        d = an * d + b
        d = tiny if d == 0.0 else d
        c = b + an / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ConvergenceError(f"E1 continued fraction did not converge at x={x}")


def exp_integral_e1(x):
    """Exponential integral ``E1(x) = int_x^inf e^-t / t dt`` for ``x > 0``.

    Power series below 1, continued fraction from 1 upward.
    """
    x = float(x)
    if not x > 0:
        raise DomainError(f"E1 needs x > 0, got {x}")
    if x < 1.0:
        return _e1_series(x)
    return _e1_scaled_continued_fraction(x) * math.exp(-x)


def exp_integral_e1_scaled(x):
    """``exp(x) * E1(x)``, safe for large ``x`` where both factors over/underflow."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"E1 needs x > 0, got {x}")
    if x < 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_continued_fraction(x)


def _is_nonpositive_integer(v):
    return v <= 0 and v == math.floor(v)


def hyp1f1(a, b, z, rel_tol=1e-16, max_terms=10_000):
    """Confluent hypergeometric function 1F1(a; b; z) for real arguments.

    Direct power series with compensated summation. Negative ``z`` is mapped
    through Kummer's transformation ``e^z 1F1(b-a; b; -z)`` unless ``a`` is a
    nonpositive integer (terminating series).
    """
    a, b, z = float(a), float(b), float(z)
    if _is_nonpositive_integer(b):
        raise PoleError(f"1F1 is undefined for b = {b}")
    if z == 0.0:
        return 1.0
    if z < 0 and not _is_nonpositive_integer(a):
        return math.exp(z) * hyp1f1(b - a, b, -z, rel_tol, max_terms)
    value, _, converged = _backend.hyp1f1_series(a, b, z, rel_tol, int(max_terms))
    if not converged:
        raise ConvergenceError(
            f"1F1({a}; {b}; {z}) series not converged after {max_terms} terms")
    return value


def tricomi_psi(a, b, z):
    """Tricomi function Psi(a, b; z) (a.k.a. U) from two 1F1 terms.

    Psi(a,b;z) = G(1-b)/G(a-b+1) 1F1(a;b;z) + G(b-1)/G(a) z^(1-b) 1F1(a-b+1;2-b;z)

    The reduction is degenerate for integer ``b``.
    """
    a, b, z = float(a), float(b), float(z)
    if not z > 0:
        raise DomainError(f"Psi needs z > 0, got {z}")
    if b == math.floor(b):
        raise PoleError(f"two-term reduction of Psi is singular for integer b = {b}")
    first = gamma_complete(1.0 - b) * special.rgamma(a - b + 1.0) * hyp1f1(a, b, z)
    second = (gamma_complete(b - 1.0) * special.rgamma(a) * z ** (1.0 - b)
              * hyp1f1(a - b + 1.0, 2.0 - b, z))
    return float(first + second)


@lru_cache(maxsize=32)
def _laguerre_rule(n):
    x, w = np.polynomial.laguerre.laggauss(n)
    return x, w


@lru_cache(maxsize=8)
def _legendre_rule(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _as_values(f, x):
    y = np.asarray(f(x), dtype=np.float64)
    if y.shape == ():
        y = np.full(x.shape, float(y))
    return y


def _gauss_laguerre(f, n):
    x, w = _laguerre_rule(n)
    return _as_values(f, x) @ w


def _panel_sums(f, lo, hi, n):
    t, w = _legendre_rule(n)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    y = _as_values(f, x) * np.exp(-x)
    y = y.reshape(y.shape[:-1] + (lo.size, n))
    return (y @ w) * half


def _adaptive_graded(f, rel_tol, order=16, max_rounds=40, max_panels=20_000):
    lo = _GRADED_EDGES[:-1].copy()
    hi = _GRADED_EDGES[1:].copy()
    done = None
    done_err = None
    for _ in range(max_rounds):
        coarse = _panel_sums(f, lo, hi, order)
        fine = _panel_sums(f, lo, hi, 2 * order)
        err = np.abs(fine - coarse)
        if done is None:
            done = np.zeros(fine.shape[:-1])
            done_err = np.zeros(fine.shape[:-1])
        total = done + fine.sum(axis=-1)
        total_err = done_err + err.sum(axis=-1)
        scale = np.max(np.abs(total)) if np.size(total) else 0.0
        target = rel_tol * scale
        if np.all(total_err <= target) or scale == 0.0:
            return total, float(np.max(total_err))
        # panels whose error is small relative to their share are frozen
        panel_err = err.reshape(-1, lo.size).max(axis=0)
        share = target / lo.size
        keep = panel_err <= 0.5 * share
        done = done + fine[..., keep].sum(axis=-1)
        done_err = done_err + err[..., keep].sum(axis=-1)
        lo, hi = lo[~keep], hi[~keep]
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        if lo.size > max_panels:
            break
    raise ConvergenceError(
        f"adaptive quadrature did not reach rel_tol={rel_tol:g} "
        f"(error estimate {np.max(total_err):.3g} vs scale {scale:.3g})")


def integrate_semiinfinite(f, spec=None, return_error=False):
    """Approximate ``int_0^inf f(x) exp(-x) dx``.

    Args:
        f: vectorized integrand (without the ``exp(-x)`` factor). It receives a
            1-D array of nodes and returns values of shape ``(..., nodes)``;
            vector-valued integrands give vector results.
        spec: ``QuadratureSpec``; defaults to ``default_quadrature()``.
        return_error: also return the self-reported absolute error estimate.

    Raises:
        ConvergenceError: refinements disagree beyond ``spec.rel_tol``.
    """
    spec = default_quadrature() if spec is None else spec
    if spec.kind == "gauss_laguerre":
        fine = _gauss_laguerre(f, spec.node_count)
        coarse = _gauss_laguerre(f, max(spec.node_count // 2, 1))
        err = float(np.max(np.abs(fine - coarse)))
        scale = float(np.max(np.abs(fine)))
        if err <= spec.rel_tol * scale:
            result = fine
        elif spec.fallback:
            result, err = _adaptive_graded(f, spec.rel_tol)
        else:
            raise ConvergenceError(
                f"Gauss-Laguerre {spec.node_count // 2} vs {spec.node_count} nodes "
                f"differ by {err:.3g} (scale {scale:.3g})")
    else:
        result, err = _adaptive_graded(f, spec.rel_tol)
    result = float(result) if np.ndim(result) == 0 else np.asarray(result)
    return (result, err) if return_error else result
