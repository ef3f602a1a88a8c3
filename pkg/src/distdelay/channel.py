"""I.i.d. block Rayleigh fading channels: sampling and eigenvalue densities.

Rates are in nats. Per channel use the mutual information of an
``mr x mt`` channel is ``ln det(I + (snr/mt) H H^H)``; a frame carries
``K * eta`` channel uses.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

# Analytic (quadrature/determinant) routes are limited to this many antennas
# per side; sampling is not.
MAX_ANALYTIC_ANTENNAS = 8

MODELS = ("iid_rayleigh_block", "static")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def make_stream(seed, stream_id=0):
    """Counter-based random stream for ``(seed, stream_id)``.

    Philox keyed through ``SeedSequence(seed, spawn_key=(stream_id,))``:
    the same pair always yields the same numbers, and distinct stream ids
    are independent, so parallel work can be split by id.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ChannelSpec:
    """Antenna configuration and linear SNR.

    ``model="static"`` pins every eigenvalue of ``H H^H`` to ``max(mt, mr)``
    (a non-fading channel with the same average gain); it exists for
    degenerate-case testing and is rejected by the analytic routes.
    """

    mt: int
    mr: int
    snr: float
    model: str = "iid_rayleigh_block"
    m_star: int = field(init=False, repr=False)
    m_sup: int = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.mt) != self.mt or int(self.mr) != self.mr or self.mt < 1 or self.mr < 1:
            raise ValueError(f"antenna counts must be positive integers, got {self.mt}x{self.mr}")
        if not (self.snr > 0 and math.isfinite(self.snr)):
            raise ValueError(f"snr must be a positive finite number, got {self.snr}")
        if self.model not in MODELS:
            raise ValueError(f"unknown channel model {self.model!r}")
        object.__setattr__(self, "mt", int(self.mt))
        object.__setattr__(self, "mr", int(self.mr))
        object.__setattr__(self, "snr", float(self.snr))
        object.__setattr__(self, "m_star", min(self.mt, self.mr))
        object.__setattr__(self, "m_sup", max(self.mt, self.mr))

    @classmethod
    def from_db(cls, mt, mr, snr_db, model="iid_rayleigh_block"):
        return cls(mt, mr, float(db_to_linear(snr_db)), model)

    @property
    def d(self):
        return self.m_sup - self.m_star

    @property
    def gain(self):
        """Per-eigenvalue SNR scaling ``snr / mt``."""
        return self.snr / self.mt

    @property
    def snr_db(self):
        return float(linear_to_db(self.snr))

    def with_snr(self, snr):
        return ChannelSpec(self.mt, self.mr, snr, self.model)

    def require_analytic(self):
        if self.model != "iid_rayleigh_block":
            raise ValueError(f"analytic routes need the i.i.d. Rayleigh model, not {self.model!r}")
        if self.m_sup > MAX_ANALYTIC_ANTENNAS:
            raise ValueError(
                f"analytic routes support at most {MAX_ANALYTIC_ANTENNAS} antennas per side")


@dataclass(frozen=True)
class EigenSample:
    """Ordered eigenvalues of ``H H^H`` (the ``m_star`` nonzero ones)."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        if np.any(ev < 0) or np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be nonnegative and ascending")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)


def sample_eigenvalues(spec, rng, size):
    """Draw ``size`` channel matrices; return ascending eigenvalues, shape ``(size, m_star)``.

    Entries of H are i.i.d. CN(0, 1). The eigenvalues come from the smaller
    Gram matrix (``H^H H`` or ``H H^H``), which shares the nonzero spectrum.
    """
    size = int(size)
    if spec.model == "static":
        return np.full((size, spec.m_star), float(spec.m_sup))
    z = rng.standard_normal((size, spec.mr, spec.mt, 2))
    if spec.m_star == 1:
        # a single nonzero eigenvalue: the squared Frobenius norm
        return 0.5 * np.einsum("nijk,nijk->n", z, z)[:, None]
    h = (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)
    if spec.mt <= spec.mr:
        gram = np.conj(np.swapaxes(h, 1, 2)) @ h
    else:
        gram = h @ np.conj(np.swapaxes(h, 1, 2))
    ev = np.linalg.eigvalsh(gram)
    return np.clip(ev, 0.0, None)


def sample_channel_gain(spec, rng):
    """One channel draw as an ``EigenSample``."""
    return EigenSample(sample_eigenvalues(spec, rng, 1)[0])


def mutual_information(spec, sample, eta, k):
    """Nats per frame ``K eta sum_i ln(1 + (snr/mt) lambda_i)``.

    ``sample`` may be an ``EigenSample`` or an array whose last axis holds
    eigenvalues; arrays give one value per row.
    """
    ev = sample.eigenvalues if isinstance(sample, EigenSample) else np.asarray(sample, dtype=float)
    per_use = np.log1p(spec.gain * ev).sum(axis=-1)
    out = k * eta * per_use
    return float(out) if np.ndim(out) == 0 else out


def wishart_log_normalizer(spec):
    """log of ``prod_{i=1}^{m_star} Gamma(i) Gamma(d + i)``.

    This is the integral of ``prod l_i^d prod_{i<j} (l_i - l_j)^2 e^{-sum l}``
    over the ordered cone ``0 <= l_1 <= ... <= l_m``.
    """
    i = np.arange(1, spec.m_star + 1)
    return float(np.sum(special.gammaln(i) + special.gammaln(spec.d + i)))


def wishart_pdf(spec, eigenvalues):
    """Joint density of the ordered eigenvalues of ``H H^H``.

    Normalized on the ordered cone; returns 0 for unordered input.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    if ev.shape[-1] != spec.m_star:
        raise ValueError(f"expected {spec.m_star} eigenvalues, got {ev.shape[-1]}")
    iu = np.triu_indices(spec.m_star, 1)
    vand = (ev[..., :, None] - ev[..., None, :])[..., iu[0], iu[1]]
    valid = np.all(vand <= 0, axis=-1) & np.all(ev >= 0, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = 2.0 * np.log(np.abs(vand)).sum(axis=-1) - ev.sum(axis=-1)
        if spec.d:
            logp = logp + spec.d * np.log(ev).sum(axis=-1)
    logp = logp - wishart_log_normalizer(spec)
    out = np.where(valid, np.exp(np.where(valid, logp, 0.0)), 0.0)
    return float(out) if np.ndim(out) == 0 else out
