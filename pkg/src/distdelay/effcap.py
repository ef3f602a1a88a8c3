"""Effective capacity of i.i.d. block-fading service.

All rates are nats per frame unless a name says otherwise.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .channel import make_stream, mutual_information, sample_eigenvalues
from .distortion import ergodic_capacity, log_wishart_mgf

MC_CHUNK = 1 << 16


@dataclass(frozen=True)
class QosSpec:
    """QoS exponent plus the frame geometry that turns it into a delay.

    ``samples_per_frame`` (K) is derived as ``round(T_f * B_w)``; passing it
    explicitly only validates it.
    """

    theta: float
    source_bandwidth_hz: float = 1e5
    frame_duration_s: float = 2e-3
    eta: float = 1.0
    samples_per_frame: int = field(default=None)

    def __post_init__(self):
        for name in ("theta", "source_bandwidth_hz", "frame_duration_s", "eta"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        k = round(self.frame_duration_s * self.source_bandwidth_hz)
        if k < 1:
            raise ValueError("frame holds no source samples")
        if self.samples_per_frame is not None and self.samples_per_frame != k:
            raise ValueError(f"samples_per_frame={self.samples_per_frame} but T_f*B_w rounds to {k}")
        object.__setattr__(self, "samples_per_frame", int(k))

    @classmethod
    def from_normalized_delay(cls, tau_n, source_bandwidth_hz=1e5, frame_duration_s=2e-3, eta=1.0):
        k = round(frame_duration_s * source_bandwidth_hz)
        return cls(1.0 / (k * tau_n), source_bandwidth_hz, frame_duration_s, eta)

    @property
    def k(self):
        return self.samples_per_frame

    @property
    def normalized_delay(self):
        """Delay in frames, ``1 / (K theta)``."""
        return 1.0 / (self.samples_per_frame * self.theta)

    @property
    def delay_s(self):
        return 1.0 / (self.source_bandwidth_hz * self.theta)


def effective_capacity_from_samples(rates, theta, return_stderr=False):
    """``-(1/theta) ln mean(exp(-theta R))`` evaluated with log-sum-exp.

    The standard error is the delta-method value for the log of the mean.
    """
    r = np.asarray(rates, dtype=float).reshape(-1)
    if r.size < 2:
        raise ValueError("need at least two rate samples")
    if theta <= 0:
        raise ValueError("theta must be positive")
    x = -theta * r
    log_mean = logsumexp(x) - math.log(r.size)
    value = -log_mean / theta
    if not return_stderr:
        return value
    w = np.exp(x - x.max())
    rel = w.std(ddof=1) / (w.mean() * math.sqrt(r.size))
    return value, rel / theta


def _chunk_log_sum(channel, qos, seed, index, n):
    rng = make_stream(seed, index)
    r = mutual_information(channel, sample_eigenvalues(channel, rng, n), qos.eta, qos.k)
    x = -qos.theta * r
    w = np.exp(x - x.max())
    # per-chunk: log sum, and sums needed for the pooled variance
    return logsumexp(x), x.max(), w.sum(), (w * w).sum()


def _pairwise_logaddexp(values):
    vals = list(values)
    while len(vals) > 1:
        nxt = [np.logaddexp(vals[i], vals[i + 1]) for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return float(vals[0])


def effective_capacity_mc(channel, qos, trials, rng, return_stderr=False, workers=None):
    """Monte Carlo effective capacity in nats per frame.

    ``rng`` is either a ``numpy.random.Generator`` (drawn sequentially) or an
    integer seed. With a seed the trials are cut into fixed chunks, chunk
    ``i`` drawing from ``make_stream(seed, i)``, and partial log-sums are
    combined by a fixed pairwise tree; the result does not depend on
    ``workers``.
    """
    trials = int(trials)
    if trials < 10_000:
        raise ValueError("effective_capacity_mc needs at least 1e4 trials")
    if isinstance(rng, np.random.Generator):
        r = mutual_information(channel, sample_eigenvalues(channel, rng, trials), qos.eta, qos.k)
        return effective_capacity_from_samples(r, qos.theta, return_stderr)

    sizes = [MC_CHUNK] * (trials // MC_CHUNK)
    if trials % MC_CHUNK:
        sizes.append(trials % MC_CHUNK)
    jobs = [(channel, qos, int(rng), i, n) for i, n in enumerate(sizes)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda a: _chunk_log_sum(*a), jobs))
    else:
        parts = [_chunk_log_sum(*a) for a in jobs]
    log_mean = _pairwise_logaddexp([p[0] for p in parts]) - math.log(trials)
    value = -log_mean / qos.theta
    if not return_stderr:
        return value
    # pooled second moment of exp(x - log_mean)
    m1 = sum(p[2] * math.exp(p[1] - log_mean) for p in parts) / trials
    m2 = sum(p[3] * math.exp(2.0 * (p[1] - log_mean)) for p in parts) / trials
    var = max(m2 - m1 * m1, 0.0) * trials / (trials - 1)
    return value, math.sqrt(var / trials) / (m1 * qos.theta)


def effective_capacity_quadrature(channel, qos, spec=None):
    """Effective capacity in nats per frame from the Wishart MGF."""
    s = qos.theta * qos.k * qos.eta
    if s == 0:
        return qos.k * qos.eta * ergodic_capacity(channel, spec)
    return -log_wishart_mgf(channel, s, spec) / qos.theta


def ergodic_rate_per_frame(channel, eta, k, spec=None):
    return k * eta * ergodic_capacity(channel, spec)


def balance_exponents(source_bandwidth_hz, delay_s):
    """QoS exponent that equalizes the quantizer and overflow exponents: ``1/(B_w tau)``."""
    if source_bandwidth_hz <= 0 or delay_s <= 0:
        raise ValueError("bandwidth and delay must be positive")
    return 1.0 / (source_bandwidth_hz * delay_s)


def delay_for_theta(source_bandwidth_hz, theta):
    """Inverse of ``balance_exponents`` in the delay argument."""
    if source_bandwidth_hz <= 0 or theta <= 0:
        raise ValueError("bandwidth and theta must be positive")
    return 1.0 / (source_bandwidth_hz * theta)


def end_to_end_bound(rs, qos, kappa=1.0, o1=1.0, delay_s=None):
    """``exp(-rs) + o1 kappa exp(-theta B_w rs tau)``.

    ``tau`` defaults to the balanced delay ``qos.delay_s``, making both
    exponents equal to ``rs``.
    """
    if rs < 0:
        raise ValueError("rs must be nonnegative")
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    tau = qos.delay_s if delay_s is None else delay_s
    return math.exp(-rs) + o1 * kappa * math.exp(-qos.theta * qos.source_bandwidth_hz * rs * tau)


def theta_for_arrival_rate(channel, eta, k, arrival_per_frame, spec=None):
    """QoS exponent whose effective capacity equals a constant arrival rate.

    This is the large-deviation decay rate of the stationary backlog for
    constant arrivals ``arrival_per_frame`` nats per frame.
    """
    ergodic = ergodic_rate_per_frame(channel, eta, k, spec)
    if not 0 < arrival_per_frame < ergodic:
        raise ValueError(
            f"arrival {arrival_per_frame:.6g} must lie in (0, ergodic rate {ergodic:.6g})")

    def gap(log_theta):
        theta = math.exp(log_theta)
        return -log_wishart_mgf(channel, theta * k * eta, spec) / theta - arrival_per_frame

    lo, hi = math.log(1e-12), math.log(1.0)
    while gap(hi) > 0:
        hi += 2.0
    return math.exp(brentq(gap, lo, hi, xtol=1e-12, rtol=1e-12))
