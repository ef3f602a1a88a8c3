"""Frame-level simulation of the quantizer -> buffer -> fading channel chain.

Every frame the quantizer pushes ``K rs`` nats into the buffer and the
channel drains ``R_t = K eta sum ln(1 + g lambda_i)`` nats, so the backlog
follows the Lindley recursion ``Q_{t+1} = max(0, Q_t + K rs - R_t)``. All
buffer sizes are in nats.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import _backend
from .channel import ChannelSpec, make_stream, mutual_information, sample_eigenvalues
from .effcap import QosSpec

CHUNK = 1 << 17
MIN_WARMUP = 10_000
MIN_HITS = 50
N_BATCHES = 20
# stream ids are (replication << 24) + chunk index
_REP_SHIFT = 24


class InstabilityWarning(RuntimeWarning):
    """The backlog looks like it is drifting upward (arrivals exceed service)."""


class InsufficientTailDataError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    channel: ChannelSpec
    qos: QosSpec
    rs: float
    buffer_thresholds: Optional[tuple] = None
    frames: int = 1_000_000
    seed: int = 0
    warmup_frames: Optional[int] = None
    replications: int = 1

    def __post_init__(self):
        if not (self.rs > 0 and math.isfinite(self.rs)):
            raise ValueError(f"rs must be positive, got {self.rs}")
        if int(self.frames) != self.frames or self.frames < 2:
            raise ValueError("frames must be an integer >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.buffer_thresholds is not None:
            thr = tuple(float(b) for b in self.buffer_thresholds)
            if not thr or any(b < 0 for b in thr) or any(np.diff(thr) <= 0):
                raise ValueError("buffer_thresholds must be nonnegative and strictly ascending")
            object.__setattr__(self, "buffer_thresholds", thr)
        if self.warmup_frames is not None and not 0 <= self.warmup_frames < self.frames:
            raise ValueError("warmup_frames must lie in [0, frames)")

    @property
    def warmup(self):
        if self.warmup_frames is not None:
            return int(self.warmup_frames)
        return min(max(self.frames // 10, MIN_WARMUP), self.frames // 2)

    @property
    def arrival_per_frame(self):
        return self.qos.k * self.rs


@dataclass(frozen=True)
class SimResult:
    thresholds: np.ndarray
    overflow_prob: np.ndarray
    tail_hits: Optional[np.ndarray] = None
    overflow_stderr: Optional[np.ndarray] = None
    fitted_theta: float = math.nan
    fitted_kappa: float = math.nan
    fit_r2: float = math.nan
    kappa_hat: float = math.nan
    kappa_stderr: float = math.nan
    empirical_distortion: float = math.nan
    distortion_stderr: float = math.nan
    late_fraction: float = math.nan
    frames_used: int = 0
    seed: Optional[int] = None
    stable: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, float) and not math.isfinite(v):
                v = None
            out[k] = v
        return out


def _service(config, rep):
    """Per-frame service draws for one replication, chunked over Philox streams."""
    parts = []
    done = 0
    chunk = 0
    eta, k = config.qos.eta, config.qos.k
    while done < config.frames:
        n = min(CHUNK, config.frames - done)
        rng = make_stream(config.seed, (rep << _REP_SHIFT) + chunk)
        ev = sample_eigenvalues(config.channel, rng, n)
        parts.append(mutual_information(config.channel, ev, eta, k))
        done += n
        chunk += 1
    return np.concatenate(parts)


def _auto_thresholds(q, count=30):
    # up to the level still exceeded by ~4 * MIN_HITS frames
    top = float(np.quantile(q, 1.0 - min(0.5, 4.0 * MIN_HITS / q.size)))
    if top <= 0:
        top = 1.0
    return np.linspace(0.0, top, count + 1)[1:]


def _drifting(q_tail, mean_increment):
    # linear growth over the last 10% of frames
    if mean_increment <= 0 or q_tail.size < 10:
        return False
    t = np.arange(q_tail.size, dtype=float)
    slope = np.polyfit(t, q_tail, 1)[0]
    return slope > 0.5 * mean_increment


def _run(config, rep, service=None):
    r = _service(config, rep) if service is None else np.asarray(service, dtype=float)
    if r.shape != (config.frames,):
        raise ValueError(f"service must have one entry per frame ({config.frames})")
    inc = np.ascontiguousarray(config.arrival_per_frame - r)
    q = _backend.lindley(inc, 0.0)
    last = q[-max(config.frames // 10, 1):]
    unstable = _drifting(last, float(inc.mean())) or config.arrival_per_frame >= r.mean()
    return np.ascontiguousarray(q[config.warmup:]), unstable


def _batch_counts(q, thresholds):
    edges = np.linspace(0, q.size, N_BATCHES + 1).astype(int)
    return np.stack([_backend.tail_counts(q[a:b], thresholds)
                     for a, b in zip(edges[:-1], edges[1:])]), np.diff(edges)


def _batch_se(counts, sizes):
    # standard error of the pooled frequency from batch means
    p = counts / sizes[:, None] if counts.ndim == 2 else counts / sizes
    return p.std(axis=0, ddof=1) / math.sqrt(p.shape[0])


def _late_stats(q_list, config, delay_bound_frames, late_penalty):
    limit = config.arrival_per_frame * delay_bound_frames
    on_time = math.exp(-config.rs)
    per_batch = []
    late_total = 0
    n_total = 0
    for q in q_list:
        late = q > limit
        late_total += int(late.sum())
        n_total += q.size
        edges = np.linspace(0, q.size, N_BATCHES + 1).astype(int)
        per_batch.extend(late[a:b].mean() for a, b in zip(edges[:-1], edges[1:]))
    frac = late_total / n_total
    value = frac * late_penalty + (1.0 - frac) * on_time
    se = np.std(per_batch, ddof=1) / math.sqrt(len(per_batch)) * abs(late_penalty - on_time)
    return value, float(se), frac


def _collect(config, service, workers):
    reps = range(config.replications)
    if service is not None:
        if config.replications != 1:
            raise ValueError("an explicit service path implies a single replication")
        return [_run(config, 0, service)]
    if workers and workers > 1 and config.replications > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda i: _run(config, i), reps))
    return [_run(config, i) for i in reps]


def simulate(config: SimConfig, service=None, workers=None) -> SimResult:
    """Run the queue and summarize its stationary tail.

    ``service`` optionally replaces the random channel with a given per-frame
    service sequence (nats per frame). The empirical distortion uses the
    QoS delay ``qos.normalized_delay`` as the deadline.
    """
    runs = _collect(config, service, workers)
    qs = [q for q, _ in runs]
    unstable = any(u for _, u in runs)
    thresholds = (np.asarray(config.buffer_thresholds) if config.buffer_thresholds is not None
                  else _auto_thresholds(np.concatenate(qs)))
    thresholds = np.ascontiguousarray(thresholds, dtype=float)
    counts, sizes = zip(*(_batch_counts(q, thresholds) for q in qs))
    counts = np.concatenate(counts)
    sizes = np.concatenate(sizes)
    n = int(sizes.sum())
    hits = counts.sum(axis=0)
    prob = hits / n
    zero = np.zeros(1)
    busy = np.concatenate([_batch_counts(q, zero)[0][:, 0] for q in qs])
    kappa = float(busy.sum() / n)
    kappa_se = float(_batch_se(busy, sizes))

    if not unstable:
        unstable = not _stationary(qs, thresholds, hits)
    if unstable:
        warnings.warn("queue is not stable: backlog drifts upward or tail estimates are "
                      "not stationary", InstabilityWarning, stacklevel=2)

    fit_theta = fit_kappa = r2 = math.nan
    partial = SimResult(thresholds, prob, hits, frames_used=n)
    try:
        fit_theta, fit_kappa, r2 = _fit(partial)
    except InsufficientTailDataError:
        pass

    dist, dist_se, late = _late_stats(qs, config, config.qos.normalized_delay, 1.0)
    return SimResult(
        thresholds=thresholds, overflow_prob=prob, tail_hits=hits,
        overflow_stderr=_batch_se(counts, sizes), fitted_theta=fit_theta,
        fitted_kappa=fit_kappa, fit_r2=r2, kappa_hat=kappa, kappa_stderr=kappa_se,
        empirical_distortion=dist, distortion_stderr=dist_se, late_fraction=late,
        frames_used=n, seed=int(config.seed), stable=not unstable,
    )


def _stationary(qs, thresholds, hits):
    # compare first- and second-half tail frequencies at a moderate level
    # (pooled frequency near 5%); the deep tail is dominated by a handful of
    # long excursions and is too noisy for a 2x test
    q = np.concatenate(qs)
    ok = np.nonzero(hits >= 4 * MIN_HITS)[0]
    if ok.size == 0:
        return True
    freq = hits[ok] / q.size
    j = ok[np.argmin(np.abs(np.log(freq / 0.05)))]
    b = thresholds[j:j + 1]
    half = q.size // 2
    p1 = _backend.tail_counts(np.ascontiguousarray(q[:half]), b)[0] / half
    p2 = _backend.tail_counts(np.ascontiguousarray(q[half:]), b)[0] / (q.size - half)
    if p1 == 0 or p2 == 0:
        return False
    return max(p1 / p2, p2 / p1) <= 2.0


def _fit(result):
    b = np.asarray(result.thresholds, dtype=float)
    p = np.asarray(result.overflow_prob, dtype=float)
    hits = (np.asarray(result.tail_hits) if result.tail_hits is not None
            else np.full(b.shape, np.iinfo(np.int64).max))
    use = (hits >= MIN_HITS) & (b > 0) & (p > 0)
    if use.sum() < 4:
        raise InsufficientTailDataError(
            f"need >= 4 positive thresholds with >= {MIN_HITS} tail hits, have {int(use.sum())}")
    x, y = b[use], np.log(p[use])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(-slope), float(math.exp(intercept)), float(r2)


def fitted_overflow_exponent(result: SimResult):
    """Least-squares ``(theta, kappa)`` in ``ln Pr{Q > B} = ln kappa - theta B``.

    Only thresholds with ``B > 0`` and at least 50 tail hits take part.
    """
    theta, kappa, _ = _fit(result)
    return theta, kappa


def empirical_end_to_end_distortion(config: SimConfig, delay_bound_frames, late_penalty=1.0,
                                    service=None, return_stderr=False):
    """Average per-sample distortion when late frames are lost.

    A frame is late when the backlog it joins, measured in frames of
    arrivals ``Q / (K rs)``, exceeds ``delay_bound_frames``. On-time frames
    get the quantizer distortion ``exp(-rs)``; late ones ``late_penalty``.
    """
    if delay_bound_frames < 0:
        raise ValueError("delay bound must be nonnegative")
    runs = _collect(config, service, None)
    if any(u for _, u in runs):
        warnings.warn("queue is not stable", InstabilityWarning, stacklevel=2)
    value, se, _ = _late_stats([q for q, _ in runs], config, delay_bound_frames, late_penalty)
    return (value, se) if return_stderr else value
