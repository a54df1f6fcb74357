"""Observation channels between the learner's queries and the adversary.

Three channels: the identity, additive Gaussian noise on each query, and
independent erasure (each query is seen with probability ``p_obs``).  Only
queries enter a channel; responses never do.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pql.cells import EmptyCountsError, _reject_transcript, tally_cells
from pql.model import ConfigurationError, Hyperplane, QueryPoint, UniformPartition
from pql.rng import TrialStream


class ChannelKind(str, enum.Enum):
    FULL = "full"
    GAUSSIAN = "gaussian"
    ERASURE = "erasure"


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind = ChannelKind.FULL
    sigma: float | None = None
    p_obs: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.kind is ChannelKind.GAUSSIAN:
            if self.sigma is None or not self.sigma > 0:
                raise ConfigurationError("gaussian channel needs sigma > 0")
        elif self.kind is ChannelKind.ERASURE:
            if self.p_obs is None or not 0.0 < self.p_obs <= 1.0:
                raise ConfigurationError("erasure channel needs p_obs in (0, 1]")

    @property
    def label(self) -> str:
        if self.kind is ChannelKind.GAUSSIAN:
            return f"gaussian:{self.sigma!r}"
        if self.kind is ChannelKind.ERASURE:
            return f"erasure:{self.p_obs!r}"
        return "full"

    @classmethod
    def parse(cls, text: str) -> "ChannelSpec":
        """Inverse of :attr:`label`: ``full``, ``gaussian:SIGMA`` or ``erasure:P``."""
        kind, _, arg = text.strip().partition(":")
        try:
            kind = ChannelKind(kind.strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown channel {text!r}") from None
        if kind is ChannelKind.FULL:
            if arg:
                raise ConfigurationError("full channel takes no parameter")
            return cls()
        if not arg:
            raise ConfigurationError(f"channel {kind.value} needs a parameter, e.g. {kind.value}:0.5")
        try:
            val = float(arg)
        except ValueError:
            raise ConfigurationError(f"bad channel parameter {arg!r}") from None
        if kind is ChannelKind.GAUSSIAN:
            return cls(kind, sigma=val)
        return cls(kind, p_obs=val)


@dataclass(frozen=True)
class Observation:
    """What the adversary sees: ``(position, value)`` pairs for the surviving queries.

    ``n`` is the number of queries the learner issued, known to the adversary
    because it knows the strategy.  ``seed`` identifies the channel's stream.
    """

    items: tuple
    n: int
    seed: int = 0

    def __post_init__(self):
        if len(self.items) > self.n:
            raise ValueError("more observed items than issued queries")

    def values(self) -> list:
        return [v for _, v in self.items]

    def positions(self) -> list[int]:
        return [p for p, _ in self.items]

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class BiasedCountEstimate:
    """Estimated per-cell query counts; their sum never exceeds ``constraint_total``."""

    n_hat: np.ndarray
    constraint_total: int

    def __post_init__(self):
        nh = np.asarray(self.n_hat, dtype=np.float64)
        if (nh < 0).any():
            raise ValueError("negative count estimate")
        assert nh.sum() <= self.constraint_total * (1 + 1e-12), "count estimates exceed n"
        nh.setflags(write=False)
        object.__setattr__(self, "n_hat", nh)

    @property
    def weights(self) -> np.ndarray:
        return self.n_hat

    @property
    def total(self) -> float:
        return float(self.n_hat.sum())


def _as_value(q):
    if isinstance(q, QueryPoint):
        return q.value
    if isinstance(q, Hyperplane):
        return q
    return float(q)


def observe(queries: Sequence, spec: ChannelSpec, rng: TrialStream | None = None) -> Observation:
    """Pass a query list through a channel.

    Gaussian draws use positions ``0..n-1`` of ``rng``; erasure keeps query
    ``i`` when uniform draw ``i`` is below ``p_obs``.  Noisy values are not
    clamped, so some may fall outside ``[0, 1)``.
    """
    _reject_transcript(queries)
    qs = [_as_value(q) for q in queries]
    n = len(qs)
    seed = rng.key if rng is not None else 0
    if spec.kind is ChannelKind.FULL:
        return Observation(tuple(enumerate(qs)), n, seed)
    if rng is None:
        raise ValueError(f"{spec.kind.value} channel needs a random stream")
    if spec.kind is ChannelKind.GAUSSIAN:
        if any(isinstance(q, Hyperplane) for q in qs):
            raise ConfigurationError("the gaussian channel perturbs point queries only")
        z = rng.normals(n)
        vals = np.asarray(qs, dtype=np.float64) + spec.sigma * z
        return Observation(tuple((i, float(v)) for i, v in enumerate(vals)), n, seed)
    keep = rng.uniforms(n) < spec.p_obs
    return Observation(tuple((i, q) for i, q in enumerate(qs) if keep[i]), n, seed)


def gaussian_count_estimate(obs: Observation, delta: float) -> BiasedCountEstimate:
    """Count of perturbed values in each ``delta``-cell; out-of-range values count nowhere."""
    if any(isinstance(v, Hyperplane) for v in obs.values()):
        raise ConfigurationError("gaussian count estimate needs 1-dimensional observations")
    counts = tally_cells(obs, delta, 1)
    return BiasedCountEstimate(counts.weights, obs.n)


def rescale_counts(counts: np.ndarray, n: int) -> np.ndarray:
    """``N^j n / sum N``; the ``1/p_obs`` factors of numerator and denominator cancel."""
    N = np.asarray(counts, dtype=np.float64)
    S = N.sum(axis=-1, keepdims=True)
    return N * n / S


def erasure_count_estimate(obs: Observation, delta: float, p_obs: float, n: int, d: int = 1) -> BiasedCountEstimate:
    """Rescale the observed per-cell counts so they sum to ``n``."""
    if not 0.0 < p_obs <= 1.0:
        raise ConfigurationError("p_obs must be in (0, 1]")
    counts = tally_cells(obs, delta, d)
    if counts.total == 0:
        raise EmptyCountsError("no observed query in any cell")
    return BiasedCountEstimate(rescale_counts(counts.counts, n), n)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via ``erfc``, accurate in the far tails too."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def gaussian_bias_bound(delta: float, sigma: float) -> float:
    """Bias ``zeta = 1/2 + Phi(-delta/sigma)`` of the additive Gaussian channel."""
    if not (delta > 0 and sigma > 0):
        raise ConfigurationError("delta and sigma must be positive")
    return 0.5 + normal_cdf(-delta / sigma)


@dataclass(frozen=True)
class BiasReport:
    """Per-cell ratio ``E[N_hat^j | X* in j] / E[|Q^j| | X* in j]`` with delta-method errors."""

    ratio: np.ndarray
    stderr: np.ndarray
    trials_per_cell: np.ndarray
    trials: int

    @property
    def min_cell(self) -> int:
        r = np.where(np.isnan(self.ratio), np.inf, self.ratio)
        return int(np.argmin(r))

    @property
    def min_ratio(self) -> float:
        return float(self.ratio[self.min_cell])

    @property
    def min_stderr(self) -> float:
        return float(self.stderr[self.min_cell])


def ratio_by_cell(cell: np.ndarray, num: np.ndarray, den: np.ndarray, ncells: int) -> BiasReport:
    """Aggregate per-trial (numerator, denominator) pairs by the target's cell."""
    cell = np.asarray(cell, dtype=np.int64)
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    cnt = np.bincount(cell, minlength=ncells).astype(np.float64)
    sa = np.bincount(cell, num, minlength=ncells)
    sb = np.bincount(cell, den, minlength=ncells)
    saa = np.bincount(cell, num * num, minlength=ncells)
    sbb = np.bincount(cell, den * den, minlength=ncells)
    sab = np.bincount(cell, num * den, minlength=ncells)
    with np.errstate(invalid="ignore", divide="ignore"):
        R = np.where(sb > 0, sa / sb, np.nan)
        # residual variance of a - R b, averaged per trial
        resid = (saa - 2 * R * sab + R * R * sbb) / cnt
        mb = sb / cnt
        se = np.sqrt(np.maximum(resid, 0.0) / cnt) / mb
        se = np.where(cnt > 1, se * np.sqrt(cnt / np.maximum(cnt - 1, 1)), np.nan)
    return BiasReport(R, se, cnt.astype(np.int64), int(cell.shape[0]))


def empirical_bias(
    strategy,
    channel: ChannelSpec,
    delta: float,
    trials: int,
    estimator: str | None = None,
    master_seed: int = 0,
    chunk: int = 8192,
) -> BiasReport:
    """Monte Carlo estimate of the per-cell bias ratio of a channel against ``strategy``.

    ``strategy`` is a :class:`~pql.learners.LearnerSpec`.  ``estimator`` is
    ``"exact"``, ``"gaussian"`` or ``"erasure"`` (default: the channel's own).
    The certificate is for this strategy only.
    """
    from pql import engine

    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    estimator = estimator or {
        ChannelKind.FULL: "exact",
        ChannelKind.GAUSSIAN: "gaussian",
        ChannelKind.ERASURE: "erasure",
    }[channel.kind]
    part = UniformPartition(delta, strategy.d)
    m = part.m
    cells, nums, dens = [], [], []
    for start in range(0, trials, chunk):
        idx = np.arange(start, min(trials, start + chunk), dtype=np.int64)
        g = engine.play_batch(strategy, channel, master_seed, idx)
        true_counts = engine.cell_counts(g, m, observed=False)
        est = engine.count_estimate(g, m, estimator)
        J = engine.target_cells(g.x, m)
        rows = np.arange(idx.shape[0])
        cells.append(J)
        nums.append(est[rows, J])
        dens.append(true_counts[rows, J])
    return ratio_by_cell(np.concatenate(cells), np.concatenate(nums), np.concatenate(dens), part.size)
