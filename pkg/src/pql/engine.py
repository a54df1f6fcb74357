"""Vectorised game mechanics over a block of trials.

Each function reproduces, for many trials at once, exactly what the
per-trial object path in :mod:`pql.harness` computes: same random draws,
same floating-point operations.  The harness tests hold the two together.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pql import kernels
from pql.learners import LearnerKind, LearnerSpec, side_count
from pql.model import ConfigurationError, log2_exact
from pql.observation import ChannelKind, ChannelSpec, rescale_counts
from pql.rng import Tag, stream_keys, to_open_unit, to_unit
from scipy.special import ndtri

ONE_MINUS = float(np.nextafter(1.0, 0.0))


@dataclass
class GameBatch:
    """Learner and channel outputs for trials ``idx``.

    ``queries`` holds point values (``axes is None``) or axis-hyperplane
    offsets with ``axes[i]`` the axis of query ``i``.
    """

    idx: np.ndarray
    x: np.ndarray
    estimate: np.ndarray
    queries: np.ndarray
    axes: np.ndarray | None
    observed: np.ndarray
    mask: np.ndarray

    @property
    def n(self) -> int:
        return self.queries.shape[1]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def draw_targets(master_seed: int, idx: np.ndarray, d: int) -> np.ndarray:
    keys = stream_keys(master_seed, idx, Tag.TARGET)
    return to_unit(kernels.raw_block(keys, 0, d))


def stream_uniforms(master_seed: int, idx: np.ndarray, tag: Tag, count: int, start: int = 0) -> np.ndarray:
    keys = stream_keys(master_seed, idx, tag)
    return to_unit(kernels.raw_block(keys, start, count))


def run_learner(spec: LearnerSpec, x: np.ndarray):
    """Batched learner: ``(queries, axes, estimates)``."""
    k = log2_exact(1.0 / spec.epsilon)
    if spec.kind is LearnerKind.BISECTION:
        Q, est = kernels.replicated_bisection(x[:, 0], 1, k)
        return Q, None, est[:, None]
    if spec.kind is LearnerKind.REPLICATED:
        K = k - log2_exact(spec.L)
        Q, est = kernels.replicated_bisection(x[:, 0], spec.L, K)
        return Q, None, est[:, None]
    m = side_count(spec.L, spec.d)
    K = k - log2_exact(m)
    return kernels.replicated_bisection_nd(x, m, K)


def apply_channel(channel: ChannelSpec, master_seed: int, idx: np.ndarray, queries: np.ndarray, points: bool):
    T, n = queries.shape
    if channel.kind is ChannelKind.FULL:
        return queries, np.ones((T, n), dtype=bool)
    keys = stream_keys(master_seed, idx, Tag.CHANNEL)
    raw = kernels.raw_block(keys, 0, n)
    if channel.kind is ChannelKind.GAUSSIAN:
        if not points:
            raise ConfigurationError("the gaussian channel perturbs point queries only")
        return queries + channel.sigma * ndtri(to_open_unit(raw)), np.ones((T, n), dtype=bool)
    return queries, to_unit(raw) < channel.p_obs


def play_batch(spec: LearnerSpec, channel: ChannelSpec, master_seed: int, idx: np.ndarray) -> GameBatch:
    idx = np.asarray(idx, dtype=np.int64)
    x = draw_targets(master_seed, idx, spec.d)
    Q, axes, est = run_learner(spec, x)
    obs, mask = apply_channel(channel, master_seed, idx, Q, axes is None)
    return GameBatch(idx, x, est, Q, axes, obs, mask)


def cell_counts(g: GameBatch, m: int, observed: bool = True) -> np.ndarray:
    """Per-trial query counts per cell: observed queries, or the true ones."""
    vals = g.observed if observed else g.queries
    mask = g.mask if observed else np.ones(g.queries.shape, dtype=bool)
    if g.axes is None:
        return kernels.tally_points(vals, mask, m)
    return kernels.tally_axis_hyperplanes(vals, g.axes, mask, m, g.d)


def count_estimate(g: GameBatch, m: int, estimator: str) -> np.ndarray:
    """Adversary-side count estimates; rows with nothing observed are all zero."""
    if estimator == "exact":
        return cell_counts(g, m, observed=False).astype(np.float64)
    counts = cell_counts(g, m, observed=True)
    if estimator == "gaussian":
        return counts.astype(np.float64)
    if estimator == "erasure":
        with np.errstate(invalid="ignore", divide="ignore"):
            est = rescale_counts(counts, g.n)
        return np.where(counts.sum(axis=1, keepdims=True) > 0, est, 0.0)
    raise ValueError(f"unknown estimator {estimator!r}")


def adversary_weights(g: GameBatch, m: int, channel: ChannelSpec) -> np.ndarray:
    counts = cell_counts(g, m, observed=True)
    if channel.kind is ChannelKind.ERASURE:
        with np.errstate(invalid="ignore", divide="ignore"):
            w = rescale_counts(counts, g.n)
        return np.where(counts.sum(axis=1, keepdims=True) > 0, w, 0.0)
    return counts.astype(np.float64)


def target_cells(x: np.ndarray, m: int) -> np.ndarray:
    """0-based flattened row-major cell of each target."""
    comps = kernels.axis_cells(x, m)
    flat = np.zeros(x.shape[0], dtype=np.int64)
    for k in range(x.shape[1]):
        flat = flat * m + comps[:, k]
    return flat


def cell_midpoints(flat: np.ndarray, m: int, d: int) -> np.ndarray:
    out = np.empty((flat.shape[0], d))
    rest = flat.copy()
    for k in range(d - 1, -1, -1):
        c = rest % m
        rest //= m
        out[:, k] = (c / m + (c + 1) / m) / 2
    return out


def _nth_true(mask: np.ndarray, choice: np.ndarray) -> np.ndarray:
    """Column of the ``choice[t]``-th True entry in each row (0-based)."""
    rank = np.cumsum(mask, axis=1) - 1
    hit = mask & (rank == choice[:, None])
    return np.argmax(hit, axis=1)


def adversary_points(
    kind: str, g: GameBatch, channel: ChannelSpec, master_seed: int, delta: float, L: int
) -> tuple[np.ndarray, np.ndarray]:
    """Adversary estimates ``[T, d]`` and a flag for trials that fell back to a uniform guess."""
    T, d = g.x.shape
    adv = stream_uniforms(master_seed, g.idx, Tag.ADVERSARY, d + 1)
    u, fallback_pt = adv[:, 0], adv[:, 1:]
    point = np.empty((T, d))
    fell = np.zeros(T, dtype=bool)
    if kind == "uniform":
        return fallback_pt.copy(), fell
    if kind == "proportional":
        m = round(1.0 / delta)
        pick = kernels.proportional_pick(adversary_weights(g, m, channel), u)
        fell = pick < 0
        point = cell_midpoints(np.maximum(pick, 0), m, d)
    elif kind == "last-query":
        if g.axes is not None:
            raise ConfigurationError("last-query attack needs point queries")
        any_obs = g.mask.any(axis=1)
        last = g.n - 1 - np.argmax(g.mask[:, ::-1], axis=1)
        point = np.clip(g.observed[np.arange(T), last], 0.0, ONE_MINUS)[:, None]
        fell = ~any_obs
    elif kind == "rb-candidate":
        if g.axes is None:
            tail = g.mask[:, g.n - L :]
            k = tail.sum(axis=1)
            choice = np.minimum(np.floor(u * k), np.maximum(k - 1, 0)).astype(np.int64)
            col = g.n - L + _nth_true(tail, choice)
            point = np.clip(g.observed[np.arange(T), col], 0.0, ONE_MINUS)[:, None]
            fell = k == 0
        else:
            start = g.n - d * L
            cols = start + np.arange(d)[:, None] * L + np.arange(L)[None, :]
            full = g.mask[:, cols].all(axis=1)
            k = full.sum(axis=1)
            choice = np.minimum(np.floor(u * k), np.maximum(k - 1, 0)).astype(np.int64)
            cube = _nth_true(full, choice)
            sel = cols[:, cube].T
            point = np.clip(np.take_along_axis(g.observed, sel, axis=1), 0.0, ONE_MINUS)
            fell = k == 0
    else:
        raise ConfigurationError(f"unknown adversary {kind!r}")
    point = np.where(fell[:, None], fallback_pt, point)
    return point, fell


def hits(estimate: np.ndarray, x: np.ndarray, radius: float) -> np.ndarray:
    return np.max(np.abs(estimate - x), axis=1) <= radius
