"""Counting observed queries per cell of a uniform partition.

Points are binned into half-open cells.  A hyperplane counts for every
*closed* sub-cube it touches, so one hyperplane usually lands in many cells
and the total can exceed the number of queries.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pql import kernels
from pql.model import Hyperplane, QueryPoint, Transcript, UniformPartition


class EmptyCountsError(ValueError):
    """No observed query fell in any cell, so proportional sampling is undefined."""


@dataclass(frozen=True)
class CellCounts:
    """``counts[j]`` is the number of observed queries in (or meeting) cell ``j`` (0-based)."""

    counts: np.ndarray
    n: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or (c < 0).any():
            raise ValueError("counts must be a nonnegative vector")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def weights(self) -> np.ndarray:
        return self.counts.astype(np.float64)


def _reject_transcript(obj) -> None:
    if isinstance(obj, Transcript):
        raise TypeError(
            "adversaries see observations only; pass the queries through a channel first"
        )


def hyperplane_cell_mask(h: Hyperplane, m: int) -> np.ndarray:
    """Row-major boolean mask of closed sub-cubes met by ``h`` (corner-sign test)."""
    d = h.d
    c = np.arange(m + 1, dtype=np.float64) / m
    v = np.zeros((m + 1,) * d)
    for k, a in enumerate(h.normal):
        shape = [1] * d
        shape[k] = m + 1
        v = v + (a * c).reshape(shape)
    v = v - h.offset
    lo = hi = None
    for corner in np.ndindex(*(2,) * d):
        piece = v[tuple(slice(o, o + m) for o in corner)]
        lo = piece if lo is None else np.minimum(lo, piece)
        hi = piece if hi is None else np.maximum(hi, piece)
    return ((lo <= 0.0) & (hi >= 0.0)).reshape(-1)


def tally_values(values: Sequence[float], m: int) -> np.ndarray:
    """Counts of point values in ``m`` half-open cells; values outside ``[0, 1)`` drop."""
    v = np.asarray(list(values), dtype=np.float64).reshape(1, -1)
    return kernels.tally_points(v, np.ones(v.shape, dtype=bool), m)[0]


def tally_hyperplanes(planes: Sequence[Hyperplane], m: int, d: int) -> np.ndarray:
    planes = list(planes)
    for h in planes:
        if h.d != d:
            raise ValueError(f"hyperplane of dimension {h.d} in a {d}-d partition")
    axes = [h.axis_index for h in planes]
    if all(a is not None for a in axes):
        off = np.array([[h.offset for h in planes]], dtype=np.float64).reshape(1, -1)
        mask = np.ones(off.shape, dtype=bool)
        return kernels.tally_axis_hyperplanes(off, np.array(axes, dtype=np.int64), mask, m, d)[0]
    out = np.zeros(m ** d, dtype=np.int64)
    for h in planes:
        out += hyperplane_cell_mask(h, m)
    return out


def tally_cells(observation, delta: float, d: int = 1) -> CellCounts:
    """Count observed queries per ``delta``-cell.

    ``observation`` is an :class:`~pql.observation.Observation` or a plain
    sequence of queries (floats, :class:`QueryPoint` or :class:`Hyperplane`).
    """
    _reject_transcript(observation)
    part = UniformPartition(delta, d)
    m = part.m
    queries = list(observation.values()) if hasattr(observation, "values") else list(observation)
    n = getattr(observation, "n", len(queries))
    if not queries:
        return CellCounts(np.zeros(part.size, dtype=np.int64), n)
    if isinstance(queries[0], Hyperplane):
        return CellCounts(tally_hyperplanes(queries, m, d), n)
    if d != 1:
        raise ValueError("point queries need d = 1")
    vals = [q.value if isinstance(q, QueryPoint) else float(q) for q in queries]
    return CellCounts(tally_values(vals, m), n)
