"""Adversary estimators.  They receive observations of the queries, never responses.

Randomised estimators take a :class:`~pql.rng.TrialStream` (draw 0 is the
selection uniform, draws ``1..d`` a fallback point) or a numpy ``Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from pql import kernels
from pql.cells import CellCounts, EmptyCountsError, _reject_transcript, tally_cells
from pql.learners import rb_query_count
from pql.model import (
    CellIndex,
    ConfigurationError,
    Hyperplane,
    QueryPoint,
    Target,
    UniformPartition,
    binary_expansion,
    cell_midpoint,
    log2_exact,
)
from pql.observation import BiasedCountEstimate, Observation
from pql.rng import TrialStream

ONE_MINUS = math.nextafter(1.0, 0.0)

__all__ = [
    "AdversaryOutput",
    "CellCounts",
    "EmptyCountsError",
    "tally_cells",
    "proportional_sample",
    "proportional_point",
    "last_query_attack",
    "uniform_random_attack",
    "rb_candidate_attack",
    "reconstruct_offset_bits",
]


@dataclass(frozen=True)
class AdversaryOutput:
    point: Target | None = None
    index: CellIndex | None = None


def _selection_uniform(rng) -> float:
    if isinstance(rng, TrialStream):
        return rng.uniform(0)
    return float(rng.random())


def _fallback_point(rng, d: int) -> tuple[float, ...]:
    if isinstance(rng, TrialStream):
        return tuple(rng.uniforms(d, start=1))
    return tuple(rng.random(d))


def _items(observation) -> tuple[list[tuple[int, object]], int]:
    """Normalise an Observation or a plain query sequence to ``(position, value)`` pairs."""
    _reject_transcript(observation)
    if isinstance(observation, Observation):
        return list(observation.items), observation.n
    vals = []
    for q in observation:
        vals.append(q.value if isinstance(q, QueryPoint) else q if isinstance(q, Hyperplane) else float(q))
    return list(enumerate(vals)), len(vals)


def proportional_sample(counts, rng, d: int = 1) -> CellIndex:
    """Cell ``j`` drawn with probability proportional to ``counts[j]``."""
    if isinstance(counts, (CellCounts, BiasedCountEstimate)):
        w = counts.weights
    else:
        w = np.asarray(counts, dtype=np.float64)
    M = w.shape[0]
    m = round(M ** (1.0 / d))
    if m ** d != M:
        raise ValueError(f"{M} cells do not form a {d}-dimensional grid")
    u = _selection_uniform(rng)
    j = int(kernels.proportional_pick(w.reshape(1, -1), np.array([u]))[0])
    if j < 0:
        raise EmptyCountsError("proportional sampling needs at least one counted query")
    return CellIndex.from_flat(j + 1, m, d)


def proportional_point(counts, delta: float, rng, d: int = 1) -> Target:
    """Midpoint of a proportionally sampled ``delta``-cell."""
    part = UniformPartition(delta, d)
    return cell_midpoint(part, proportional_sample(counts, rng, d))


def last_query_attack(observation) -> Target:
    """The final observed query, clipped into ``[0, 1)``."""
    items, _ = _items(observation)
    if not items:
        raise ValueError("last-query attack needs at least one observed query")
    v = items[-1][1]
    if isinstance(v, Hyperplane):
        raise ConfigurationError("last-query attack needs point queries")
    return Target((min(max(v, 0.0), ONE_MINUS),))


def uniform_random_attack(rng, d: int = 1) -> Target:
    """A uniform point of the cube; ignores the observation entirely."""
    return Target(_fallback_point(rng, d))


def rb_candidate_attack(observation, L: int, rng, d: int = 1) -> Target:
    """Guess one final-round replica uniformly.

    For point queries the final round is the last ``L`` positions; for
    d-dimensional hyperplane queries it is the last ``d * L`` positions, one
    axis block of ``L`` per coordinate, and a candidate is a sub-cube whose
    ``d`` offsets were all observed.
    """
    items, n = _items(observation)
    if n < d * L:
        raise ValueError(f"need at least {d * L} queries, got {n}")
    by_pos = dict(items)
    start = n - d * L
    cands = []
    for c in range(L):
        pos = [start + k * L + c for k in range(d)]
        if all(p in by_pos for p in pos):
            vals = [v.offset if isinstance(v, Hyperplane) else v for v in (by_pos[p] for p in pos)]
            cands.append(tuple(min(max(v, 0.0), ONE_MINUS) for v in vals))
    if not cands:
        raise EmptyCountsError("no complete final-round candidate observed")
    k = len(cands)
    u = _selection_uniform(rng)
    return Target(cands[min(math.floor(u * k), k - 1)])


def reconstruct_offset_bits(observation, L: int, epsilon: float) -> tuple[int, ...]:
    """Bits ``log L + 1 .. log(1/epsilon)`` of the target read off a replicated-bisection run.

    The final round's offset ``D`` is the centre of the width-``2 epsilon``
    bracket left before the last (unobservable) response.  Scaled by ``L`` it
    has ``K`` bits: the first ``K - 1`` are the target's; the last is always
    1 and hides which half of the bracket the target is in.
    """
    items, n = _items(observation)
    a = log2_exact(L, "L")
    k = log2_exact(1.0 / epsilon, "1/epsilon")
    if n != rb_query_count(epsilon, L) or len(items) != n:
        raise ValueError("observation is not a complete replicated-bisection run for these parameters")
    w = 1.0 / L
    final = [v for _, v in items[n - L :]]
    D = final[0]
    if any(not isinstance(v, float) for v in final) or any(final[l] - l * w != D for l in range(L)):
        raise ValueError("final round is not a symmetric replicated-bisection round")
    K = k - a
    y = D * L
    if not 0.0 < y < 1.0:
        raise ValueError("final-round offset outside its sub-interval")
    return binary_expansion(y, K)
