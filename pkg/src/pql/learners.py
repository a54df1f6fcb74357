"""Learner strategies: bisection and Replicated Bisection (1-D and d-dimensional).

Strategies only ever see responses.  ``*_run`` wraps a target into an exact
response oracle and plays the strategy against it, producing a
:class:`~pql.model.Transcript`.

Conventions worth knowing:

* A response of 1 means ``x <= q``, so after it the bracket is ``[lo, q]``;
  a 0 gives ``(q, hi]``.  The learner tracks the closed bracket.
* Within a sub-interval of width ``w`` the round-``k`` step is
  ``w / 2**(k + 2)``, starting from ``D_0 = w / 2``.  This keeps every query
  strictly inside its sub-interval and ends with a bracket of width ``epsilon``.
* The estimate is the midpoint of the final bracket.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from pql.model import (
    BisectionState,
    ConfigurationError,
    Hyperplane,
    QueryPoint,
    Target,
    TargetLike,
    Transcript,
    log2_exact,
    respond_1d,
    respond_hyperplane,
)


class LearnerKind(str, enum.Enum):
    BISECTION = "bisect"
    REPLICATED = "rb"
    REPLICATED_ND = "rbd"


@dataclass(frozen=True)
class LearnerSpec:
    kind: LearnerKind
    epsilon: float
    L: int = 1
    d: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", LearnerKind(self.kind))
        self.validate()

    def validate(self) -> None:
        k = log2_exact(1.0 / self.epsilon, "1/epsilon")
        if k < 1:
            raise ConfigurationError(f"epsilon must be < 1, got {self.epsilon!r}")
        if self.L < 1 or int(self.L) != self.L:
            raise ConfigurationError(f"L must be a positive integer, got {self.L!r}")
        if self.kind is LearnerKind.BISECTION:
            if self.d != 1:
                raise ConfigurationError("bisection is one-dimensional; use rbd for d > 1")
            if self.L != 1:
                raise ConfigurationError("bisection offers no privacy replicas; use L = 1 or the rb learner")
        elif self.kind is LearnerKind.REPLICATED:
            if self.d != 1:
                raise ConfigurationError("rb is one-dimensional; use rbd for d > 1")
            a = log2_exact(self.L, "L")
            if a >= k:
                raise ConfigurationError(f"need epsilon < 1/L, got epsilon={self.epsilon}, L={self.L}")
        else:
            if self.d < 1:
                raise ConfigurationError("d must be >= 1")
            m = side_count(self.L, self.d)
            if m < 2:
                raise ConfigurationError("L^(1/d) must be an integer >= 2")
            if log2_exact(m, "L^(1/d)") >= k:
                raise ConfigurationError(
                    f"need epsilon < L^(-1/d), got epsilon={self.epsilon}, L={self.L}, d={self.d}"
                )

    @property
    def log_inv_eps(self) -> int:
        return log2_exact(1.0 / self.epsilon)

    @property
    def budget(self) -> int:
        if self.kind is LearnerKind.BISECTION:
            return self.log_inv_eps
        if self.kind is LearnerKind.REPLICATED:
            return rb_query_count(self.epsilon, self.L)
        return rbd_query_count(self.epsilon, self.L, self.d)

    def run(self, x: TargetLike, seed: float = 0.0) -> Transcript:
        if self.kind is LearnerKind.BISECTION:
            return bisection_run(x, self.epsilon, seed)
        if self.kind is LearnerKind.REPLICATED:
            return rb_run(x, self.epsilon, self.L, seed)
        return rbd_run(x, self.epsilon, self.L, self.d, seed)


def side_count(L: int, d: int) -> int:
    """Integer ``L^(1/d)`` or :class:`ConfigurationError`."""
    m = round(L ** (1.0 / d))
    for cand in (m - 1, m, m + 1):
        if cand >= 1 and cand ** d == L:
            return cand
    raise ConfigurationError(f"L^(1/d) is not an integer for L={L}, d={d}")


Oracle = Callable[[float], int]


def _replicated_bisection(epsilon: float, L: int, oracle: Oracle, trace: bool):
    """Play 1-D Replicated Bisection against ``oracle``; L=1 is plain bisection."""
    w = 1.0 / L
    K = log2_exact(1.0 / (L * epsilon), "1/(L*epsilon)")
    queries: list[float] = []
    responses: list[int] = []
    # Phase 1: non-adaptive partition points 1/L, ..., 1 - 1/L
    below = 0
    for i in range(1, L):
        q = i * w
        r = oracle(q)
        queries.append(q)
        responses.append(r)
        below += 1 - r
    l_star = below + 1
    base = (l_star - 1) * w

    lo, hi, D = 0.0, w, w / 2
    states = []
    for k in range(K):
        if trace:
            states.append(BisectionState(k, l_star, lo, hi, D))
        r_star = 0
        for l in range(1, L + 1):
            q = (l - 1) * w + D
            r = oracle(q)
            queries.append(q)
            responses.append(r)
            if l == l_star:
                r_star = r
        step = w / 2.0 ** (k + 2)
        if r_star:
            hi = D
            D -= step
        else:
            lo = D
            D += step
    if trace:
        states.append(BisectionState(K, l_star, lo, hi, D))
    estimate = base + (lo + hi) / 2
    return queries, responses, estimate, states


def bisection_run(x: TargetLike, epsilon: float, seed: float = 0.0, trace: bool = False) -> Transcript:
    """Plain bisection with ``log2(1/epsilon)`` midpoint queries."""
    spec = LearnerSpec(LearnerKind.BISECTION, epsilon)
    target = Target.of(x)
    qs, rs, est, states = _replicated_bisection(epsilon, 1, lambda q: respond_1d(target, q), trace)
    return Transcript(
        tuple(QueryPoint(q) for q in qs), tuple(rs), seed, Target((est,)), spec.budget, tuple(states)
    )


def rb_run(x: TargetLike, epsilon: float, L: int, seed: float = 0.0, trace: bool = False) -> Transcript:
    """Replicated Bisection: ``L - 1`` partition queries, then ``K`` rounds of ``L``.

    ``seed`` is recorded but unused; the strategy is deterministic given x.
    """
    spec = LearnerSpec(LearnerKind.REPLICATED, epsilon, L)
    target = Target.of(x)
    qs, rs, est, states = _replicated_bisection(epsilon, L, lambda q: respond_1d(target, q), trace)
    return Transcript(
        tuple(QueryPoint(q) for q in qs), tuple(rs), seed, Target((est,)), spec.budget, tuple(states)
    )


def rb_query_count(epsilon: float, L: int) -> int:
    """``(L - 1) + L log2(1/(L epsilon))``."""
    k = log2_exact(1.0 / epsilon, "1/epsilon")
    a = log2_exact(L, "L")
    if a >= k:
        raise ConfigurationError(f"need epsilon < 1/L, got epsilon={epsilon}, L={L}")
    return (L - 1) + L * (k - a)


def rbd_query_count(epsilon: float, L: int, d: int) -> int:
    """``d L^(1/d) + L d log2(L^(-1/d) / epsilon)``."""
    m = side_count(L, d)
    k = log2_exact(1.0 / epsilon, "1/epsilon")
    b = log2_exact(m, "L^(1/d)")
    if b >= k:
        raise ConfigurationError("need epsilon < L^(-1/d)")
    return d * m + L * d * (k - b)


def subcube_components(L: int, d: int) -> list[tuple[int, ...]]:
    """1-based sub-cube indices in row-major order (last axis fastest)."""
    m = side_count(L, d)
    out = []
    for flat in range(L):
        comps = []
        rest = flat
        for _ in range(d):
            rest, r = divmod(rest, m)
            comps.append(r + 1)
        out.append(tuple(reversed(comps)))
    return out


def rbd_run(x: TargetLike, epsilon: float, L: int, d: int, seed: float = 0.0) -> Transcript:
    """d-dimensional Replicated Bisection with axis-aligned hyperplane queries.

    Phase 1 asks ``x_k <= j/m`` for ``j = 0..m-1`` on every axis (``m = L^(1/d)``).
    Phase 2 runs ``log2(1/(m epsilon))`` rounds per axis, axes interleaved; each
    round emits one hyperplane per sub-cube (row-major), all at the same offset
    relative to their sub-cube.
    """
    spec = LearnerSpec(LearnerKind.REPLICATED_ND, epsilon, L, d)
    target = Target.of(x)
    if target.d != d:
        raise ConfigurationError(f"target dimension {target.d} != d={d}")
    m = side_count(L, d)
    w = 1.0 / m
    K = log2_exact(w / epsilon)
    queries: list[Hyperplane] = []
    responses: list[int] = []

    def ask(h: Hyperplane) -> int:
        r = respond_hyperplane(target, h)
        queries.append(h)
        responses.append(r)
        return r

    star = []
    for k in range(d):
        below = 0
        for j in range(m):
            below += 1 - ask(Hyperplane.axis(k, d, j * w))
        star.append(max(below, 1))
    cubes = subcube_components(L, d)
    star_flat = cubes.index(tuple(star))

    lo = [0.0] * d
    hi = [w] * d
    D = [w / 2] * d
    for rnd in range(K):
        step = w / 2.0 ** (rnd + 2)
        for k in range(d):
            r_star = 0
            for c, comps in enumerate(cubes):
                r = ask(Hyperplane.axis(k, d, (comps[k] - 1) * w + D[k]))
                if c == star_flat:
                    r_star = r
            if r_star:
                hi[k] = D[k]
                D[k] -= step
            else:
                lo[k] = D[k]
                D[k] += step
    est = tuple((star[k] - 1) * w + (lo[k] + hi[k]) / 2 for k in range(d))
    return Transcript(tuple(queries), tuple(responses), seed, Target(est), spec.budget)


def learner_accuracy_check(transcript: Transcript, x: TargetLike, epsilon: float, norm: str = "inf") -> bool:
    """Whether the estimate is within ``epsilon/2`` of ``x`` (absolute value / max-norm)."""
    if norm not in ("inf", "abs", "max"):
        raise ValueError(f"unknown norm {norm!r}")
    est = transcript.learner_estimate.coords
    tgt = Target.of(x).coords
    if len(est) != len(tgt):
        raise ValueError("estimate and target differ in dimension")
    return max(abs(a - b) for a, b in zip(est, tgt)) <= epsilon / 2


def estimate_error(transcript: Transcript, x: TargetLike) -> float:
    tgt = Target.of(x).coords
    return max(abs(a - b) for a, b in zip(transcript.learner_estimate.coords, tgt))
