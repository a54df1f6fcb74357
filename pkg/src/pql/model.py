"""Domain types, the exact response model, uniform partitions and entropy helpers.

Every other module builds on these.  All values are immutable; all functions
are pure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union


class ConfigurationError(ValueError):
    """Raised when parameters violate a strategy's or partition's preconditions."""


class MalformedQueryError(ValueError):
    """Raised when a query does not match the dimension of the target."""


@dataclass(frozen=True)
class Target:
    """A point of the unit cube ``[0, 1)^d``."""

    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not coords:
            raise ValueError("target needs at least one coordinate")
        for c in coords:
            if not 0.0 <= c < 1.0:
                raise ValueError(f"target coordinate {c!r} outside [0, 1)")
        object.__setattr__(self, "coords", coords)

    @property
    def d(self) -> int:
        return len(self.coords)

    @classmethod
    def of(cls, value: "TargetLike") -> "Target":
        if isinstance(value, Target):
            return value
        if isinstance(value, (int, float)):
            return cls((float(value),))
        return cls(tuple(value))


TargetLike = Union[Target, float, Sequence[float]]


@dataclass(frozen=True)
class QueryPoint:
    value: float

    def __post_init__(self):
        if not 0.0 <= self.value < 1.0:
            raise ValueError(f"query {self.value!r} outside [0, 1)")


@dataclass(frozen=True)
class Hyperplane:
    """Affine hyperplane ``<normal, x> = offset``; the response is 1 on the ``<=`` side."""

    normal: tuple[float, ...]
    offset: float

    def __post_init__(self):
        normal = tuple(float(a) for a in self.normal)
        if not normal or all(a == 0.0 for a in normal):
            raise ValueError("hyperplane normal must be nonzero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def d(self) -> int:
        return len(self.normal)

    @classmethod
    def axis(cls, k: int, d: int, offset: float) -> "Hyperplane":
        """The hyperplane ``x_k = offset`` (``k`` is 0-based)."""
        normal = [0.0] * d
        normal[k] = 1.0
        return cls(tuple(normal), offset)

    @property
    def axis_index(self) -> int | None:
        """0-based axis if this is a unit-normal axis-aligned hyperplane, else None."""
        nz = [k for k, a in enumerate(self.normal) if a != 0.0]
        if len(nz) == 1 and self.normal[nz[0]] == 1.0:
            return nz[0]
        return None


@dataclass(frozen=True)
class BisectionState:
    """Bracket of one replicated-bisection round, in sub-interval coordinates.

    ``lo``/``hi`` are offsets from the left end of sub-interval ``l_star``;
    ``offset`` is the round's query offset ``D_k``.
    """

    k: int
    l_star: int
    lo: float
    hi: float
    offset: float


@dataclass(frozen=True)
class Transcript:
    """Full record of one game as seen by the learner."""

    queries: tuple
    responses: tuple[int, ...]
    seed: float
    learner_estimate: Target
    budget: int
    states: tuple[BisectionState, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if len(self.queries) != len(self.responses):
            raise ValueError("queries and responses differ in length")
        if len(self.queries) != self.budget:
            raise ValueError(
                f"transcript has {len(self.queries)} queries, budget is {self.budget}"
            )

    @property
    def n(self) -> int:
        return len(self.queries)

    def query_values(self) -> list[float]:
        """Query locations for 1-D transcripts."""
        return [q.value if isinstance(q, QueryPoint) else float(q) for q in self.queries]


def respond_1d(x: TargetLike, q: float | QueryPoint) -> int:
    """Exact response ``I(x <= q)``."""
    xv = Target.of(x).coords
    if len(xv) != 1:
        raise MalformedQueryError("point query against a multi-dimensional target")
    qv = q.value if isinstance(q, QueryPoint) else float(q)
    return 1 if xv[0] <= qv else 0


def respond_hyperplane(x: TargetLike, h: Hyperplane) -> int:
    """Exact response ``I(<normal, x> <= offset)``."""
    xv = Target.of(x).coords
    if len(xv) != h.d:
        raise MalformedQueryError(
            f"hyperplane of dimension {h.d} against target of dimension {len(xv)}"
        )
    dot = 0.0
    for a, c in zip(h.normal, xv):
        dot += a * c
    return 1 if dot <= h.offset else 0


def _cells_per_axis(s: float) -> int:
    if not 0.0 < s <= 1.0:
        raise ConfigurationError(f"cell width {s!r} not in (0, 1]")
    m = round(1.0 / s)
    if m < 1 or abs(1.0 / s - m) > 1e-9 * m:
        raise ConfigurationError(f"1/s must be a positive integer, got s={s!r}")
    return m


@dataclass(frozen=True)
class UniformPartition:
    """The s-uniform partition of ``[0, 1)^d`` into half-open cubes of edge ``s``."""

    s: float
    d: int = 1

    def __post_init__(self):
        _cells_per_axis(self.s)
        if self.d < 1:
            raise ConfigurationError("dimension must be >= 1")

    @property
    def m(self) -> int:
        """Cells per axis, ``1/s``."""
        return _cells_per_axis(self.s)

    @property
    def size(self) -> int:
        return self.m ** self.d


@dataclass(frozen=True)
class CellIndex:
    """1-based flattened index (row-major over ``components``) plus per-axis indices."""

    index: int
    components: tuple[int, ...]

    @classmethod
    def from_components(cls, components: Sequence[int], m: int) -> "CellIndex":
        comps = tuple(int(c) for c in components)
        flat = 0
        for c in comps:
            if not 1 <= c <= m:
                raise ConfigurationError(f"cell component {c} outside 1..{m}")
            flat = flat * m + (c - 1)
        return cls(flat + 1, comps)

    @classmethod
    def from_flat(cls, index: int, m: int, d: int) -> "CellIndex":
        if not 1 <= index <= m ** d:
            raise ConfigurationError(f"cell index {index} outside 1..{m ** d}")
        rest = index - 1
        comps = []
        for _ in range(d):
            rest, r = divmod(rest, m)
            comps.append(r + 1)
        return cls(index, tuple(reversed(comps)))


def axis_cell(v: float, m: int) -> int:
    """0-based cell of ``v`` in ``[0, 1)`` split into ``m`` cells ``[i/m, (i+1)/m)``.

    The floor is corrected against the same ``i/m`` boundaries that
    :func:`cell_bounds` reports, so the two always agree.
    """
    i = math.floor(v * m)
    if i > m - 1:
        i = m - 1
    if i < 0:
        i = 0
    if v < i / m:
        i -= 1
    elif i + 1 < m and v >= (i + 1) / m:
        i += 1
    return i


def cell_index(p: UniformPartition, x: TargetLike) -> CellIndex:
    """Index ``J(s, x)`` of the cell containing ``x``."""
    coords = Target.of(x).coords
    if len(coords) != p.d:
        raise MalformedQueryError(f"target of dimension {len(coords)} in a {p.d}-d partition")
    m = p.m
    return CellIndex.from_components([axis_cell(c, m) + 1 for c in coords], m)


def cell_bounds(p: UniformPartition, j: CellIndex | int) -> tuple[tuple[float, float], ...]:
    """Half-open box ``[(l_k - 1) s, l_k s)`` per axis, as ``((lo, hi), ...)``."""
    m = p.m
    if isinstance(j, int):
        j = CellIndex.from_flat(j, m, p.d)
    if len(j.components) != p.d:
        raise ConfigurationError("cell index dimension does not match partition")
    out = []
    for c in j.components:
        if not 1 <= c <= m:
            raise ConfigurationError(f"cell component {c} outside 1..{m}")
        out.append(((c - 1) / m, c / m))
    return tuple(out)


def cell_midpoint(p: UniformPartition, j: CellIndex | int) -> Target:
    return Target(tuple((lo + hi) / 2 for lo, hi in cell_bounds(p, j)))


def binary_entropy(p: float) -> float:
    """Entropy in bits of a Bernoulli(p) variable, with ``h(0) = h(1) = 0``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def binary_expansion(x: float, n: int) -> tuple[int, ...]:
    """First ``n`` bits ``u`` of ``x`` with ``sum u_i 2^-i <= x < sum u_i 2^-i + 2^-n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= x < 1.0:
        raise ValueError(f"{x!r} outside [0, 1)")
    # exact: multiplying a double by 2 never rounds
    bits = []
    r = float(x)
    for _ in range(n):
        r *= 2.0
        if r >= 1.0:
            bits.append(1)
            r -= 1.0
        else:
            bits.append(0)
    return tuple(bits)


def from_bits(bits: Sequence[int]) -> float:
    """``sum u_i 2^-i`` for a finite bit vector."""
    return sum(b * 2.0 ** -(i + 1) for i, b in enumerate(bits))


def log2_exact(v: float, what: str = "value") -> int:
    """``log2(v)`` for an exact power of two, else :class:`ConfigurationError`."""
    if v <= 0:
        raise ConfigurationError(f"{what} must be positive, got {v!r}")
    mant, exp = math.frexp(v)
    if mant != 0.5:
        raise ConfigurationError(f"{what} must be an integral power of 2, got {v!r}")
    return exp - 1
