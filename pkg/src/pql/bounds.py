"""Closed-form query-complexity bounds and the hyperplane transversality oracle.

All logarithms are base 2.  Values are real numbers, never rounded.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from pql import kernels
from pql.model import ConfigurationError, Hyperplane, binary_entropy


def _check_unit(name: str, v: float) -> None:
    if not 0.0 < v < 1.0:
        raise ConfigurationError(f"{name} must be in (0, 1), got {v!r}")


def upper_bound_1d(epsilon: float, L: int) -> float:
    """``L log(1/eps) - L(log L - 1) - 1``, the replicated-bisection query count."""
    _check_unit("epsilon", epsilon)
    if L < 1:
        raise ConfigurationError("L must be >= 1")
    return L * math.log2(1 / epsilon) - L * (math.log2(L) - 1) - 1


def lower_bound_1d(epsilon: float, delta: float, L: int) -> float:
    """``L log(1/eps) - L log(2/delta) - 3 L log log(delta/eps)``; may be negative."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    if delta / epsilon <= 2:
        raise ConfigurationError("need delta/epsilon > 2 for log log(delta/epsilon)")
    return (
        L * math.log2(1 / epsilon)
        - L * math.log2(2 / delta)
        - 3 * L * math.log2(math.log2(delta / epsilon))
    )


def discrete_lower(epsilon: float, nu: float, delta: float, L: int) -> float:
    """``L[(1 - nu) log(delta/eps) - h(nu)]`` for the discrete game."""
    if not 0.0 <= nu <= 1.0:
        raise ConfigurationError("nu must be in [0, 1]")
    if not (epsilon > 0 and delta > 0):
        raise ConfigurationError("epsilon and delta must be positive")
    return L * ((1 - nu) * math.log2(delta / epsilon) - binary_entropy(nu))


def localized_lower(xi: float, ratio_delta_eps: float) -> float:
    """``(1 - xi) log(ratio) - h(xi)``: expected queries needed inside the target's cell."""
    if not 0.0 <= xi <= 1.0:
        raise ConfigurationError("xi must be in [0, 1]")
    if not ratio_delta_eps > 1:
        raise ConfigurationError("ratio delta/epsilon must exceed 1")
    return (1 - xi) * math.log2(ratio_delta_eps) - binary_entropy(xi)


def best_beta(epsilon: float, delta: float) -> float:
    return math.log2(delta / epsilon)


def reduction_lower(epsilon: float, delta: float, L: int, beta: float) -> float:
    """Continuous-to-discrete reduction: ``discrete_lower(beta eps, 1/beta, delta, L)``."""
    if not 2 <= beta <= delta / epsilon:
        raise ConfigurationError(f"beta must be in [2, delta/epsilon], got {beta!r}")
    q = delta / (beta * epsilon)
    if abs(q - round(q)) > 1e-9 * max(1.0, q):
        raise ConfigurationError("delta must be an integer multiple of beta * epsilon")
    return discrete_lower(beta * epsilon, 1 / beta, delta, L)


def admissible_beta(epsilon: float, delta: float) -> float:
    """``best_beta`` when it divides ``delta/epsilon``, else the largest power of two below it."""
    b = best_beta(epsilon, delta)
    q = delta / (b * epsilon) if b > 0 else 0.0
    if b >= 2 and abs(q - round(q)) <= 1e-9 * max(1.0, q):
        return b
    return 2.0 ** max(1, math.floor(math.log2(max(b, 2.0))))


def reduction_beta_grid(epsilon: float, delta: float) -> list[float]:
    """Admissible powers of two ``beta`` in ``[2, delta/epsilon]``."""
    top = math.floor(math.log2(delta / epsilon) + 1e-12)
    return [2.0 ** j for j in range(1, top + 1)]


def gamma_d(d: int) -> float:
    """Transversality constant ``pi^(d/2) d^((d+1)/2) / Gamma((d+1)/2)``."""
    if d < 1:
        raise ConfigurationError("d must be >= 1")
    return math.exp(
        (d / 2) * math.log(math.pi) + ((d + 1) / 2) * math.log(d) - math.lgamma((d + 1) / 2)
    )


def transversality_bound(d: int, delta: float) -> float:
    """Upper bound ``g_d (1/delta + 1)^(d-1)`` on the sub-cubes one hyperplane meets."""
    if not 0.0 < delta <= 1.0:
        raise ConfigurationError(f"delta must be in (0, 1], got {delta!r}")
    return gamma_d(d) * (1 / delta + 1) ** (d - 1)


def c_d(d: int) -> float:
    """The constant ``g_d 2^(d-1)``, valid for every ``delta <= 1``."""
    return gamma_d(d) * 2 ** (d - 1)


def upper_bound_ddim(epsilon: float, L: int, d: int) -> float:
    """``d L log(1/eps) - L log L + d L^(1/d)``."""
    _check_unit("epsilon", epsilon)
    return d * L * math.log2(1 / epsilon) - L * math.log2(L) + d * L ** (1 / d)


def lower_bound_ddim(epsilon: float, delta: float, L: int, d: int) -> float:
    """``c1 delta^(d-1) L log(delta/eps) - c2 L`` with ``c1 = (d/2)/c_d``, ``c2 = (d+2)/c_d``."""
    _check_unit("epsilon", epsilon)
    _check_unit("delta", delta)
    c = c_d(d)
    return (d / 2) / c * delta ** (d - 1) * L * math.log2(delta / epsilon) - (d + 2) / c * L


def partial_obs_lower(epsilon: float, delta: float, L: int, zeta: float) -> float:
    """``(1 - zeta) * lower_bound_1d`` under a zeta-biased observation channel."""
    if not 0.0 <= zeta <= 1.0:
        raise ConfigurationError("zeta must be in [0, 1]")
    return (1 - zeta) * lower_bound_1d(epsilon, delta, L)


def count_intersections(h: Hyperplane, delta: float, d: int | None = None) -> int:
    """Exact number of closed ``delta``-sub-cubes meeting ``h``, by testing every cube.

    A cube is met when the signed values ``<a, corner> - b`` over its corners
    are not all of one strict sign.
    """
    d = h.d if d is None else d
    if h.d != d:
        raise ConfigurationError(f"hyperplane dimension {h.d} != d={d}")
    if d not in (1, 2, 3):
        raise ConfigurationError("the exact oracle supports d in {1, 2, 3}")
    m = round(1 / delta)
    if m < 1 or abs(1 / delta - m) > 1e-9 * m or m > 64:
        raise ConfigurationError("need 1/delta an integer <= 64")
    count = 0
    for cell in itertools.product(range(m), repeat=d):
        lo = math.inf
        hi = -math.inf
        for corner in itertools.product((0, 1), repeat=d):
            s = 0.0
            for a, i, o in zip(h.normal, cell, corner):
                s = s + a * ((i + o) / m)
            s = s - h.offset
            lo = min(lo, s)
            hi = max(hi, s)
        if lo <= 0.0 <= hi:
            count += 1
    return count


def count_intersections_batch(normals, offsets, delta: float) -> np.ndarray:
    """Vectorised :func:`count_intersections` for many hyperplanes."""
    m = round(1 / delta)
    return kernels.hyperplane_cell_hits(np.asarray(normals, dtype=np.float64), np.asarray(offsets, dtype=np.float64), m)


def random_hyperplanes(count: int, d: int, rng: np.random.Generator):
    """Gaussian normals with offsets spread so every plane passes through the cube's hull."""
    A = rng.standard_normal((count, d))
    lo = np.minimum(A, 0).sum(axis=1)
    hi = np.maximum(A, 0).sum(axis=1)
    b = lo + rng.random(count) * (hi - lo)
    return A, b


@dataclass(frozen=True)
class BoundReport:
    epsilon: float
    delta: float
    L: int
    d: int = 1
    upper: float | None = None
    lower: float | None = None
    discrete: float | None = None
    reduction: float | None = None
    partial: float | None = None
    nu: float | None = None
    beta: float | None = None
    zeta: float | None = None
    warnings: tuple[str, ...] = field(default=())

    @property
    def consistent(self) -> bool:
        if self.upper is None or self.lower is None:
            return True
        return self.lower <= self.upper


def hypothesis_warnings(epsilon: float, delta: float, L: int, d: int = 1) -> list[str]:
    out = []
    if not epsilon < delta / 4:
        out.append(f"hypothesis epsilon < delta/4 fails ({epsilon!r} >= {delta / 4!r})")
    side = L ** (-1 / d)
    if not delta < side:
        what = "1/L" if d == 1 else "L^(-1/d)"
        out.append(f"hypothesis delta < {what} fails ({delta!r} >= {side!r})")
    return out


def bound_report(
    epsilon: float,
    delta: float,
    L: int,
    d: int = 1,
    nu: float | None = None,
    beta: float | None = None,
    zeta: float | None = None,
) -> BoundReport:
    """Every applicable bound for one parameter set; failed hypotheses become warnings."""
    warns = hypothesis_warnings(epsilon, delta, L, d)

    def attempt(fn, *args):
        try:
            return fn(*args)
        except ConfigurationError as e:
            warns.append(f"{fn.__name__}: {e}")
            return None

    if d == 1:
        upper = attempt(upper_bound_1d, epsilon, L)
        lower = attempt(lower_bound_1d, epsilon, delta, L)
    else:
        upper = attempt(upper_bound_ddim, epsilon, L, d)
        lower = attempt(lower_bound_ddim, epsilon, delta, L, d)
    discrete = attempt(discrete_lower, epsilon, nu, delta, L) if nu is not None else None
    reduction = None
    if d == 1:
        b = beta if beta is not None else admissible_beta(epsilon, delta)
        reduction = attempt(reduction_lower, epsilon, delta, L, b)
        beta = b
    partial = attempt(partial_obs_lower, epsilon, delta, L, zeta) if zeta is not None and d == 1 else None
    return BoundReport(epsilon, delta, L, d, upper, lower, discrete, reduction, partial, nu, beta, zeta, tuple(warns))
