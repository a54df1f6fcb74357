"""Plain-text sweep grids.

One ``key = value[, value ...]`` assignment per line; ``#`` starts a comment.
A value ``2^a..2^b`` expands to every power of two between the two
exponents, inclusive, in the order written.  The grid is the Cartesian
product of all list-valued keys.  See ``docs/sweep-format.md``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from pql.harness import ADVERSARIES, LEARNER_CHOICES, ExperimentConfig
from pql.model import ConfigurationError
from pql.observation import ChannelSpec

GRID_KEYS = ("learner", "channel", "adversary", "epsilon", "delta", "L", "d")
SCALAR_KEYS = ("trials", "seed", "invalid")
DEFAULTS = {
    "learner": ["rb"],
    "channel": [ChannelSpec()],
    "adversary": ["rb-candidate"],
    "L": [1],
    "d": [1],
    "trials": [10_000],
    "seed": [0],
    "invalid": ["error"],
}
_POW = re.compile(r"^2\^(-?\d+)$")
_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


class SweepConfigError(ConfigurationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_number(text: str) -> float:
    """A decimal literal or ``2^k`` (``k`` may be negative)."""
    t = text.strip()
    m = _POW.match(t)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        return float(t)
    except ValueError:
        raise ConfigurationError(f"not a number: {text!r}") from None


def parse_int(text: str) -> int:
    v = parse_number(text)
    if v != int(v):
        raise ConfigurationError(f"not an integer: {text!r}")
    return int(v)


def _expand_range(text: str) -> list[float]:
    a, _, b = text.partition("..")
    ma, mb = _POW.match(a.strip()), _POW.match(b.strip())
    if not (ma and mb):
        raise ConfigurationError(f"ranges need the form 2^a..2^b, got {text!r}")
    lo, hi = int(ma.group(1)), int(mb.group(1))
    step = 1 if hi >= lo else -1
    return [2.0 ** e for e in range(lo, hi + step, step)]


def _convert(key: str, item: str):
    if key in ("learner", "adversary", "invalid"):
        v = item.strip().lower()
        allowed = {"learner": LEARNER_CHOICES, "adversary": ADVERSARIES, "invalid": ("error", "skip")}[key]
        if v not in allowed:
            raise ConfigurationError(f"{key} must be one of {', '.join(allowed)}, got {item.strip()!r}")
        return [v]
    if key == "channel":
        return [ChannelSpec.parse(item)]
    if ".." in item:
        vals = _expand_range(item)
    else:
        vals = [parse_number(item)]
    if key in ("L", "d", "trials", "seed"):
        out = []
        for v in vals:
            if v != int(v):
                raise ConfigurationError(f"{key} must be an integer, got {item.strip()!r}")
            out.append(int(v))
        return out
    return vals


@dataclass
class SweepSpec:
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def get(self, key):
        return self.values.get(key, DEFAULTS.get(key))

    def configs(self) -> list[ExperimentConfig]:
        """Grid cells in Cartesian order, first key varying slowest."""
        for key in ("epsilon", "delta"):
            if key not in self.values:
                raise SweepConfigError(f"missing required key {key!r}")
        skip = self.get("invalid")[0] == "skip"
        trials, seed = self.get("trials")[0], self.get("seed")[0]
        out = []
        for combo in itertools.product(*(self.get(k) for k in GRID_KEYS)):
            learner, channel, adversary, eps, delta, L, d = combo
            try:
                out.append(ExperimentConfig.build(learner, eps, delta, L, d, adversary, channel, trials, seed))
            except ConfigurationError as e:
                if skip:
                    continue
                raise SweepConfigError(
                    f"invalid grid cell (learner={learner}, channel={channel.label}, adversary={adversary}, "
                    f"epsilon={eps!r}, delta={delta!r}, L={L}, d={d}): {e}"
                ) from None
        if not out:
            raise SweepConfigError("empty grid")
        return out


def parse_sweep(text: str) -> SweepSpec:
    spec = SweepSpec()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise SweepConfigError(f"expected 'key = value', got {raw.strip()!r}", no)
        key, rhs = m.group(1), m.group(2)
        if key not in GRID_KEYS + SCALAR_KEYS:
            raise SweepConfigError(f"unknown key {key!r}", no)
        if key in spec.values:
            raise SweepConfigError(f"duplicate key {key!r} (first set on line {spec.lines[key]})", no)
        items = [s for s in (p.strip() for p in rhs.split(","))]
        if not rhs.strip() or any(not s for s in items):
            raise SweepConfigError(f"empty value in {key!r}", no)
        vals = []
        try:
            for item in items:
                vals.extend(_convert(key, item))
        except ConfigurationError as e:
            raise SweepConfigError(str(e), no) from None
        if key in SCALAR_KEYS and len(vals) != 1:
            raise SweepConfigError(f"{key!r} takes a single value", no)
        spec.values[key] = vals
        spec.lines[key] = no
    if not spec.values:
        raise SweepConfigError("empty grid: no assignments found")
    return spec


def load_sweep(path: str) -> SweepSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_sweep(fh.read())
