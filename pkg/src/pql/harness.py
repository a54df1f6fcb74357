"""Deterministic Monte Carlo runner for (learner, channel, adversary) games.

Every random quantity of trial ``i`` comes from counter-based streams keyed by
``(master_seed, i, tag)``, so results do not depend on how trials are grouped
or how many threads run them.  :func:`run_experiment` plays fixed-size blocks
of trials through the vectorised engine; :func:`run_trial` plays one trial
through the object-level API and must agree with it exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from pql import bounds, engine
from pql.adversaries import (
    last_query_attack,
    proportional_point,
    rb_candidate_attack,
    uniform_random_attack,
)
from pql.cells import CellCounts, EmptyCountsError, tally_cells
from pql.learners import LearnerKind, LearnerSpec, learner_accuracy_check
from pql.model import ConfigurationError, Target, UniformPartition
from pql.observation import (
    ChannelKind,
    ChannelSpec,
    erasure_count_estimate,
    gaussian_bias_bound,
    gaussian_count_estimate,
    observe,
)
from pql.rng import MASK, Tag, TrialStream

ADVERSARIES = ("proportional", "last-query", "uniform", "rb-candidate")
CHUNK = 4096
Z95 = statistics.NormalDist().inv_cdf(0.975)

CONFIG_COLUMNS = ("learner", "channel", "adversary", "epsilon", "delta", "L", "d", "trials", "master_seed")
RESULT_COLUMNS = (
    "accuracy_rate",
    "privacy_hit_rate",
    "ci_lo",
    "ci_hi",
    "mean_query_count",
    "upper_bound",
    "lower_bound",
)
COLUMNS = CONFIG_COLUMNS + RESULT_COLUMNS


class ExperimentError(RuntimeError):
    """Too many trials failed for the estimates to mean anything."""


@dataclass(frozen=True)
class ExperimentConfig:
    learner: LearnerSpec
    channel: ChannelSpec
    adversary: str
    delta: float
    trials: int
    master_seed: int = 0

    def __post_init__(self):
        if self.adversary not in ADVERSARIES:
            raise ConfigurationError(f"unknown adversary {self.adversary!r}; choose from {', '.join(ADVERSARIES)}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigurationError(f"trials must be a positive integer, got {self.trials!r}")
        if not 0 <= int(self.master_seed) <= MASK:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")
        UniformPartition(self.delta, self.d)
        if self.d > 1 and self.adversary == "last-query":
            raise ConfigurationError("last-query attack needs point queries (d = 1)")
        if self.d > 1 and self.channel.kind is ChannelKind.GAUSSIAN:
            raise ConfigurationError("the gaussian channel perturbs point queries only (d = 1)")

    @property
    def epsilon(self) -> float:
        return self.learner.epsilon

    @property
    def L(self) -> int:
        return self.learner.L

    @property
    def d(self) -> int:
        return self.learner.d

    @property
    def warnings(self) -> list[str]:
        return bounds.hypothesis_warnings(self.epsilon, self.delta, self.L, self.d)

    @classmethod
    def build(
        cls,
        learner: str = "rb",
        epsilon: float = 2.0 ** -12,
        delta: float = 2.0 ** -4,
        L: int = 1,
        d: int = 1,
        adversary: str = "rb-candidate",
        channel: ChannelSpec | str = "full",
        trials: int = 10_000,
        master_seed: int = 0,
    ) -> "ExperimentConfig":
        if isinstance(channel, str):
            channel = ChannelSpec.parse(channel)
        return cls(LearnerSpec(learner, epsilon, L, d), channel, adversary, delta, trials, master_seed)

    def with_trials(self, trials: int) -> "ExperimentConfig":
        return ExperimentConfig(self.learner, self.channel, self.adversary, self.delta, trials, self.master_seed)

    def config_row(self) -> dict:
        return {
            "learner": self.learner.kind.value,
            "channel": self.channel.label,
            "adversary": self.adversary,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "L": self.L,
            "d": self.d,
            "trials": self.trials,
            "master_seed": self.master_seed,
        }


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    x_star: Target
    learner_estimate: Target | None = None
    adversary_estimate: Target | None = None
    learner_hit: bool = False
    adversary_hit: bool = False
    query_count: int = 0
    cell_counts: CellCounts | None = field(default=None, repr=False)
    fallback: bool = False
    failed: str | None = None


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


@dataclass(frozen=True)
class SummaryStats:
    n_trials: int
    learner_hits: int
    adversary_hits: int
    total_queries: int
    fallbacks: int = 0
    failed: int = 0
    failure_reasons: tuple[str, ...] = ()

    @property
    def completed(self) -> int:
        return self.n_trials - self.failed

    @property
    def accuracy_rate(self) -> float:
        return self.learner_hits / self.completed

    @property
    def privacy_hit_rate(self) -> float:
        return self.adversary_hits / self.completed

    @property
    def accuracy_ci(self) -> tuple[float, float]:
        return wilson_interval(self.learner_hits, self.completed)

    @property
    def privacy_ci(self) -> tuple[float, float]:
        return wilson_interval(self.adversary_hits, self.completed)

    @property
    def privacy_stderr(self) -> float:
        p = self.privacy_hit_rate
        return math.sqrt(p * (1 - p) / self.completed)

    @property
    def mean_query_count(self) -> float:
        return self.total_queries / self.completed

    def merge(self, other: "SummaryStats") -> "SummaryStats":
        return SummaryStats(
            self.n_trials + other.n_trials,
            self.learner_hits + other.learner_hits,
            self.adversary_hits + other.adversary_hits,
            self.total_queries + other.total_queries,
            self.fallbacks + other.fallbacks,
            self.failed + other.failed,
            self.failure_reasons + other.failure_reasons,
        )


def _stream(config: ExperimentConfig, i: int, tag: Tag) -> TrialStream:
    return TrialStream(config.master_seed, i, tag)


def _attack(config: ExperimentConfig, obs, counts: CellCounts, rng: TrialStream) -> Target:
    kind = config.adversary
    d = config.d
    if kind == "uniform":
        return uniform_random_attack(rng, d)
    if kind == "proportional":
        if config.channel.kind is ChannelKind.ERASURE:
            est = erasure_count_estimate(obs, config.delta, config.channel.p_obs, obs.n, d)
        elif config.channel.kind is ChannelKind.GAUSSIAN:
            est = gaussian_count_estimate(obs, config.delta)
        else:
            est = counts
        return proportional_point(est, config.delta, rng, d)
    if kind == "last-query":
        if len(obs) == 0:
            raise EmptyCountsError("nothing observed")
        return last_query_attack(obs)
    return rb_candidate_attack(obs, config.L, rng, d)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialRecord:
    """One game through the object-level API.

    The adversary receives only the channel's output of the query list.
    """
    x = Target(tuple(_stream(config, trial_index, Tag.TARGET).uniforms(config.d)))
    try:
        y = _stream(config, trial_index, Tag.LEARNER).uniform(0)
        transcript = config.learner.run(x, seed=y)
        obs = observe(transcript.queries, config.channel, _stream(config, trial_index, Tag.CHANNEL))
        counts = tally_cells(obs, config.delta, config.d)
        rng = _stream(config, trial_index, Tag.ADVERSARY)
        fallback = False
        try:
            guess = _attack(config, obs, counts, rng)
        except EmptyCountsError:
            guess = uniform_random_attack(rng, config.d)
            fallback = True
    except (ConfigurationError, ValueError) as e:
        return TrialRecord(trial_index, x, failed=f"{type(e).__name__}: {e}")
    adv_err = max(abs(a - b) for a, b in zip(guess.coords, x.coords))
    return TrialRecord(
        trial_index,
        x,
        transcript.learner_estimate,
        guess,
        learner_accuracy_check(transcript, x, config.epsilon),
        adv_err <= config.delta / 2,
        transcript.n,
        counts,
        fallback,
    )


def summarize_records(records: Iterable[TrialRecord]) -> SummaryStats:
    out = SummaryStats(0, 0, 0, 0)
    for r in records:
        if r.failed is not None:
            out = out.merge(SummaryStats(1, 0, 0, 0, 0, 1, (r.failed,)))
        else:
            out = out.merge(
                SummaryStats(1, int(r.learner_hit), int(r.adversary_hit), r.query_count, int(r.fallback))
            )
    return out


def _run_block(config: ExperimentConfig, start: int, stop: int) -> SummaryStats:
    idx = np.arange(start, stop, dtype=np.int64)
    try:
        g = engine.play_batch(config.learner, config.channel, config.master_seed, idx)
        point, fell = engine.adversary_points(
            config.adversary, g, config.channel, config.master_seed, config.delta, config.L
        )
    except (ConfigurationError, ValueError):
        # replay one by one so each failing trial carries its own reason
        return summarize_records(run_trial(config, int(i)) for i in idx)
    lh = engine.hits(g.estimate, g.x, config.epsilon / 2)
    ah = engine.hits(point, g.x, config.delta / 2)
    return SummaryStats(len(idx), int(lh.sum()), int(ah.sum()), g.n * len(idx), int(fell.sum()))


def run_experiment(config: ExperimentConfig, workers: int = 1, chunk: int = CHUNK) -> SummaryStats:
    """All trials of ``config``; identical output for any ``workers``.

    Blocks are fixed by ``chunk`` alone and merged in block order with
    integer sums, so the reduction is exact.
    """
    if workers < 1:
        raise ConfigurationError("workers must be >= 1")
    spans = [(s, min(config.trials, s + chunk)) for s in range(0, config.trials, chunk)]
    if workers == 1:
        parts = [_run_block(config, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _run_block(config, *ab), spans))
    out = SummaryStats(0, 0, 0, 0)
    for p in parts:
        out = out.merge(p)
    if out.failed > 0.01 * out.n_trials:
        reason = out.failure_reasons[0] if out.failure_reasons else "unknown"
        raise ExperimentError(f"{out.failed} of {out.n_trials} trials failed; first: {reason}")
    return out


def bound_columns(config: ExperimentConfig) -> tuple[float, float]:
    """Reference upper and lower query-count bounds for ``config`` (nan when undefined)."""
    eps, delta, L, d = config.epsilon, config.delta, config.L, config.d
    nan = float("nan")
    try:
        upper = bounds.upper_bound_1d(eps, L) if d == 1 else bounds.upper_bound_ddim(eps, L, d)
    except ConfigurationError:
        upper = nan
    try:
        if d > 1:
            lower = bounds.lower_bound_ddim(eps, delta, L, d)
        elif config.channel.kind is ChannelKind.FULL:
            lower = bounds.lower_bound_1d(eps, delta, L)
        elif config.channel.kind is ChannelKind.GAUSSIAN:
            lower = bounds.partial_obs_lower(eps, delta, L, gaussian_bias_bound(delta, config.channel.sigma))
        else:
            lower = nan
    except ConfigurationError:
        lower = nan
    return upper, lower


def result_row(config: ExperimentConfig, stats: SummaryStats) -> dict:
    lo, hi = stats.privacy_ci
    upper, lower = bound_columns(config)
    row = config.config_row()
    row.update(
        accuracy_rate=stats.accuracy_rate,
        privacy_hit_rate=stats.privacy_hit_rate,
        ci_lo=lo,
        ci_hi=hi,
        mean_query_count=stats.mean_query_count,
        upper_bound=upper,
        lower_bound=lower,
    )
    return row


def sweep(configs: Sequence[ExperimentConfig], workers: int = 1) -> Iterator[dict]:
    """One result row per config, in the given order."""
    configs = list(configs)
    if not configs:
        raise ConfigurationError("empty sweep grid")
    for c in configs:
        yield result_row(c, run_experiment(c, workers))


_INT_COLUMNS = {"L", "d", "trials", "master_seed"}
_STR_COLUMNS = {"learner", "channel", "adversary"}


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_header() -> str:
    return ",".join(COLUMNS) + "\n"


def csv_line(row: dict) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([format_value(row[c]) for c in COLUMNS])
    return buf.getvalue()


def write_csv(rows: Iterable[dict], fh, header: bool = True) -> None:
    if header:
        fh.write(csv_header())
    for r in rows:
        fh.write(csv_line(r))


def parse_row(raw: dict) -> dict:
    out = {}
    for c in COLUMNS:
        v = raw[c]
        if c in _STR_COLUMNS:
            out[c] = v
        elif c in _INT_COLUMNS:
            out[c] = int(v)
        else:
            out[c] = float(v)
    return out


def read_csv(fh) -> list[dict]:
    return [parse_row(r) for r in csv.DictReader(fh)]


def rows_to_json(rows: Iterable[dict]) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v

    return json.dumps([{c: clean(r[c]) for c in COLUMNS} for r in rows], indent=2)


def config_key(row: dict) -> tuple[str, ...]:
    """Identity of a sweep cell, as it appears in the CSV."""
    return tuple(format_value(row[c]) for c in CONFIG_COLUMNS)


def completed_keys(fh) -> set[tuple[str, ...]]:
    keys = set()
    for r in csv.DictReader(fh):
        if all(r.get(c) not in (None, "") for c in COLUMNS):
            keys.add(tuple(r[c] for c in CONFIG_COLUMNS))
    return keys


LEARNER_CHOICES = tuple(k.value for k in LearnerKind)
