"""Bit reconstruction from replicated-bisection queries.

The observed queries pin down the target's offset inside its sub-interval,
so every bit after the first ``log L`` is exposed except the very last one,
which only the final, unobserved response would settle.  Meanwhile the first
``log L`` bits are fully hidden.  Two neighbouring databases therefore give
either disjoint or identical query sequences, which no differentially private
mechanism allows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pql import engine, kernels
from pql.adversaries import reconstruct_offset_bits
from pql.learners import LearnerSpec, rb_run
from pql.model import binary_expansion, from_bits, log2_exact


@dataclass(frozen=True)
class DpDemoResult:
    L: int
    epsilon: float
    trials: int
    full_matches: int
    determinable_matches: int
    first_bit: int
    last_bit: int
    disjoint_pair_differs: bool
    concealed_pair_identical: bool | None

    @property
    def full_rate(self) -> float:
        """Exact recovery of bits ``log L + 1 .. log(1/eps)``."""
        return self.full_matches / self.trials

    @property
    def determinable_rate(self) -> float:
        """Exact recovery of bits ``log L + 1 .. log(1/eps) - 1``."""
        return self.determinable_matches / self.trials


def database_target(bits, epsilon: float) -> float:
    """Centre of the width-``epsilon`` cell whose binary expansion is ``bits``."""
    return from_bits(bits) + epsilon / 2


def query_sequence(bits, epsilon: float, L: int) -> tuple[float, ...]:
    return tuple(rb_run(database_target(bits, epsilon), epsilon, L).query_values())


def run_dp_demo(L: int, epsilon: float, trials: int, master_seed: int = 0) -> DpDemoResult:
    spec = LearnerSpec("rb", epsilon, L)
    a = log2_exact(L, "L")
    k = log2_exact(1.0 / epsilon, "1/epsilon")
    K = k - a
    x = engine.draw_targets(master_seed, np.arange(trials, dtype=np.int64), 1)[:, 0]
    Q, _ = kernels.replicated_bisection(x, spec.L, K)
    full = det = 0
    for t in range(trials):
        got = reconstruct_offset_bits(Q[t].tolist(), L, epsilon)
        truth = binary_expansion(float(x[t]), k)[a:]
        full += got == truth
        det += got[:-1] == truth[:-1]
    zero = [0] * k
    flip_exposed = list(zero)
    flip_exposed[a] = 1
    differs = query_sequence(zero, epsilon, L) != query_sequence(flip_exposed, epsilon, L)
    identical = None
    if a >= 1:
        flip_hidden = list(zero)
        flip_hidden[0] = 1
        identical = query_sequence(zero, epsilon, L) == query_sequence(flip_hidden, epsilon, L)
    return DpDemoResult(L, epsilon, trials, full, det, a + 1, k, differs, identical)
