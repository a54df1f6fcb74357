import numpy as np
import pytest
from hypothesis import given, strategies as st

from pql.adversaries import (
    EmptyCountsError,
    last_query_attack,
    proportional_point,
    proportional_sample,
    rb_candidate_attack,
    reconstruct_offset_bits,
    tally_cells,
    uniform_random_attack,
)
from pql.cells import CellCounts
from pql.learners import bisection_run, rb_run, rbd_run
from pql.model import Hyperplane, QueryPoint, Target, binary_expansion
from pql.observation import ChannelSpec, Observation, observe
from pql.rng import Tag, TrialStream


def test_tally_example():
    c = tally_cells([0.5, 0.25, 0.375, 0.3125], 0.25)
    assert c.counts.tolist() == [0, 3, 1, 0]


def test_tally_hyperplanes_on_shared_face():
    c = tally_cells([Hyperplane.axis(0, 2, 0.5)], 0.5, d=2)
    assert c.counts.tolist() == [1, 1, 1, 1]
    c = tally_cells([Hyperplane.axis(1, 2, 0.25)], 0.5, d=2)
    assert c.counts.tolist() == [1, 0, 1, 0]


def test_tally_general_hyperplane():
    c = tally_cells([Hyperplane((1.0, 1.0), 1.0)], 0.5, d=2)
    assert c.counts.tolist() == [1, 1, 1, 1]
    c = tally_cells([Hyperplane((1.0, 1.0), 0.25)], 0.5, d=2)
    assert c.counts.tolist() == [1, 0, 0, 0]


def test_rejects_transcript():
    t = bisection_run(0.3, 2 ** -4)
    for fn in (lambda: tally_cells(t, 0.25), lambda: last_query_attack(t), lambda: rb_candidate_attack(t, 1, np.random.default_rng(0))):
        with pytest.raises(TypeError):
            fn()


def test_proportional_sample_distribution():
    rng = np.random.default_rng(0)
    draws = [proportional_sample([0, 3, 1, 0], rng).index for _ in range(20_000)]
    freq = np.bincount(draws, minlength=5)[1:] / 20_000
    assert freq[0] == 0 and freq[3] == 0
    assert abs(freq[1] - 0.75) < 0.015


def test_proportional_sample_empty():
    with pytest.raises(EmptyCountsError):
        proportional_sample([0, 0, 0], np.random.default_rng(0))


def test_proportional_point_is_midpoint():
    p = proportional_point(CellCounts([0, 0, 5, 0], 5), 0.25, np.random.default_rng(1))
    assert p.coords == (0.625,)
    p = proportional_point([0, 0, 0, 2], 0.5, np.random.default_rng(1), d=2)
    assert p.coords == (0.75, 0.75)


def test_last_query():
    t = bisection_run(0.3, 2 ** -4)
    obs = observe(t.queries, ChannelSpec())
    assert last_query_attack(obs).coords == (0.3125,)
    assert last_query_attack([0.5, 1.02]).coords == (np.nextafter(1, 0),)
    assert last_query_attack([-0.3]).coords == (0.0,)
    with pytest.raises(ValueError):
        last_query_attack([])


@given(st.floats(0, 1, exclude_max=True))
def test_last_query_always_catches_bisection(x):
    eps, delta = 2 ** -10, 2 ** -4
    obs = observe(bisection_run(x, eps).queries, ChannelSpec())
    assert abs(last_query_attack(obs).coords[0] - x) <= delta / 2


def test_uniform_attack_uses_fallback_draws():
    s = TrialStream(3, 4, Tag.ADVERSARY)
    assert uniform_random_attack(s, 2).coords == tuple(s.uniforms(2, start=1))


def test_rb_candidate_picks_final_round_point():
    t = rb_run(0.40625, 2 ** -5, 2)
    final = t.query_values()[-2:]
    seen = {rb_candidate_attack(observe(t.queries, ChannelSpec()), 2, np.random.default_rng(i)).coords[0] for i in range(50)}
    assert seen == set(final)


def test_rb_candidate_erasure_uses_observed_positions():
    t = rb_run(0.40625, 2 ** -5, 2)
    n = t.n
    obs = Observation(tuple((i, q.value) for i, q in enumerate(t.queries) if i != n - 1), n)
    got = rb_candidate_attack(obs, 2, np.random.default_rng(0)).coords[0]
    assert got == t.query_values()[-2]
    obs = Observation(tuple((i, q.value) for i, q in enumerate(t.queries) if i < n - 2), n)
    with pytest.raises(EmptyCountsError):
        rb_candidate_attack(obs, 2, np.random.default_rng(0))


def test_rb_candidate_multidimensional():
    t = rbd_run((0.3, 0.8), 2 ** -6, 4, 2)
    obs = observe(t.queries, ChannelSpec())
    got = rb_candidate_attack(obs, 4, np.random.default_rng(0), d=2).coords
    tail = t.queries[-8:]
    assert got[0] in {h.offset for h in tail[:4]}
    assert got[1] in {h.offset for h in tail[4:]}


def test_rb_candidate_hit_rate_one_over_L():
    L, eps, delta = 4, 2 ** -12, 2 ** -4
    rng = np.random.default_rng(5)
    xs = rng.random(4000)
    hits = sum(
        abs(rb_candidate_attack(observe(rb_run(x, eps, L).queries, ChannelSpec()), L, rng).coords[0] - x) <= delta / 2
        for x in xs
    )
    p = hits / len(xs)
    assert abs(p - 1 / L) <= 3 * np.sqrt(p * (1 - p) / len(xs))


@pytest.mark.parametrize("L", [1, 2, 4])
def test_reconstruct_bits(L):
    eps = 2 ** -10
    a = int(np.log2(L))
    rng = np.random.default_rng(L)
    for x in rng.random(300):
        got = reconstruct_offset_bits(rb_run(x, eps, L).queries, L, eps)
        truth = binary_expansion(x, 10)[a:]
        assert got[:-1] == truth[:-1]
        assert got[-1] == 1


def test_reconstruct_rejects_partial_run():
    t = rb_run(0.3, 2 ** -8, 2)
    with pytest.raises(ValueError):
        reconstruct_offset_bits(t.queries[:-1], 2, 2 ** -8)


def test_reconstruct_worked_example():
    t = rb_run(0.40625, 2 ** -5, 2)
    assert reconstruct_offset_bits(observe(t.queries, ChannelSpec()), 2, 2 ** -5) == (1, 1, 0, 1)
