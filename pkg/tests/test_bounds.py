import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pql import bounds
from pql.bounds import (
    admissible_beta,
    best_beta,
    bound_report,
    c_d,
    count_intersections,
    count_intersections_batch,
    discrete_lower,
    gamma_d,
    localized_lower,
    lower_bound_1d,
    lower_bound_ddim,
    partial_obs_lower,
    random_hyperplanes,
    reduction_beta_grid,
    reduction_lower,
    transversality_bound,
    upper_bound_1d,
    upper_bound_ddim,
)
from pql.model import ConfigurationError, Hyperplane


def test_one_dimensional_values():
    assert upper_bound_1d(2 ** -20, 4) == 75
    assert lower_bound_1d(2 ** -20, 2 ** -4, 4) == pytest.approx(12, abs=1e-9)
    assert discrete_lower(2 ** -10, 0.0, 2 ** -4, 2) == pytest.approx(12)
    assert localized_lower(0.5, 16) == pytest.approx(1)
    assert partial_obs_lower(2 ** -20, 2 ** -4, 4, 2 / 3) == pytest.approx(4)


def test_lower_bound_needs_ratio_above_two():
    with pytest.raises(ConfigurationError):
        lower_bound_1d(0.25, 0.5, 1)


def test_reduction():
    assert best_beta(2 ** -20, 2 ** -4) == 16
    assert reduction_lower(2 ** -20, 2 ** -4, 4, 16) == pytest.approx(4 * (15 / 16 * 12 - (1 / 16 * 4 + 15 / 16 * math.log2(16 / 15))))
    with pytest.raises(ConfigurationError):
        reduction_lower(2 ** -20, 2 ** -4, 4, 1.5)
    with pytest.raises(ConfigurationError):
        reduction_lower(2 ** -20, 2 ** -4, 4, 3)
    assert admissible_beta(2 ** -20, 2 ** -4) == 16
    assert admissible_beta(2 ** -21, 2 ** -4) == 16
    assert reduction_beta_grid(2 ** -6, 2 ** -4) == [2.0, 4.0]


@given(st.integers(4, 30), st.integers(1, 6), st.integers(0, 4))
def test_reduction_at_least_continuous_lower(k, j, a):
    eps, delta, L = 2.0 ** -(k + j + 2), 2.0 ** -j, 2 ** a
    beta = admissible_beta(eps, delta)
    assert reduction_lower(eps, delta, L, beta) >= lower_bound_1d(eps, delta, L) - 1e-9


@given(st.floats(0, 1), st.floats(1.01, 1e6))
def test_localized_lower_never_exceeds_log(xi, r):
    assert localized_lower(xi, r) <= math.log2(r) + 1e-12


def test_gamma_and_constants():
    assert gamma_d(1) == pytest.approx(math.sqrt(math.pi))
    assert gamma_d(2) == pytest.approx(math.pi * 2 ** 1.5 / (math.sqrt(math.pi) / 2))
    assert transversality_bound(2, 0.25) == pytest.approx(50.1326, abs=1e-4)
    assert c_d(3) == pytest.approx(gamma_d(3) * 4)
    with pytest.raises(ConfigurationError):
        transversality_bound(2, 0)


def test_ddim_bounds():
    assert upper_bound_ddim(2 ** -6, 4, 2) == 44
    assert lower_bound_ddim(2 ** -6, 2 ** -2, 4, 2) == pytest.approx(
        1 / c_d(2) * 0.25 * 4 * 4 - 4 / c_d(2) * 4
    )


@pytest.mark.parametrize(
    "normal, offset, delta, want",
    [((1.0, 0.0), 0.375, 0.25, 4), ((1.0, 1.0), 1.0, 0.25, 10), ((1.0, 0.0), 0.5, 0.25, 8), ((1.0,), 0.35, 0.1, 1), ((1.0,), 0.3, 0.1, 2)],
)
def test_count_intersections_examples(normal, offset, delta, want):
    assert count_intersections(Hyperplane(normal, offset), delta) == want


def test_axis_parallel_construction():
    for d in (2, 3):
        for m in (4, 8, 16):
            assert count_intersections(Hyperplane.axis(0, d, 0.5 / m), 1 / m) == m ** (d - 1)


def test_oracle_rejects():
    with pytest.raises(ConfigurationError):
        count_intersections(Hyperplane((1.0,) * 4, 0.5), 0.25)
    with pytest.raises(ConfigurationError):
        count_intersections(Hyperplane((1.0, 0.0), 0.5), 0.3)


def test_batch_matches_oracle(backend):
    rng = np.random.default_rng(9)
    for d, delta in ((2, 1 / 8), (3, 1 / 4)):
        A, b = random_hyperplanes(200, d, rng)
        got = count_intersections_batch(A, b, delta)
        want = [count_intersections(Hyperplane(tuple(a), float(o)), delta, d) for a, o in zip(A, b)]
        assert got.tolist() == want


def test_random_hyperplanes_meet_cube():
    A, b = random_hyperplanes(2000, 3, np.random.default_rng(0))
    assert (count_intersections_batch(A, b, 1 / 4) >= 1).all()


def test_bound_report():
    r = bound_report(2 ** -20, 2 ** -4, 4, zeta=2 / 3)
    assert r.upper == 75 and r.lower == pytest.approx(12) and r.partial == pytest.approx(4)
    assert r.beta == 16 and r.consistent and not r.warnings
    r = bound_report(2 ** -3, 2 ** -4, 1)
    assert any("delta/4" in w for w in r.warnings)
    r = bound_report(2 ** -10, 0.5, 4)
    assert any("1/L" in w for w in r.warnings)
