import math

import numpy as np
import pytest

from pql.cells import EmptyCountsError
from pql.learners import LearnerSpec, bisection_run, rb_run
from pql.model import ConfigurationError, Hyperplane
from pql.observation import (
    BiasedCountEstimate,
    ChannelSpec,
    Observation,
    empirical_bias,
    erasure_count_estimate,
    gaussian_bias_bound,
    gaussian_count_estimate,
    normal_cdf,
    observe,
    ratio_by_cell,
)
from pql.rng import Tag, TrialStream


@pytest.mark.parametrize("text", ["full", "gaussian:0.01", "erasure:0.5"])
def test_label_round_trip(text):
    assert ChannelSpec.parse(text).label == text


@pytest.mark.parametrize("text", ["noisy", "gaussian", "gaussian:-1", "erasure:0", "erasure:1.5", "full:3"])
def test_parse_rejects(text):
    with pytest.raises(ConfigurationError):
        ChannelSpec.parse(text)


def test_full_channel_is_identity():
    t = rb_run(0.3, 2 ** -8, 2)
    obs = observe(t.queries, ChannelSpec())
    assert obs.values() == t.query_values() and obs.n == t.n


def test_observe_rejects_transcript():
    with pytest.raises(TypeError):
        observe(bisection_run(0.3, 2 ** -4), ChannelSpec())


def test_gaussian_channel_uses_positional_draws():
    s = TrialStream(1, 0, Tag.CHANNEL)
    obs = observe([0.5, 0.25], ChannelSpec("gaussian", sigma=0.1), s)
    z = s.normals(2)
    assert obs.values() == [0.5 + 0.1 * z[0], 0.25 + 0.1 * z[1]]


def test_gaussian_rejects_hyperplanes():
    with pytest.raises(ConfigurationError):
        observe([Hyperplane((1.0, 0.0), 0.5)], ChannelSpec("gaussian", sigma=0.1), TrialStream(0, 0, Tag.CHANNEL))


def test_erasure_keeps_positions():
    s = TrialStream(4, 2, Tag.CHANNEL)
    qs = list(np.arange(1, 41) / 41)
    obs = observe(qs, ChannelSpec("erasure", p_obs=0.5), s)
    keep = s.uniforms(40) < 0.5
    assert obs.positions() == list(np.flatnonzero(keep))
    assert obs.n == 40


def test_erasure_with_one_sees_everything():
    obs = observe([0.1, 0.2], ChannelSpec("erasure", p_obs=1.0), TrialStream(0, 0, Tag.CHANNEL))
    assert len(obs) == 2


def test_count_estimates_respect_total():
    obs = Observation(((0, 0.1), (2, 0.6), (3, 0.65)), 8)
    est = erasure_count_estimate(obs, 0.5, 0.5, 8)
    assert est.n_hat.tolist() == pytest.approx([8 / 3, 16 / 3])
    assert est.total == pytest.approx(8)
    g = gaussian_count_estimate(Observation(((0, -0.2), (1, 0.3)), 2), 0.5)
    assert g.n_hat.tolist() == [1.0, 0.0]
    with pytest.raises(EmptyCountsError):
        erasure_count_estimate(Observation((), 4), 0.5, 0.5, 4)
    with pytest.raises(AssertionError):
        BiasedCountEstimate(np.array([3.0, 2.0]), 4)


def test_normal_cdf():
    assert normal_cdf(0) == 0.5
    assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
    assert normal_cdf(-10) == pytest.approx(7.61985302416047e-24, rel=1e-12)


def test_gaussian_bias_bound():
    assert gaussian_bias_bound(0.1, 0.01) == pytest.approx(0.5, abs=1e-20)
    assert gaussian_bias_bound(0.1, 0.1) == pytest.approx(0.5 + normal_cdf(-1))


def test_ratio_by_cell_exact():
    rep = ratio_by_cell(np.array([0, 0, 1, 1]), np.array([1.0, 3.0, 2.0, 2.0]), np.array([2.0, 2.0, 4.0, 4.0]), 3)
    assert rep.ratio[:2].tolist() == [1.0, 0.5]
    assert math.isnan(rep.ratio[2])
    assert rep.min_cell == 1 and rep.min_ratio == 0.5


def test_full_channel_ratio_is_one():
    rep = empirical_bias(LearnerSpec("rb", 2 ** -10, 2), ChannelSpec(), 2 ** -3, 5000, master_seed=1)
    assert np.allclose(rep.ratio, 1.0)


def test_erasure_ratio_near_one():
    rep = empirical_bias(LearnerSpec("rb", 2 ** -10, 4), ChannelSpec("erasure", p_obs=0.9), 2 ** -4, 30_000, master_seed=2)
    assert abs(rep.min_ratio - 1) < 4 * rep.min_stderr + 0.02


def test_gaussian_ratio_with_small_sigma_close_to_one():
    rep = empirical_bias(LearnerSpec("rb", 2 ** -12, 4), ChannelSpec("gaussian", sigma=1e-4), 0.1, 20_000, master_seed=3)
    # the query at 0.5 sits on the boundary of cells 5 and 6 and noise splits it
    others = np.delete(rep.ratio, [4, 5])
    assert (others > 0.99).all()
    assert rep.min_cell == 5 and 0.9 < rep.min_ratio < 1
