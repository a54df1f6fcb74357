import numpy as np
import pytest

from pql import engine
from pql.harness import ExperimentConfig
from pql.rng import Tag, TrialStream, derive_trial_seed, raw_block, stream_keys, to_unit


def test_same_inputs_same_stream():
    a = derive_trial_seed(7, 3, "target").uniforms(16)
    b = derive_trial_seed(7, 3, Tag.TARGET).uniforms(16)
    assert np.array_equal(a, b)


def test_streams_differ_by_trial_and_tag():
    base = TrialStream(7, 3, Tag.TARGET).uniforms(8)
    assert not np.array_equal(base, TrialStream(7, 4, Tag.TARGET).uniforms(8))
    assert not np.array_equal(base, TrialStream(7, 3, Tag.ADVERSARY).uniforms(8))
    assert not np.array_equal(base, TrialStream(8, 3, Tag.TARGET).uniforms(8))


def test_positional_access():
    s = TrialStream(1, 2, Tag.CHANNEL)
    block = s.uniforms(10)
    assert s.uniform(7) == block[7]
    assert np.array_equal(s.uniforms(3, start=4), block[4:7])


def test_vectorised_keys_match_scalar():
    keys = stream_keys(99, np.arange(50), Tag.LEARNER)
    block = to_unit(raw_block(keys, 0, 5))
    for t in (0, 17, 49):
        assert np.array_equal(block[t], TrialStream(99, t, Tag.LEARNER).uniforms(5))


def test_monobit():
    raw = TrialStream(12345, 0, Tag.AUX).raws(15_625)
    bits = np.unpackbits(raw.view(np.uint8))
    assert bits.size == 1_000_000
    assert abs(bits.mean() - 0.5) < 0.002


def test_uniforms_in_unit_interval():
    u = TrialStream(0, 0, Tag.TARGET).uniforms(100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005


def test_targets_do_not_depend_on_adversary():
    idx = np.arange(1000)
    a = ExperimentConfig.build("rb", 2 ** -8, 2 ** -4, 2, adversary="uniform", master_seed=5)
    b = ExperimentConfig.build("rb", 2 ** -8, 2 ** -4, 2, adversary="proportional", master_seed=5)
    assert np.array_equal(engine.draw_targets(a.master_seed, idx, 1), engine.draw_targets(b.master_seed, idx, 1))


def test_normals_look_standard():
    z = TrialStream(3, 0, Tag.CHANNEL).normals(200_000)
    assert abs(z.mean()) < 0.01 and abs(z.std() - 1) < 0.01
