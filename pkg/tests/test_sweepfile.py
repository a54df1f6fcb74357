import pytest

from pql.model import ConfigurationError
from pql.sweepfile import SweepConfigError, load_sweep, parse_number, parse_sweep


def test_parse_number():
    assert parse_number("2^-12") == 2 ** -12
    assert parse_number("0.1") == 0.1
    with pytest.raises(ConfigurationError):
        parse_number("two")


def test_grid_product_order():
    spec = parse_sweep("epsilon = 2^-8..2^-10\ndelta = 2^-4\nL = 1, 2\ntrials = 5\n")
    cfgs = spec.configs()
    assert [(c.epsilon, c.L) for c in cfgs] == [
        (2 ** -8, 1), (2 ** -8, 2), (2 ** -9, 1), (2 ** -9, 2), (2 ** -10, 1), (2 ** -10, 2)
    ]
    assert all(c.trials == 5 for c in cfgs)


def test_comments_and_defaults():
    spec = parse_sweep("# grid\n\nepsilon = 2^-10  # fine\ndelta = 2^-4\n")
    (c,) = spec.configs()
    assert c.learner.kind.value == "rb" and c.adversary == "rb-candidate" and c.channel.label == "full"


@pytest.mark.parametrize(
    "text, line",
    [("epsilon = 2^-8\nbogus = 1\n", 2), ("epsilon 2^-8\n", 1), ("epsilon = 2^-8..3\n", 1), ("epsilon = 2^-8\nL = 1.5\n", 2), ("epsilon = 2^-8\nepsilon = 2^-9\n", 2)],
)
def test_errors_carry_line(text, line):
    with pytest.raises(SweepConfigError) as e:
        parse_sweep(text)
    assert e.value.line == line


def test_empty_grid():
    with pytest.raises(SweepConfigError):
        parse_sweep("# nothing\n").configs()


def test_invalid_cells():
    text = "epsilon = 2^-8\nL = 2, 3\ndelta = 2^-4\n"
    with pytest.raises(SweepConfigError):
        parse_sweep(text).configs()
    assert [c.L for c in parse_sweep(text + "invalid = skip\n").configs()] == [2]


def test_shipped_recipe():
    cfgs = load_sweep("docs/asymptotic-ratio.sweep").configs()
    assert [c.epsilon for c in cfgs] == [2.0 ** -k for k in range(8, 25)]
    assert {c.L for c in cfgs} == {4}
