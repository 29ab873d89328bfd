import numpy as np
import pytest

from flowcast.errors import DataError
from flowcast.importance import ForestConfig
from flowcast.period import cycle
from flowcast.synth import Channel, SynthSpec, benchmark_scenario, gen_periodic
from flowcast.tuner import prepare


def test_clean_period_20():
    series, truth = gen_periodic(SynthSpec(d=400, channels=(Channel(period=20),)))
    assert cycle(series.target).periods == (10,)
    assert truth.half_period == 10


@pytest.mark.parametrize("period", [8, 14, 20, 36, 50])
def test_empirical_half_period(period):
    series, truth = gen_periodic(SynthSpec(d=20 * period, channels=(Channel(period=period),)))
    found = cycle(series.target).periods
    assert found and abs(found[0] - truth.half_period) <= 1


def test_informative_channel_ranked_first():
    series, truth = gen_periodic(benchmark_scenario(seed=0, d=2000))
    prepared = prepare(series, ForestConfig(n_trees=20))
    assert prepared.ranking.columns[0] == truth.informative_columns[0]
    assert prepared.features.selected[0] == 0


def test_deterministic():
    a, _ = gen_periodic(benchmark_scenario(seed=4, d=500))
    b, _ = gen_periodic(benchmark_scenario(seed=4, d=500))
    c, _ = gen_periodic(benchmark_scenario(seed=5, d=500))
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_layout_and_lag():
    spec = SynthSpec(d=200, channels=(Channel(period=20), Channel(period=10, amplitude=0.5)), n_distractors=2, weights=(1.0, 2.0), lag=2)
    series, truth = gen_periodic(spec)
    assert series.column_names == ("x1", "x2", "z1", "z2", "y")
    assert truth.target_column == 4 and truth.informative_columns == (0, 1)
    expected = series.values[:-2, 0] + 2.0 * series.values[:-2, 1]
    np.testing.assert_allclose(series.target[2:], expected, atol=1e-12)
    # weighted amplitudes tie (1.0 * 1 vs 2.0 * 0.5); the first channel wins
    assert truth.half_period == 10


def test_spec_validation():
    with pytest.raises(DataError):
        SynthSpec(d=50, channels=(Channel(period=20),))
    with pytest.raises(DataError):
        SynthSpec(channels=())
    with pytest.raises(DataError):
        SynthSpec(weights=(1.0, 2.0))


def test_truth_dict():
    _, truth = gen_periodic(benchmark_scenario(d=200))
    data = truth.to_dict()
    assert data["half_period"] == 10.0 and data["spec"]["d"] == 200
