import math
from types import SimpleNamespace

import numpy as np
import pytest

from adaptive_sampling.grid import GridSpec
from adaptive_sampling.metrics import (
    CHECKPOINTS,
    MetricStat,
    aggregate,
    checkpoint_index,
    localization_correct,
    mean_variance,
    rmse,
)

GRID = GridSpec()


def test_rmse_examples():
    truth = np.array([-50.0, -60.0, -70.0])
    assert rmse(truth, truth) == 0
    assert rmse(truth + 2, truth) == pytest.approx(2)
    assert rmse([3, 4], [0, 0]) == pytest.approx(3.5355339059327378)


def test_mean_variance_examples():
    assert mean_variance(np.full(150, 7.5)) == 7.5
    assert mean_variance([2, 4]) == 3
    with pytest.raises(ValueError):
        mean_variance([])


def peak_at(cell):
    m = np.zeros(GRID.n_cells)
    m[GRID.index_of(cell)] = 1.0
    return m


def test_localization_examples():
    cells = np.array([[4.6, 7.3], [6.0, 7.0]])
    assert localization_correct([1.0, 0.0], cells, (4, 7))  # sqrt(0.45) from the source
    assert not localization_correct([0.0, 1.0], cells, (4, 7))
    assert localization_correct(peak_at((4, 7)), GRID.centers, (4, 7))
    assert localization_correct(peak_at((4, 8)), GRID.centers, (4, 7))  # exactly 1 m
    assert not localization_correct(peak_at((6, 7)), GRID.centers, (4, 7))


def test_localization_tie_goes_to_lexicographic_first():
    m = peak_at((2, 2)) + peak_at((8, 8))
    assert localization_correct(m, GRID.centers, (2, 2))
    assert not localization_correct(m, GRID.centers, (8, 8))


def test_checkpoint_index():
    assert checkpoint_index(100, 10) == 9
    assert checkpoint_index(100, "half") == 49
    assert checkpoint_index(101, "half") == 50
    assert checkpoint_index(100, "last") == 99
    assert checkpoint_index(7, 50) == 6
    assert checkpoint_index(0, "last") is None


def fake_log(n, correct_from=None, rmse_final=1.0):
    recs = [SimpleNamespace(rmse=rmse_final, mean_variance=2.0, cumulative_distance=float(i),
                            localization_correct=correct_from is not None and i >= correct_from)
            for i in range(n)]
    return SimpleNamespace(records=recs, sample_count=n)


def test_aggregate_single_log_has_zero_std():
    s = aggregate([fake_log(30)])
    assert s.metrics["RMSE"] == MetricStat(1.0, 0.0)
    assert s.metrics["Samples"].mean == 30


def test_aggregate_all_correct():
    s = aggregate([fake_log(60, 0) for _ in range(4)])
    assert all(v == 100.0 for v in s.localization.values())
    assert list(s.localization) == list(CHECKPOINTS)


def test_aggregate_seventeen_of_twenty_five():
    logs = [fake_log(60, 0) for _ in range(17)] + [fake_log(60) for _ in range(8)]
    assert aggregate(logs).localization["last"] == pytest.approx(68.0)


def test_aggregate_checkpoints_and_std():
    logs = [fake_log(60, 30, rmse_final=1.0), fake_log(60, 30, rmse_final=3.0)]
    s = aggregate(logs)
    assert s.localization[25] == 0 and s.localization[35] == 100
    assert s.metrics["RMSE"].mean == 2.0
    assert s.metrics["RMSE"].std == pytest.approx(math.sqrt(2))
    assert str(s.metrics["RMSE"]) == "2.00 ± 1.41"


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([])
