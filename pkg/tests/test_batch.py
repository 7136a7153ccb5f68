from __future__ import annotations

import pytest

from locsim.batch import SUITES, BatchSummary, InstanceResult, run_batch
from locsim.errors import InputError


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_small_batches_pass(suite):
    summary = run_batch(suite, 4, base_seed=1000)
    assert summary.failed_seeds == []
    assert summary.passed == 4


def test_seeds_are_consecutive_and_ordered():
    summary = run_batch("frame", 5, base_seed=77, workers=3)
    assert [r.seed for r in summary.results] == [77, 78, 79, 80, 81]


def test_worker_count_does_not_change_results():
    serial = run_batch("schmidt", 6, base_seed=5, workers=1)
    threaded = run_batch("schmidt", 6, base_seed=5, workers=4)
    assert serial.results == threaded.results


def test_instances_depend_only_on_their_seed():
    whole = run_batch("unitary-negative", 4, base_seed=20)
    tail = run_batch("unitary-negative", 2, base_seed=22)
    assert whole.results[2:] == tail.results


def test_maxima_and_failures():
    summary = BatchSummary(
        "x",
        0,
        (
            InstanceResult(0, True, {"a": 1.0, "b": 5.0}),
            InstanceResult(1, False, {"a": 3.0}),
            InstanceResult(2, False, {"b": 2.0}),
        ),
    )
    assert summary.passed == 1
    assert summary.failed_seeds == [1, 2]
    assert summary.maxima() == {"a": 3.0, "b": 5.0}


@pytest.mark.parametrize("suite, count", [("nope", 3), ("schmidt", 0)])
def test_bad_batch_arguments(suite, count):
    with pytest.raises(InputError):
        run_batch(suite, count)


def test_measure_sim_mixes_feasible_and_infeasible_instances():
    summary = run_batch("measure-sim", 6, base_seed=300)
    assert summary.failed_seeds == []
    for result in summary.results:
        assert "oracle_agreement" in result.metrics
        if result.seed % 3 == 0:
            assert result.metrics["feasible_outcomes"] == 0
            assert result.metrics["min_feasibility_residual"] > 1e-2
        else:
            assert result.metrics["feasible_outcomes"] >= 2
            assert result.metrics["max_feasibility_residual"] < 1e-8
