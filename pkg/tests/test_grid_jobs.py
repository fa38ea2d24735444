import pytest

from stieltjes_lab.app.grid_jobs import describe_jobs, parallel_map, run_jobs


def _reciprocal(x):
    return 1.0 / x


@pytest.mark.parametrize("workers", [1, 4])
def test_parallel_map_preserves_order(workers):
    assert parallel_map(lambda x: x * x, range(10), workers=workers) == [x * x for x in range(10)]


@pytest.mark.parametrize("workers", [1, 3])
def test_first_failure_is_reraised(workers):
    with pytest.raises(ZeroDivisionError):
        parallel_map(_reciprocal, [1.0, 0.0, 2.0, 0.0], workers=workers)


def test_run_jobs_keeps_failures_on_the_job():
    jobs = run_jobs(_reciprocal, [2.0, 0.0], workers=2)
    assert [job.status() for job in jobs] == ["done", "error"]
    assert jobs[0].get_result() == 0.5
    assert isinstance(jobs[1].get_exception(), ZeroDivisionError)
    summary = describe_jobs(jobs)
    assert summary["total"] == 2
    assert summary["failed"] == 1
    assert summary["elapsed"] >= 0.0
