import pytest

from errors import ParameterError
from performance_monitor import performance_monitor
from task_queue import VerificationQueue, default_workers


def slow_square(x):
    return x * x


def broken(x):
    raise ValueError(f"bad input {x}")


@pytest.mark.parametrize('workers', [1, 3])
def test_results_come_back_in_submission_order(workers):
    queue = VerificationQueue(workers=workers)
    for x in range(10):
        queue.submit(f"square-{x}", slow_square, x)
    results = queue.run()
    assert [r.task_id for r in results] == [f"square-{x}" for x in range(10)]
    assert [r.unwrap() for r in results] == [x * x for x in range(10)]


def test_failed_task_does_not_stop_the_others():
    queue = VerificationQueue(workers=2)
    queue.submit('ok-1', slow_square, 2)
    queue.submit('broken', broken, 3)
    queue.submit('ok-2', slow_square, 4)
    first, failed, last = queue.run()
    assert first.ok and last.ok
    assert not failed.ok
    with pytest.raises(ValueError):
        failed.unwrap()
    assert last.value == 16


def test_tasks_are_recorded_by_the_monitor():
    performance_monitor.reset_metrics()
    queue = VerificationQueue(workers=1)
    queue.submit('only', slow_square, 5)
    queue.run()
    summary = performance_monitor.get_metrics_summary()
    assert summary['total_tasks'] == 1
    assert summary['counters']['tasks_ok_count'] == 1


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv('KLOOSTERMAN_WORKERS', '4')
    assert default_workers() == 4
    assert VerificationQueue().workers == 4
    monkeypatch.setenv('KLOOSTERMAN_WORKERS', 'many')
    assert default_workers() == 1


def test_worker_count_must_be_positive():
    with pytest.raises(ParameterError):
        VerificationQueue(workers=0)
