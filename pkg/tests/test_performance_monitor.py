import pytest

from performance_monitor import PerformanceMonitor, performance_monitor, record_metric, time_function


def test_metrics_are_sorted_into_counters_timers_and_gauges():
    monitor = PerformanceMonitor()
    monitor.record_metric('fields_built_count', 2)
    monitor.record_metric('delta_duration', 0.5)
    monitor.record_metric('delta_duration', 1.5)
    monitor.record_metric('largest_q', 243)
    summary = monitor.get_metrics_summary()
    assert summary['counters'] == {'fields_built_count': 2}
    assert summary['timer_averages']['delta_duration']['avg'] == pytest.approx(1.0)
    assert summary['timer_averages']['delta_duration']['total'] == pytest.approx(2.0)
    assert summary['gauges'] == {'largest_q': 243}


def test_slowest_tasks_are_listed_first():
    monitor = PerformanceMonitor()
    monitor.record_task('fast', 0.1, True)
    monitor.record_task('slow', 2.0, False, 'identity failed')
    summary = monitor.get_metrics_summary()
    assert summary['slowest_tasks'][0]['task_id'] == 'slow'
    assert summary['counters']['tasks_failed_count'] == 1


def test_time_function_records_success_and_failure():
    performance_monitor.reset_metrics()

    @time_function('sample')
    def sample(fail):
        if fail:
            raise RuntimeError('sample failed')
        return 'done'

    assert sample(False) == 'done'
    with pytest.raises(RuntimeError):
        sample(True)
    summary = performance_monitor.get_metrics_summary()
    assert summary['counters']['sample_success_count'] == 1
    assert summary['counters']['sample_error_count'] == 1
    assert summary['error_counts'] == {'sample_error': 1}
    assert sample.__name__ == 'sample'
    assert performance_monitor.get_recent_errors()[0]['message'] == 'sample failed'


def test_reset_clears_everything():
    record_metric('anything_count', 1)
    performance_monitor.reset_metrics()
    assert performance_monitor.get_metrics_summary()['total_metrics'] == 0
