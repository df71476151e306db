import json

import pandas as pd
import pytest

import cli
from errors import ConsistencyError


def run(capsys, *argv):
    status = cli.main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def run_json(capsys, *argv):
    status, out, _ = run(capsys, *argv)
    return status, json.loads(out)


def test_moment_value_is_a_decimal_string(capsys):
    status, payload = run_json(capsys, 'moments', '--field', '3^1', '--kind', 'T12SK', '--h', '3')
    assert status == 0
    assert payload['q'] == '3'
    assert payload['kind'] == 'T12SK'
    assert payload['h'] == '3'
    assert payload['value'] == '-2'


def test_field_summary(capsys):
    status, payload = run_json(capsys, 'field', '--field', '3^2')
    assert status == 0
    assert payload['q'] == '9'
    assert payload['nonzero_squares'] == '4'
    assert payload['trace_counts'] == {'0': '3', '1': '3', '2': '3'}


def test_constants_infer_the_sign_from_n(capsys):
    status, payload = run_json(capsys, 'constants', '--field', '3^1', '--n', '3')
    assert status == 0
    assert payload['sign'] == 'minus'
    assert payload['A'] == str(3 ** 11 * 26)
    assert payload['B'] == str(3 * 26 * 8)


def test_kloosterman_table(capsys):
    status, payload = run_json(capsys, 'kloosterman', '--field', '3^1')
    assert status == 0
    assert payload['values'] == {'1': '-1', '2': '2'}


def test_weights_and_dual(capsys):
    status, payload = run_json(capsys, 'weights', '--field', '3^1', '--n', '1', '--j-max', '2')
    assert status == 0
    assert payload['weights'] == {'0': '1', '1': '6', '2': '18'}
    assert payload['zero_cells'] == ['1']
    status, payload = run_json(capsys, 'dual', '--field', '3^1', '--n', '2')
    assert status == 0
    assert payload['weights'] == {'1': '1053', '2': '1053'}
    assert payload['distribution'] == {'0': '1', '1053': '2'}


def test_delta_as_csv(capsys):
    status, out, _ = run(capsys, 'delta', '--field', '3^1', '--m', '2', '--format', 'csv')
    assert status == 0
    assert out.splitlines() == ['beta,count', '0,2', '1,1', '2,1']


def test_delta_as_xlsx(capsys, tmp_path):
    target = tmp_path / 'delta.xlsx'
    status, _, _ = run(capsys, 'delta', '--field', '3^2', '--m', '1', '--format', 'xlsx', '--output', str(target))
    assert status == 0
    frame = pd.read_excel(target)
    assert list(frame.columns) == ['beta', 'count']
    assert len(frame) == 9


def test_xlsx_needs_an_output_path(capsys):
    status, _, _ = run(capsys, 'delta', '--field', '3^1', '--format', 'xlsx')
    assert status == 2


def test_json_written_to_file(capsys, tmp_path):
    target = tmp_path / 'moments.json'
    status, out, _ = run(capsys, 'moments', '--field', '3^1', '--kind', 'MK', '--h-max', '2', '--output', str(target))
    assert status == 0
    assert out == ''
    payload = json.loads(target.read_text())
    assert [row['value'] for row in payload['moments']] == ['2', '1', '5']


def test_verify_recursion_worked_instance(capsys):
    status, payload = run_json(capsys, 'verify', 'recursion', '--sign', 'minus', '--n', '1', '--field', '3^1',
                               '--i', '1', '--h-max', '1')
    assert status == 0
    assert payload['reports'][0]['t12sk_solved'] == '-2'


def test_verify_other_identities(capsys):
    assert run(capsys, 'verify', 'sk', '--sign', 'minus', '--n', '1', '--field', '3^2', '--h-max', '2')[0] == 0
    assert run(capsys, 'verify', 'pless', '--n', '2', '--field', '3^1', '--h-max', '2')[0] == 0
    assert run(capsys, 'verify', 'charsum', '--field', '3^2', '--m-max', '3')[0] == 0
    assert run(capsys, 'verify', 'salie', '--field', '3^1')[0] == 0


@pytest.mark.parametrize('job, key, expected', [('o3', 'order', '48'), ('q', 'order', '6'),
                                                ('coset', 'size', '6'), ('code', 'kernel_words', '243')])
def test_oracle_jobs(capsys, job, key, expected):
    status, payload = run_json(capsys, 'oracle', '--job', job, '--field', '3^1')
    assert status == 0
    assert payload[key] == expected


def test_oracle_exponential_sums(capsys):
    status, payload = run_json(capsys, 'oracle', '--job', 'expsum', '--field', '3^1', '--n', '1', '--i', '2')
    assert status == 0
    assert payload['sums']['1']['enumerated'] == {'a': '3', 'b': '3'}
    assert all(entry['match'] for entry in payload['sums'].values())


def test_oracle_bruhat(capsys):
    status, payload = run_json(capsys, 'oracle', '--job', 'bruhat', '--field', '3^1', '--workers', '2')
    assert status == 0
    assert payload['disjoint'] and payload['covers']


@pytest.mark.parametrize('argv', [
    ['field', '--field', '2^3'],
    ['constants', '--field', '3^1', '--sign', 'minus', '--n', '2'],
    ['oracle', '--job', 'q', '--field', '3^3'],
    ['nonsense'],
    ['moments', '--kind', 'XX'],
])
def test_usage_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_identity_failure_exits_1_with_trace(capsys, monkeypatch):
    monkeypatch.setattr(cli, 'salie_check', lambda t, h: h != 2)
    status, out, _ = run(capsys, 'verify', 'salie', '--field', '3^1', '--h-max', '3')
    assert status == 1
    payload = json.loads(out)
    assert 'h=2' in payload['error']
    assert payload['trace'] == [{'h': '2', 'match': False}]


def test_consistency_failure_exits_3(capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise ConsistencyError('remainder left over')

    monkeypatch.setattr(cli, 'moment', broken)
    assert run(capsys, 'moments', '--field', '3^1', '--h', '1')[0] == 3


def test_verify_all_reports_each_criterion(capsys, monkeypatch):
    monkeypatch.setattr(cli, 'CRITERIA', [
        {'id': 'a', 'description': 'passes', 'budget': 5, 'check': lambda: True},
        {'id': 'b', 'description': 'slow one', 'budget': 5, 'check': lambda: True, 'slow': True},
        {'id': 'c', 'description': 'fails', 'budget': 5, 'check': lambda: False},
    ])
    status, payload = run_json(capsys, 'verify', 'all', '--skip-slow', '--workers', '2')
    assert status == 1
    assert [row['id'] for row in payload['criteria']] == ['a', 'c']
    assert [row['passed'] for row in payload['criteria']] == [True, False]
    assert payload['passed'] is False


def test_verify_all_stats_cover_only_that_run(capsys, monkeypatch):
    run(capsys, 'moments', '--field', '3^1', '--h', '1')
    monkeypatch.setattr(cli, 'CRITERIA', [
        {'id': 'a', 'description': 'passes', 'budget': 5, 'check': lambda: True},
        {'id': 'b', 'description': 'fails', 'budget': 5, 'check': lambda: False},
    ])
    status, payload = run_json(capsys, 'verify', 'all', '--stats')
    assert status == 1
    performance = payload['stats']['performance']
    assert performance['total_tasks'] == '2'
    assert 'command_moments_success_count' not in performance['counters']
    assert payload['stats']['recent_errors'] == []


def test_stats_are_appended(capsys):
    status, payload = run_json(capsys, 'moments', '--field', '3^1', '--h', '2', '--stats')
    assert status == 0
    assert 'performance' in payload['stats']
    assert 'namespaces' in payload['stats']['cache']
    assert isinstance(payload['stats']['recent_errors'], list)


def test_cache_subcommand(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv('KLOOSTERMAN_CACHE_DIR', str(tmp_path))
    run(capsys, 'delta', '--field', '3^1', '--m', '3')
    status, payload = run_json(capsys, 'cache', 'stats')
    assert status == 0
    assert payload['disk'] is not None
    status, payload = run_json(capsys, 'cache', 'clear')
    assert status == 0
    assert payload['memory'] == 'cleared'


@pytest.mark.slow
def test_full_acceptance_run(capsys):
    status, payload = run_json(capsys, 'verify', 'all', '--workers', '2')
    assert status == 0
    assert all(row['passed'] for row in payload['criteria'])
