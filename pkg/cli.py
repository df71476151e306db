#!/usr/bin/env python3
"""
Kloosterman moment toolkit command line
Every computation and verification as a subcommand; JSON on stdout with big integers as decimal strings
"""

from dotenv import load_dotenv
# Load environment variables first, before reading any configuration
load_dotenv()

import argparse
import json
import logging
import os
import sys
import time
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from cache_manager import cache_manager, clear_cache, get_cache_stats
from char_sums import (MomentKind, a_r_formula, a_r_sum, char_delta_identity, delta1_via_squares, delta_table,
                       double_coset_exp_sum, incomplete_moment_identity, kloosterman_table, moment, salie_check,
                       weil_bound_holds)
from combinat import CosetFamily, Sign, constants
from disk_cache import get_cache_store
from errors import ConsistencyError, IdentityFailure, KloostermanError, ParameterError, require
from finite_field import EisensteinInt, FieldTable, build_field, field_from_spec
from group_oracle import (bruhat_partition_check, build_Q, block_relations_hold, coset_exp_sum,
                          dual_weights_by_enumeration, enumerate_double_coset, enumerate_O3, exp_sums_match,
                          explicit_code, kernel_weight_distribution, trace_count_identity)
from performance_monitor import get_performance_summary, performance_monitor, time_function
from recursion import assert_chain, dual_moment_check, pless_check, sk_identity_sides, t12sk_chain
from task_queue import VerificationQueue, default_workers
from weight_dist import (CodeFamily, CodeSpec, SpVariant, cell_profile, code_weight_counts, dual_distribution,
                         dual_weight, dual_weights_from_profile, predicted_zero_cells)

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = 'KLOOSTERMAN_LOG_LEVEL'
LOG_FILE_ENV = 'KLOOSTERMAN_LOG_FILE'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_USAGE = 2
EXIT_CONSISTENCY = 3


def configure_logging(verbose: bool = False, debug: bool = False) -> None:
    """Console logging on stderr, plus a log file when KLOOSTERMAN_LOG_FILE is set"""
    if debug:
        level = logging.DEBUG
    elif verbose:
        level = logging.INFO
    else:
        level = getattr(logging, os.getenv(LOG_LEVEL_ENV, 'WARNING').upper(), logging.WARNING)
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv(LOG_FILE_ENV)
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)


def jsonable(value: Any) -> Any:
    """Big integers and rationals become decimal strings"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else str(value)
    if isinstance(value, EisensteinInt):
        return {'a': str(value.a), 'b': str(value.b)}
    if isinstance(value, dict):
        return {str(jsonable(k)): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, float):
        return value
    return str(value)


def emit(args: argparse.Namespace, payload: Dict[str, Any], table: Optional[List[Dict[str, Any]]] = None) -> None:
    """Write a result in the requested format"""
    fmt = getattr(args, 'format', 'json')
    output = getattr(args, 'output', None)
    if fmt == 'json':
        if getattr(args, 'stats', False):
            payload = dict(payload)
            payload['stats'] = {'performance': get_performance_summary(), 'cache': cache_manager.get_info(),
                                'recent_errors': performance_monitor.get_recent_errors()}
        text = json.dumps(jsonable(payload), indent=2)
        if output:
            with open(output, 'w') as handle:
                handle.write(text + '\n')
        else:
            print(text)
        return

    require(table is not None, f"--format {fmt} is only offered for table-shaped results")
    frame = pd.DataFrame([{k: jsonable(v) for k, v in row.items()} for row in table])
    if fmt == 'csv':
        if output:
            frame.to_csv(output, index=False)
        else:
            print(frame.to_csv(index=False), end='')
    else:
        require(bool(output), "--format xlsx needs --output")
        frame.to_excel(output, index=False, engine='openpyxl')
    logger.info(f"Wrote {len(frame)} rows as {fmt}")


def _field(args: argparse.Namespace) -> FieldTable:
    return field_from_spec(args.field)


def _sign(args: argparse.Namespace) -> Sign:
    if getattr(args, 'sign', None):
        return Sign(args.sign)
    return Sign.MINUS if args.n % 2 else Sign.PLUS


def _code_spec(args: argparse.Namespace, t: FieldTable) -> CodeSpec:
    return CodeSpec(CodeFamily(args.family), _sign(args), args.n, t.q, args.i, SpVariant(args.variant))


# Computation commands

def cmd_field(args: argparse.Namespace) -> int:
    t = _field(args)
    c0, c1, c2 = t.trace_histogram()
    emit(args, {
        'field': t.params.spec,
        'r': t.r,
        'q': t.q,
        'modulus': list(t.params.modulus),
        'generator': int(t.generator),
        'nonzero_squares': len(t.squares()),
        'trace_counts': {'0': c0, '1': c1, '2': c2},
    })
    return EXIT_OK


def cmd_moments(args: argparse.Namespace) -> int:
    t = _field(args)
    kind = MomentKind(args.kind)
    orders = [args.h] if args.h is not None else list(range(args.h_max + 1))
    rows = [{'q': t.q, 'field': t.params.spec, 'kind': kind.value, 'h': h, 'value': moment(t, kind, h)}
            for h in orders]
    if len(rows) == 1:
        emit(args, rows[0], rows)
    else:
        emit(args, {'q': t.q, 'field': t.params.spec, 'kind': kind.value, 'moments': rows}, rows)
    return EXIT_OK


def cmd_delta(args: argparse.Namespace) -> int:
    t = _field(args)
    table = delta_table(t, args.m)
    rows = [{'beta': beta, 'count': count} for beta, count in table.as_dict().items()]
    emit(args, {'field': t.params.spec, 'm': args.m, 'values': table.as_dict()}, rows)
    return EXIT_OK


def cmd_kloosterman(args: argparse.Namespace) -> int:
    t = _field(args)
    values = kloosterman_table(t)
    rows = [{'a': a, 'K': k} for a, k in sorted(values.items())]
    emit(args, {'field': t.params.spec, 'values': values}, rows)
    return EXIT_OK


def cmd_constants(args: argparse.Namespace) -> int:
    t = _field(args)
    fam = CosetFamily(_sign(args), args.n, 1, t.q)
    big_a, big_b, length = constants(fam)
    emit(args, {'sign': fam.sign, 'n': fam.n, 'q': fam.q, 'A': big_a, 'B': big_b, 'N': length})
    return EXIT_OK


def cmd_weights(args: argparse.Namespace) -> int:
    t = _field(args)
    spec = _code_spec(args, t)
    profile = cell_profile(spec, t)
    counts = code_weight_counts(spec, t, args.j_max)
    rows = [{'j': j, 'C_j': counts[j]} for j in range(len(counts))]
    emit(args, {
        'code': spec.label(),
        'length': spec.length,
        'profile': profile.as_dict(),
        'mass_ok': profile.mass_ok,
        'zero_cells': sorted(predicted_zero_cells(spec, t)),
        'weights': {row['j']: row['C_j'] for row in rows},
    }, rows)
    return EXIT_OK


def cmd_dual(args: argparse.Namespace) -> int:
    t = _field(args)
    spec = _code_spec(args, t)
    if spec.variant is SpVariant.PRINTED:
        profile = cell_profile(spec, t)
        words = {a: dual_weights_from_profile(profile, t, a) for a in t.nonzero()}
    else:
        words = {a: dual_weight(spec, t, a) for a in t.nonzero()}
    rows = [{'a': a, 'weight': w} for a, w in words.items()]
    payload = {'code': spec.label(), 'weights': words}
    if spec.variant is not SpVariant.PRINTED:
        payload['distribution'] = dual_distribution(spec, t)
    emit(args, payload, rows)
    return EXIT_OK


# Verification commands

def _fail(message: str, trace: List[Dict[str, Any]]) -> None:
    raise IdentityFailure(message, trace=trace)


def cmd_verify_recursion(args: argparse.Namespace) -> int:
    t = _field(args)
    reports = t12sk_chain(_sign(args), args.n, t, args.h_max, args.i, use_direct=args.use_direct)
    assert_chain(reports)
    rows = [report.to_dict() for report in reports]
    emit(args, {'reports': rows}, rows)
    return EXIT_OK


def cmd_verify_sk(args: argparse.Namespace) -> int:
    t = _field(args)
    rows = []
    for h in range(1, args.h_max + 1):
        sides = sk_identity_sides(_sign(args), args.n, t, h, args.i)
        row = {'h': h, 'lhs': sides['lhs'], 'rhs': sides['rhs'], 'match': sides['lhs'] == sides['rhs']}
        rows.append(row)
        if not row['match']:
            _fail(f"SK identity failed at sign={_sign(args).value} n={args.n} q={t.q} h={h}", [jsonable(row)])
    emit(args, {'sign': _sign(args), 'n': args.n, 'q': t.q, 'results': rows}, rows)
    return EXIT_OK


def cmd_verify_pless(args: argparse.Namespace) -> int:
    t = _field(args)
    spec = CodeSpec(CodeFamily(args.family), _sign(args), args.n, t.q, args.i)
    rows = []
    for h in range(1, args.h_max + 1):
        row = {'h': h, 'dual_moments_match': dual_moment_check(spec, t, h)}
        rows.append(row)
        if not row['dual_moments_match']:
            _fail(f"dual power moments disagree with the Pless sum for {spec.label()} at h={h}", [jsonable(row)])
    emit(args, {'code': spec.label(), 'results': rows}, rows)
    return EXIT_OK


def cmd_verify_charsum(args: argparse.Namespace) -> int:
    t = _field(args)
    rows = []
    for m in range(args.m_max + 1):
        moments_ok = all(incomplete_moment_identity(t, m, beta) for beta in t.elements)
        characters_ok = all(char_delta_identity(t, m, a) for a in t.nonzero())
        rows.append({'m': m, 'incomplete_moments': moments_ok, 'character_delta': characters_ok})
        if not (moments_ok and characters_ok):
            _fail(f"character sum identity failed over F_{t.q} at m={m}", [rows[-1]])
    squares_ok = all(delta1_via_squares(t, beta) == delta_table(t, 1)[beta] for beta in t.elements)
    weil_ok = weil_bound_holds(t)
    if not (squares_ok and weil_ok):
        _fail(f"delta_1 or Weil bound check failed over F_{t.q}",
              [{'delta1_via_squares': squares_ok, 'weil_bound': weil_ok}])
    emit(args, {'field': t.params.spec, 'results': rows, 'delta1_via_squares': squares_ok,
                'weil_bound': weil_ok}, rows)
    return EXIT_OK


def cmd_verify_salie(args: argparse.Namespace) -> int:
    t = _field(args)
    rows = [{'h': h, 'match': salie_check(t, h)} for h in range(1, args.h_max + 1)]
    failed = [row for row in rows if not row['match']]
    if failed:
        _fail(f"Salie recursion failed over F_{t.q} at h={failed[0]['h']}", failed[:1])
    emit(args, {'field': t.params.spec, 'results': rows}, rows)
    return EXIT_OK


# Acceptance criteria for `verify all`

def _criterion_odd_recursion() -> bool:
    for n in (1, 3):
        for i in (1, 2):
            for r in (1, 2, 3):
                assert_chain(t12sk_chain(Sign.MINUS, n, build_field(r), 6, i))
    return True


def _criterion_even_recursion() -> bool:
    for n in (2, 4):
        for i in (1, 2):
            for r in (1, 2):
                assert_chain(t12sk_chain(Sign.PLUS, n, build_field(r), 4, i))
    return True


def _criterion_sk_identities() -> bool:
    cases = [(Sign.MINUS, 1), (Sign.MINUS, 3), (Sign.PLUS, 2)]
    for sign, n in cases:
        for r in (1, 2):
            for h in range(1, 5):
                sides = sk_identity_sides(sign, n, build_field(r), h)
                if sides['lhs'] != sides['rhs']:
                    _fail(f"SK identity failed at sign={sign.value} n={n} q={3 ** r} h={h}", [jsonable(sides)])
    return True


def _criterion_oracle() -> bool:
    checks = {
        '|Q(3,3)|': len(build_Q(1, build_field(1))) == 6,
        '|Q(5,3)|': len(build_Q(2, build_field(1))) == 1296,
        '|O(3,3)|': len(enumerate_O3(build_field(1))) == 48,
    }
    for sign, n, r in [(Sign.MINUS, 1, 1), (Sign.MINUS, 1, 2), (Sign.PLUS, 2, 1)]:
        t = build_field(r)
        for i in (1, 2):
            fam = CosetFamily(sign, n, i, t.q)
            enumeration = enumerate_double_coset(fam, t)
            profile = cell_profile(CodeSpec(CodeFamily.O, sign, n, t.q, i), t)
            label = f"{sign.value} n={n} i={i} q={t.q}"
            checks[f"histogram {label}"] = tuple(enumeration.trace_histogram[b] for b in t.elements) == profile.sizes
            checks[f"exp sums {label}"] = exp_sums_match(enumeration, t)
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        _fail(f"oracle check failed: {failed[0]}", [{'check': name} for name in failed])
    return True


def _criterion_o3_large() -> bool:
    return len(enumerate_O3(build_field(2), workers=default_workers())) == 1440


def _criterion_explicit_codes() -> bool:
    t = build_field(1)
    for i in (1, 2):
        spec = CodeSpec(CodeFamily.O, Sign.MINUS, 1, 3, i)
        code = explicit_code(spec.coset_family, t)
        kernel = kernel_weight_distribution(code)
        predicted = code_weight_counts(spec, t, 6)
        if any(kernel.get(j, 0) != predicted[j] for j in range(7)):
            _fail(f"kernel weights of {spec.label()} disagree with the closed form",
                  [{'kernel': jsonable(kernel), 'predicted': jsonable(predicted.prefix)}])
        dual = dual_weights_by_enumeration(code)
        if dual != dual_distribution(spec, t):
            _fail(f"dual weights of {spec.label()} disagree with the closed form", [{'dual': jsonable(dual)}])
        for h in range(5):
            if not pless_check(kernel, dual, 5, code.length, h, 3):
                _fail(f"Pless identity failed for {spec.label()} at h={h}", [{'h': h}])
    return True


def _criterion_char_sums() -> bool:
    for r in (1, 2, 3):
        t = build_field(r)
        for m in range(5):
            if not all(incomplete_moment_identity(t, m, beta) for beta in t.elements):
                _fail(f"incomplete moment identity failed at q={t.q} m={m}", [])
            if not all(char_delta_identity(t, m, a) for a in t.nonzero()):
                _fail(f"character-delta identity failed at q={t.q} m={m}", [])
    for r in range(1, 6):
        t = build_field(r)
        if not all(delta1_via_squares(t, beta) == delta_table(t, 1)[beta] for beta in t.elements):
            _fail(f"delta_1 by squares disagrees with the convolution at q={t.q}", [])
    return True


def _criterion_salie() -> bool:
    return all(salie_check(build_field(r), h) for r in (1, 2, 3) for h in range(1, 6))


def _criterion_a_r() -> bool:
    return all(a_r_formula(build_field(r), k) == a_r_sum(build_field(r), k) for r in (1, 2) for k in (1, 2))


def _criterion_weil() -> bool:
    return all(weil_bound_holds(build_field(r)) for r in range(1, 6))


def _criterion_injectivity() -> bool:
    for sign, n, r in [(Sign.MINUS, 1, 1), (Sign.MINUS, 1, 2), (Sign.PLUS, 2, 1)]:
        t = build_field(r)
        code = explicit_code(CosetFamily(sign, n, 1, t.q), t, with_kernel=False)
        if len(set(code.dual_words.values())) != t.q:
            return False
    return True


CRITERIA: List[Dict[str, Any]] = [
    {'id': '1', 'description': 'odd-n recursion, n in {1,3}, q in {3,9,27}, h <= 6', 'budget': 60,
     'check': _criterion_odd_recursion},
    {'id': '2', 'description': 'even-n recursion, n in {2,4}, q in {3,9}, h <= 4', 'budget': 60,
     'check': _criterion_even_recursion},
    {'id': '3', 'description': 'SK identities of the comparison codes', 'budget': 30,
     'check': _criterion_sk_identities},
    {'id': '4', 'description': 'group oracle: orders, trace histograms, exponential sums', 'budget': 300,
     'check': _criterion_oracle},
    {'id': '4b', 'description': 'full enumeration of O(3,9)', 'budget': 300, 'check': _criterion_o3_large,
     'slow': True},
    {'id': '5', 'description': 'explicit ternary codes for n=1, q=3', 'budget': 5,
     'check': _criterion_explicit_codes},
    {'id': '6', 'description': 'incomplete moments, character-delta identity, delta_1 by squares', 'budget': 30,
     'check': _criterion_char_sums},
    {'id': '7', 'description': 'Salie recursion, h <= 5', 'budget': 10, 'check': _criterion_salie},
    {'id': '8', 'description': 'a_r formula against enumeration', 'budget': 10, 'check': _criterion_a_r},
    {'id': '9', 'description': 'Weil bound up to q=243', 'budget': 5, 'check': _criterion_weil},
    {'id': '10', 'description': 'dual codeword injectivity', 'budget': 5, 'check': _criterion_injectivity},
]


def _run_criterion(check: Callable[[], bool]) -> Dict[str, Any]:
    start = time.perf_counter()
    passed = bool(check())
    return {'passed': passed, 'seconds': round(time.perf_counter() - start, 3)}


def _exit_code_for(error: BaseException) -> int:
    if isinstance(error, ParameterError):
        return EXIT_USAGE
    if isinstance(error, (ConsistencyError, AssertionError)):
        return EXIT_CONSISTENCY
    return EXIT_IDENTITY


def cmd_verify_all(args: argparse.Namespace) -> int:
    # --stats then covers this run only
    performance_monitor.reset_metrics()
    queue = VerificationQueue(workers=args.workers)
    selected = [c for c in CRITERIA if not (args.skip_slow and c.get('slow'))]
    for criterion in selected:
        queue.submit(f"criterion-{criterion['id']}", _run_criterion, criterion['check'])

    rows, status = [], EXIT_OK
    for criterion, result in zip(selected, queue.run()):
        row = {'id': criterion['id'], 'description': criterion['description'],
               'passed': False, 'seconds': round(result.duration, 3), 'budget_seconds': criterion['budget'],
               'error': None}
        if result.ok:
            row.update(result.value)
        else:
            row['error'] = str(result.error)
            if isinstance(result.error, IdentityFailure) and result.error.trace:
                row['trace'] = jsonable(result.error.trace[:1])
        if not row['passed'] and status == EXIT_OK:
            status = _exit_code_for(result.error) if result.error is not None else EXIT_IDENTITY
        if row['seconds'] > criterion['budget']:
            logger.warning(f"Criterion {criterion['id']} took {row['seconds']}s, budget {criterion['budget']}s")
        rows.append(row)

    emit(args, {'criteria': rows, 'passed': status == EXIT_OK}, rows)
    if status != EXIT_OK:
        logger.error(f"{sum(not row['passed'] for row in rows)} of {len(rows)} criteria failed")
    return status


# Oracle commands

def _oracle_q(args: argparse.Namespace, t: FieldTable) -> Dict[str, Any]:
    elements = build_Q(args.n, t)
    relations = all(block_relations_hold(t, m.array(), args.n) for m in elements)
    if not relations:
        _fail(f"block relations fail on Q({2 * args.n + 1},{t.q})", [])
    return {'n': args.n, 'q': t.q, 'order': len(elements), 'block_relations': relations}


def _oracle_coset(args: argparse.Namespace, t: FieldTable) -> Dict[str, Any]:
    fam = CosetFamily(_sign(args), args.n, args.i, t.q)
    enumeration = enumerate_double_coset(fam, t)
    profile = cell_profile(CodeSpec(CodeFamily.O, fam.sign, fam.n, fam.q, fam.i), t)
    histogram_ok = tuple(enumeration.trace_histogram[b] for b in t.elements) == profile.sizes
    counts_ok = all(trace_count_identity(enumeration, t, beta) for beta in t.elements)
    if not (histogram_ok and counts_ok):
        _fail(f"trace histogram of {fam} disagrees with the closed form",
              [{'enumerated': jsonable(enumeration.trace_histogram), 'closed_form': jsonable(profile.as_dict())}])
    return {'family': fam.sign, 'n': fam.n, 'i': fam.i, 'q': fam.q, 'size': enumeration.size,
            'histogram': enumeration.trace_histogram, 'histogram_matches': histogram_ok,
            'trace_count_identity': counts_ok}


def _oracle_o3(args: argparse.Namespace, t: FieldTable) -> Dict[str, Any]:
    elements = enumerate_O3(t, workers=args.workers, exhaustive=args.exhaustive)
    expected = 2 * (t.q * (t.q - 1) + t.q * t.q * (t.q - 1))
    return {'q': t.q, 'order': len(elements), 'expected': expected}


def _oracle_code(args: argparse.Namespace, t: FieldTable) -> Dict[str, Any]:
    fam = CosetFamily(_sign(args), args.n, args.i, t.q)
    code = explicit_code(fam, t)
    spec = CodeSpec(CodeFamily.O, fam.sign, fam.n, fam.q, fam.i)
    dual = dual_weights_by_enumeration(code)
    payload = {'code': spec.label(), 'length': code.length, 'dual_words': len(code.dual_words),
               'dual_weights': dual, 'dual_matches': dual == dual_distribution(spec, t)}
    if code.kernel_words is not None:
        kernel = kernel_weight_distribution(code)
        predicted = code_weight_counts(spec, t, min(code.length, 6))
        payload['kernel_words'] = len(code.kernel_words)
        payload['kernel_weights'] = kernel
        payload['kernel_matches'] = all(kernel.get(j, 0) == predicted[j] for j in range(len(predicted)))
    if not payload['dual_matches'] or not payload.get('kernel_matches', True):
        _fail(f"explicit code {spec.label()} disagrees with the closed forms", [jsonable(payload)])
    return payload


def _oracle_expsum(args: argparse.Namespace, t: FieldTable) -> Dict[str, Any]:
    fam = CosetFamily(_sign(args), args.n, args.i, t.q)
    enumeration = enumerate_double_coset(fam, t)
    sums = {}
    for a in t.nonzero():
        enumerated = coset_exp_sum(enumeration, t, a)
        closed = double_coset_exp_sum(fam, t, a)
        sums[a] = {'enumerated': enumerated, 'closed_form': closed, 'match': enumerated == closed}
    if not all(entry['match'] for entry in sums.values()):
        _fail(f"exponential sums over {fam} disagree with the closed form", [jsonable(sums)])
    return {'family': fam.sign, 'n': fam.n, 'i': fam.i, 'q': fam.q, 'sums': sums}


def _oracle_bruhat(args: argparse.Namespace, t: FieldTable) -> Dict[str, Any]:
    result = bruhat_partition_check(t, workers=args.workers)
    if not (result['disjoint'] and result['covers']):
        _fail(f"Bruhat cells do not partition O(3,{t.q})", [jsonable(result)])
    return result


ORACLE_JOBS: Dict[str, Callable[[argparse.Namespace, FieldTable], Dict[str, Any]]] = {
    'q': _oracle_q,
    'coset': _oracle_coset,
    'o3': _oracle_o3,
    'code': _oracle_code,
    'expsum': _oracle_expsum,
    'bruhat': _oracle_bruhat,
}


def cmd_oracle(args: argparse.Namespace) -> int:
    t = _field(args)
    payload = {'job': args.job}
    payload.update(ORACLE_JOBS[args.job](args, t))
    emit(args, payload)
    return EXIT_OK


def cmd_cache(args: argparse.Namespace) -> int:
    store = get_cache_store()
    if args.action == 'clear':
        clear_cache()
        removed = store.clear() if store is not None else 0
        emit(args, {'memory': 'cleared', 'disk_entries_removed': removed})
    else:
        emit(args, {'memory': get_cache_stats(), 'disk': store.get_stats() if store is not None else None})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--format', choices=['json', 'csv', 'xlsx'], default='json')
    common.add_argument('--output', default=None, help='Write the result here instead of stdout')
    common.add_argument('--workers', type=int, default=None, help='Worker threads (default KLOOSTERMAN_WORKERS or 1)')
    common.add_argument('--stats', action='store_true', help='Append timing and cache statistics')
    common.add_argument('--verbose', action='store_true')
    common.add_argument('--debug', action='store_true')

    with_field = argparse.ArgumentParser(add_help=False, parents=[common])
    with_field.add_argument('--field', default='3^1', help="Field spec such as 3^2 or 3^2/1,0,1")

    family = argparse.ArgumentParser(add_help=False)
    family.add_argument('--sign', choices=[s.value for s in Sign], default=None)
    family.add_argument('--n', type=int, default=1)
    family.add_argument('--i', type=int, choices=[1, 2], default=1)

    parser = argparse.ArgumentParser(prog='kloosterman', description='Ternary Kloosterman sums and their moments')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('field', parents=[with_field], help='Field parameters')
    p.set_defaults(handler=cmd_field)

    p = commands.add_parser('kloosterman', parents=[with_field], help='Every K(lambda;a)')
    p.set_defaults(handler=cmd_kloosterman)

    p = commands.add_parser('moments', parents=[with_field], help='Power moments of Kloosterman sums')
    p.add_argument('--kind', choices=[k.value for k in MomentKind], default=MomentKind.T12SK.value)
    p.add_argument('--h', type=int, default=None)
    p.add_argument('--h-max', type=int, default=6)
    p.set_defaults(handler=cmd_moments)

    p = commands.add_parser('delta', parents=[with_field], help='delta(m,q;beta) table')
    p.add_argument('--m', type=int, default=1)
    p.set_defaults(handler=cmd_delta)

    p = commands.add_parser('constants', parents=[with_field, family], help='A, B and N')
    p.set_defaults(handler=cmd_constants)

    for name, handler, help_text in [('weights', cmd_weights, 'Cell profile and C_j'),
                                     ('dual', cmd_dual, 'Dual codeword weights')]:
        p = commands.add_parser(name, parents=[with_field, family], help=help_text)
        p.add_argument('--family', choices=[f.value for f in CodeFamily], default=CodeFamily.O.value)
        p.add_argument('--variant', choices=[v.value for v in SpVariant], default=SpVariant.CONSISTENT.value)
        p.add_argument('--j-max', type=int, default=6)
        p.set_defaults(handler=handler)

    verify = commands.add_parser('verify', help='Verify identities exactly')
    checks = verify.add_subparsers(dest='check', required=True)

    p = checks.add_parser('recursion', parents=[with_field, family])
    p.add_argument('--h-max', type=int, default=1)
    p.add_argument('--use-direct', action='store_true', help='Feed direct moments into later steps')
    p.set_defaults(handler=cmd_verify_recursion)

    p = checks.add_parser('sk', parents=[with_field, family])
    p.add_argument('--h-max', type=int, default=1)
    p.set_defaults(handler=cmd_verify_sk)

    p = checks.add_parser('pless', parents=[with_field, family])
    p.add_argument('--family', choices=[f.value for f in CodeFamily], default=CodeFamily.O.value)
    p.add_argument('--h-max', type=int, default=4)
    p.set_defaults(handler=cmd_verify_pless)

    p = checks.add_parser('charsum', parents=[with_field])
    p.add_argument('--m-max', type=int, default=4)
    p.set_defaults(handler=cmd_verify_charsum)

    p = checks.add_parser('salie', parents=[with_field])
    p.add_argument('--h-max', type=int, default=5)
    p.set_defaults(handler=cmd_verify_salie)

    p = checks.add_parser('all', parents=[common])
    p.add_argument('--skip-slow', action='store_true', help='Skip the O(3,9) enumeration')
    p.set_defaults(handler=cmd_verify_all)

    p = commands.add_parser('oracle', parents=[with_field, family], help='Brute-force group and code checks')
    p.add_argument('--job', choices=sorted(ORACLE_JOBS), required=True)
    p.add_argument('--exhaustive', action='store_true', help='Scan all 3^9 matrices for O(3,3)')
    p.set_defaults(handler=cmd_oracle)

    p = commands.add_parser('cache', parents=[common], help='Inspect or clear the caches')
    p.add_argument('action', choices=['stats', 'clear'])
    p.set_defaults(handler=cmd_cache)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status"""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    configure_logging(args.verbose, args.debug)
    if args.workers is None:
        args.workers = default_workers()

    name = args.command if args.command != 'verify' else f"verify_{args.check}"
    handler = time_function(f"command_{name}")(args.handler)
    try:
        return handler(args)
    except IdentityFailure as e:
        logger.error(f"Identity failed: {e}")
        print(json.dumps({'error': str(e), 'trace': jsonable(e.trace)}, indent=2))
        return EXIT_IDENTITY
    except ParameterError as e:
        logger.error(f"Invalid parameters: {e}")
        print(json.dumps({'error': str(e)}), file=sys.stderr)
        return EXIT_USAGE
    except ConsistencyError as e:
        logger.error(f"Internal consistency check failed: {e}")
        print(json.dumps({'error': str(e)}), file=sys.stderr)
        return EXIT_CONSISTENCY
    except KloostermanError as e:
        logger.error(f"Unexpected toolkit error: {e}")
        return EXIT_CONSISTENCY


if __name__ == '__main__':
    sys.exit(main())
