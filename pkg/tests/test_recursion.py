from fractions import Fraction

import pytest

from char_sums import MomentKind, moment
from combinat import Sign
from errors import IdentityFailure, ParameterError
from finite_field import build_field
from recursion import (RecursionReport, assert_chain, dual_moment_check, leading_coefficient, pless_check,
                       pless_sum, sk_identity, sk_identity_sides, t12sk_chain, t12sk_recursive_even,
                       t12sk_recursive_odd)
from weight_dist import CodeSpec, code_weight_counts, dual_power_sum


def test_leading_coefficients():
    assert leading_coefficient(1) == Fraction(3, 2)
    assert leading_coefficient(2) == Fraction(-3, 4)
    assert leading_coefficient(3) == Fraction(9, 8)


def test_worked_odd_instance(f3):
    report = t12sk_recursive_odd(1, f3, 1, 1)
    assert report.lhs == report.rhs == Fraction(-3)
    assert report.t12sk_solved == -2
    assert report.direct == -2
    assert report.match
    assert report.printed_form_agrees


def test_printed_form_only_differs_for_the_plus_sign(f3):
    assert all(report.printed_form_agrees for report in t12sk_chain(Sign.MINUS, 1, f3, 3, 1))
    reports = t12sk_chain(Sign.PLUS, 2, f3, 2, 1)
    assert not reports[0].printed_form_agrees
    assert all(report.match for report in reports)
    assert_chain(reports)


def test_odd_recursion_second_step(f3):
    report = t12sk_recursive_odd(1, f3, 2, 2)
    assert report.match
    assert report.t12sk_solved == 2


def test_odd_recursion_is_independent_of_n(f3):
    assert t12sk_recursive_odd(3, f3, 1, 1).t12sk_solved == -2


def test_even_recursion(f3, f9):
    report = t12sk_recursive_even(2, f3, 1, 1)
    assert report.match
    assert report.t12sk_solved == 2
    assert t12sk_recursive_even(2, f9, 2, 2).match
    assert t12sk_recursive_even(4, f3, 1, 1).t12sk_solved == report.t12sk_solved


@pytest.mark.parametrize('n, i, r', [(1, 1, 1), (1, 2, 2), (3, 1, 2), (3, 2, 1), (1, 1, 3)])
def test_odd_chain_solves_every_moment(n, i, r):
    t = build_field(r)
    reports = t12sk_chain(Sign.MINUS, n, t, 6, i)
    assert_chain(reports)
    assert [rep.t12sk_solved for rep in reports] == [moment(t, MomentKind.T12SK, h) for h in range(1, 7)]


@pytest.mark.parametrize('n, i, r', [(2, 1, 1), (2, 2, 2), (4, 1, 1), (4, 2, 2)])
def test_even_chain_solves_every_moment(n, i, r):
    t = build_field(r)
    reports = t12sk_chain(Sign.PLUS, n, t, 4, i)
    assert_chain(reports)
    assert [rep.t12sk_solved for rep in reports] == [moment(t, MomentKind.T12SK, 2 * h) for h in range(1, 5)]
    assert [rep.moment_order for rep in reports] == [2, 4, 6, 8]


def test_direct_feed_gives_same_chain(f9):
    solved = t12sk_chain(Sign.MINUS, 1, f9, 4, 1)
    direct = t12sk_chain(Sign.MINUS, 1, f9, 4, 1, use_direct=True)
    assert [r.rhs for r in solved] == [r.rhs for r in direct]


def test_recursion_parity_and_depth(f3):
    with pytest.raises(ParameterError):
        t12sk_recursive_odd(2, f3, 1, 1)
    with pytest.raises(ParameterError):
        t12sk_recursive_even(3, f3, 1, 1)
    with pytest.raises(ParameterError):
        t12sk_chain(Sign.MINUS, 1, f3, 0, 1)
    with pytest.raises(ParameterError):
        t12sk_chain(Sign.PLUS, 2, f3, 7, 1)


def test_report_serialises_big_values_as_strings(f3):
    payload = t12sk_recursive_odd(1, f3, 1, 1).to_dict()
    assert payload['t12sk_solved'] == '-2'
    assert payload['lhs'] == '-3'
    assert payload['sign'] == 'minus'


def test_failed_step_carries_its_trace():
    bad = RecursionReport(sign=Sign.MINUS, n=1, q=3, i=1, h=1, lhs=Fraction(-3), rhs=Fraction(5),
                          t12sk_solved=Fraction(10, 3), direct=-2, match=False, printed_form_agrees=True,
                          trace=[{'term': 'first_sum', 'value': '0'}])
    with pytest.raises(IdentityFailure) as excinfo:
        assert_chain([bad])
    assert excinfo.value.trace[0]['h'] == 1
    assert excinfo.value.trace[1]['term'] == 'first_sum'


@pytest.mark.parametrize('sign, n, r, h', [('minus', 1, 1, 1), ('minus', 1, 2, 2), ('plus', 2, 1, 1),
                                           ('minus', 3, 1, 3), ('plus', 2, 2, 4), ('minus', 3, 2, 4)])
def test_sk_identities(sign, n, r, h):
    assert sk_identity(sign, n, build_field(r), h)


def test_sk_identity_minus_n1_q3_values(f3):
    sides = sk_identity_sides(Sign.MINUS, 1, f3, 1)
    assert sides['lhs'] == sides['rhs'] == 12


def test_pless_on_ternary_repetition_code():
    code = {0: 1, 3: 2}
    dual = {0: 1, 2: 6, 3: 2}
    for h in range(6):
        assert pless_check(code, dual, 1, 3, h, 3)


def test_pless_rejects_inconsistent_masses():
    with pytest.raises(ParameterError):
        pless_check({0: 1, 3: 1}, {0: 1, 2: 6, 3: 2}, 1, 3, 1, 3)


@pytest.mark.parametrize('spec', [CodeSpec('O', 'minus', 1, 3, 1), CodeSpec('O', 'minus', 1, 9, 2),
                                  CodeSpec('O', 'plus', 2, 3, 1), CodeSpec('Sp', 'plus', 2, 3)])
def test_dual_moments_match_pless_sum(spec):
    t = build_field(1 if spec.q == 3 else 2)
    for h in range(1, 5):
        assert dual_moment_check(spec, t, h)


def test_pless_sum_equals_dual_power_sum(f3):
    spec = CodeSpec('O', 'minus', 1, 3, 1)
    assert pless_sum(code_weight_counts(spec, f3, 2), spec.length, 2, 3) == dual_power_sum(spec, f3, 2) == 18
