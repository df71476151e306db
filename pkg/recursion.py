"""
Recursive moment formulas
Both families of recursions for the trace-nonzero square-argument moments, the SK identities
of the comparison codes and the Pless power moment identity, all in exact rationals
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Any, Dict, List, Mapping

from char_sums import MomentKind, moment
from combinat import Sign, constants, stirling2, tail_binom
from errors import IdentityFailure, ParameterError, require
from finite_field import FieldTable
from weight_dist import CodeFamily, CodeSpec, SpVariant, WeightCounts, code_weight_counts, dual_power_sum

logger = logging.getLogger(__name__)

MAX_ODD_H = 8
MAX_EVEN_H = 6


@dataclass
class RecursionReport:
    """One step h of a recursion, solved for the unknown moment"""
    sign: Sign
    n: int
    q: int
    i: int
    h: int
    lhs: Fraction
    rhs: Fraction
    t12sk_solved: Fraction
    direct: int
    match: bool
    printed_form_agrees: bool
    trace: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def moment_order(self) -> int:
        return self.h if self.sign is Sign.MINUS else 2 * self.h

    def to_dict(self) -> Dict[str, Any]:
        solved = self.t12sk_solved
        return {
            'sign': self.sign.value,
            'n': self.n,
            'q': self.q,
            'i': self.i,
            'h': self.h,
            'moment_order': self.moment_order,
            'lhs': str(self.lhs),
            'rhs': str(self.rhs),
            't12sk_solved': str(solved.numerator) if solved.denominator == 1 else str(solved),
            'direct': str(self.direct),
            'match': self.match,
            'printed_form_agrees': self.printed_form_agrees,
        }


def leading_coefficient(h: int) -> Fraction:
    """(-1)^{h+1} + 2^{-h}"""
    return Fraction((-1) ** (h + 1)) + Fraction(1, 2 ** h)


def pless_sum(weights: WeightCounts, length: int, h: int, q: int) -> Fraction:
    """q * sum_j (-1)^j C_j sum_t t! S(h,t) 3^{-t} 2^{t-j} C(N-j, N-t)

    Equals the h-th power sum of the dual codeword weights of a ternary code whose dual has q words.
    """
    require(len(weights) > min(length, h), f"weight counts must reach j={min(length, h)}")
    total = Fraction(0)
    for j in range(min(length, h) + 1):
        inner = Fraction(0)
        for t in range(j, h + 1):
            inner += factorial(t) * stirling2(h, t) * Fraction(2 ** (t - j), 3 ** t) * tail_binom(length, j, t)
        total += (-1) ** j * weights[j] * inner
    return q * total


def printed_tail(code: WeightCounts, comparison: WeightCounts, big_a: int, length: int, h: int, q: int) -> Fraction:
    """q A^{-h} sum_j (-1)^j (C_ij - C_j) sum_t t! S(h,t) 3^{h-t} 2^{t-h-j} C(N-j, N-t)

    comparison holds C_j of the printed Sp cells; for the plus sign these differ from the consistent ones.
    """
    total = Fraction(0)
    for j in range(min(length, h) + 1):
        inner = Fraction(0)
        for t in range(j, h + 1):
            inner += (factorial(t) * stirling2(h, t) * Fraction(3 ** (h - t)) * Fraction(2) ** (t - h - j)
                      * tail_binom(length, j, t))
        total += (-1) ** j * (code[j] - comparison[j]) * inner
    return q * total / Fraction(big_a) ** h


def _chain_codes(sign: Sign, n: int, t: FieldTable, i: int, depth: int):
    code = CodeSpec(CodeFamily.O, sign, n, t.q, i)
    comparison = CodeSpec(CodeFamily.SP, sign, n, t.q, i, SpVariant.CONSISTENT)
    printed = CodeSpec(CodeFamily.SP, sign, n, t.q, i, SpVariant.PRINTED)
    return (code, code_weight_counts(code, t, depth), code_weight_counts(comparison, t, depth),
            code_weight_counts(printed, t, depth))


def t12sk_chain(sign: Sign, n: int, t: FieldTable, h_max: int, i: int,
                use_direct: bool = False) -> List[RecursionReport]:
    """Evaluate the recursion for h = 1..h_max, feeding solved moments back into later steps

    Args:
        sign: minus (odd n, moments T12SK^h) or plus (even n, moments T12SK^{2h})
        n: Dimension parameter of O(2n+1,q)
        t: Field table for F_q
        h_max: Deepest step to evaluate
        i: Which double coset (1 or 2)
        use_direct: Feed directly computed moments instead of solved ones into later steps

    Returns:
        One RecursionReport per step
    """
    sign = Sign(sign)
    require(h_max >= 1, "recursions start at h=1")
    limit = MAX_ODD_H if sign is Sign.MINUS else MAX_EVEN_H
    require(h_max <= limit, f"h={h_max} beyond the supported depth {limit}")
    code, counts, comparison_counts, printed_counts = _chain_codes(sign, n, t, i, h_max)
    q = t.q
    big_a, big_b, length = constants(code.coset_family)
    minus = sign is Sign.MINUS

    # known[j] holds T12SK^j (minus) or T12SK^{2j} (plus)
    known: Dict[int, Fraction] = {}
    if not minus:
        known[0] = Fraction(moment(t, MomentKind.T12SK, 0))
    shifted_b = big_b - q * q + q
    raised_b = Fraction(big_b) + Fraction(q * q - q, 2)

    reports = []
    for h in range(1, h_max + 1):
        trace: List[Dict[str, Any]] = []
        first_sum = Fraction(0)
        start = 1 if minus else 0
        for j in range(start, h):
            if minus:
                term = leading_coefficient(j) * comb(h, j) * Fraction(big_b) ** (h - j) * known[j]
            else:
                term = comb(h, j) * ((-1) ** (j + 1) * Fraction(shifted_b) ** (h - j)
                                     + Fraction(1, 2 ** j) * raised_b ** (h - j)) * known[j]
            trace.append({'term': f'first_sum[j={j}]', 'value': str(term)})
            first_sum += term
        code_sum = pless_sum(counts, length, h, q)
        comparison_sum = pless_sum(comparison_counts, length, h, q)
        tail = Fraction(3, 2) ** h * (code_sum - comparison_sum) / Fraction(big_a) ** h
        printed = printed_tail(counts, printed_counts, big_a, length, h, q)
        rhs = -first_sum + tail
        coefficient = leading_coefficient(h)
        solved = rhs / coefficient
        order = h if minus else 2 * h
        direct = moment(t, MomentKind.T12SK, order)
        lhs = coefficient * direct
        match = lhs == rhs
        trace.extend([
            {'term': 'first_sum', 'value': str(-first_sum)},
            {'term': 'code_pless_sum', 'value': str(code_sum)},
            {'term': 'comparison_pless_sum', 'value': str(comparison_sum)},
            {'term': 'c_difference_tail', 'value': str(tail)},
            {'term': 'printed_tail', 'value': str(printed)},
        ])
        report = RecursionReport(sign=sign, n=n, q=q, i=i, h=h, lhs=lhs, rhs=rhs, t12sk_solved=solved,
                                 direct=direct, match=match, printed_form_agrees=printed == tail, trace=trace)
        if not report.printed_form_agrees:
            logger.warning(f"{code.label()} h={h}: printed tail {printed} differs from derived tail {tail}")
        logger.debug(f"{code.label()} h={h}: lhs={lhs} rhs={rhs} solved={solved}")
        known[h] = Fraction(direct) if use_direct else solved
        reports.append(report)
    return reports


def t12sk_recursive_odd(n: int, t: FieldTable, h: int, i: int, use_direct: bool = False) -> RecursionReport:
    """Solve the odd-n recursion for T12SK^h"""
    require(n % 2 == 1, f"odd recursion needs odd n, got {n}")
    return t12sk_chain(Sign.MINUS, n, t, h, i, use_direct)[-1]


def t12sk_recursive_even(n: int, t: FieldTable, h: int, i: int, use_direct: bool = False) -> RecursionReport:
    """Solve the even-n recursion for T12SK^{2h}"""
    require(n % 2 == 0, f"even recursion needs even n, got {n}")
    return t12sk_chain(Sign.PLUS, n, t, h, i, use_direct)[-1]


def assert_chain(reports: List[RecursionReport]) -> None:
    """Raise IdentityFailure carrying the first failing step's trace"""
    for report in reports:
        solved = report.t12sk_solved
        if not report.match or solved.denominator != 1:
            raise IdentityFailure(
                f"recursion failed at sign={report.sign.value} n={report.n} q={report.q} "
                f"i={report.i} h={report.h}: lhs={report.lhs} rhs={report.rhs}",
                trace=[report.to_dict()] + report.trace,
            )


def sk_identity_sides(sign: Sign, n: int, t: FieldTable, h: int, i: int = 1) -> Dict[str, Fraction]:
    """Both sides of the SK identity: direct SK moments against the comparison code's Pless sum"""
    sign = Sign(sign)
    require(h >= 1, "SK identities start at h=1")
    require(h <= (MAX_ODD_H if sign is Sign.MINUS else MAX_EVEN_H), f"h={h} beyond supported depth")
    spec = CodeSpec(CodeFamily.SP, sign, n, t.q, i, SpVariant.CONSISTENT)
    big_a, big_b, length = constants(spec.coset_family)
    q = t.q
    base = big_b if sign is Sign.MINUS else big_b - q * q + q
    step = 1 if sign is Sign.MINUS else 2
    total = sum((-1) ** j * comb(h, j) * base ** (h - j) * moment(t, MomentKind.SK, step * j)
                for j in range(h + 1))
    lhs = 2 * Fraction(2, 3) ** h * big_a ** h * total
    rhs = pless_sum(code_weight_counts(spec, t, h), length, h, q)
    return {'lhs': lhs, 'rhs': rhs}


def sk_identity(sign: Sign, n: int, t: FieldTable, h: int, i: int = 1) -> bool:
    sides = sk_identity_sides(sign, n, t, h, i)
    return sides['lhs'] == sides['rhs']


def pless_check(code_weights: Mapping[int, int], dual_weights: Mapping[int, int],
                dim_k: int, length_n: int, h: int, alphabet_q: int) -> bool:
    """Pless power moment identity for an [n,k] code B with dual distribution B^perp"""
    require(h >= 0, "Pless moments need h >= 0")
    if sum(code_weights.values()) != alphabet_q ** dim_k:
        raise ParameterError(f"code has {sum(code_weights.values())} words, expected {alphabet_q}^{dim_k}")
    if sum(dual_weights.values()) != alphabet_q ** (length_n - dim_k):
        raise ParameterError(f"dual has {sum(dual_weights.values())} words, expected {alphabet_q}^{length_n - dim_k}")
    lhs = sum(j ** h * count for j, count in code_weights.items())
    rhs = Fraction(0)
    for j in range(min(length_n, h) + 1):
        inner = Fraction(0)
        for t in range(j, h + 1):
            inner += (factorial(t) * stirling2(h, t) * Fraction(alphabet_q) ** (dim_k - t)
                      * (alphabet_q - 1) ** (t - j) * tail_binom(length_n, j, t))
        rhs += (-1) ** j * dual_weights.get(j, 0) * inner
    return lhs == rhs


def dual_moment_check(spec: CodeSpec, t: FieldTable, h: int) -> bool:
    """sum_a w(c(a))^h from Kloosterman sums equals the Pless sum over the code's weight counts"""
    require(h >= 1, "dual moment checks start at h=1")
    direct = dual_power_sum(spec, t, h)
    via_pless = pless_sum(code_weight_counts(spec, t, h), spec.length, h, t.q)
    return direct == via_pless
