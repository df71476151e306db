"""
Kloosterman sums and their moments over F_{3^r}
Complete and incomplete power moments, the counting function delta(m,q;beta), Salie's M_h,
the symmetric-matrix sums a_r and the closed-form exponential sums over double cosets
"""

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import product
from math import comb
from typing import Dict, List, Tuple

import numpy as np

from cache_manager import cached
from combinat import CosetFamily, Sign, constants, qbinom
from disk_cache import decode_int, decode_int_map, encode_int, encode_int_map
from errors import ensure, require
from finite_field import EisensteinInt, FieldTable, canonical_char, character_sum

logger = logging.getLogger(__name__)

MAX_MOMENT = 12
MAX_DELTA = 6


class MomentKind(str, Enum):
    """Which arguments a power moment runs over"""
    MK = 'MK'
    SK = 'SK'
    T0SK = 'T0SK'
    T12SK = 'T12SK'


@dataclass(frozen=True)
class DeltaTable:
    """delta(m,q;beta) for every beta, indexed by element index"""
    m: int
    values: Tuple[int, ...]

    def __getitem__(self, beta: int) -> int:
        return self.values[beta]

    def as_dict(self) -> Dict[int, int]:
        return dict(enumerate(self.values))


@cached('kloosterman', persist=True, encode=encode_int_map, decode=decode_int_map)
def kloosterman_table(t: FieldTable) -> Dict[int, int]:
    """K(lambda;a) for every a in F_q^*"""
    alphas = np.arange(1, t.q, dtype=np.int64)
    inverses = t.inv_table[alphas]
    table = {}
    for a in t.nonzero():
        arguments = t.add_table[alphas, t.mul_table[a, inverses]]
        table[a] = character_sum(t, arguments).to_int()
    logger.info(f"Computed {len(table)} Kloosterman sums over F_{t.q}")
    return table


def kloosterman(t: FieldTable, a: int) -> int:
    """K(lambda;a) = sum over alpha != 0 of lambda(alpha + a/alpha)"""
    require(a != 0, "Kloosterman sums need a nonzero argument")
    return kloosterman_table(t)[a]


def kloosterman_gl(t: FieldTable, deg: int, a: int) -> int:
    """Kloosterman sum over GL(deg,q), by the three-term recursion in deg"""
    require(a != 0, "Kloosterman sums need a nonzero argument")
    require(deg >= 0, f"GL degree {deg} must be nonnegative")
    q = t.q
    k = kloosterman(t, a)
    previous, current = 0, 1
    for s in range(1, deg + 1):
        previous, current = current, (q ** (s - 1) * current * k
                                      + q ** (2 * s - 2) * (q ** (s - 1) - 1) * previous)
    return current


def kloosterman_gl_by_enumeration(t: FieldTable, deg: int, a: int) -> int:
    """Sum of lambda(Tr w + a Tr w^{-1}) over w in GL(deg,q), for deg <= 2"""
    require(a != 0, "Kloosterman sums need a nonzero argument")
    require(0 <= deg <= 2 and t.q <= 9, "GL enumeration is limited to deg <= 2 and q <= 9")
    if deg == 0:
        return 1
    if deg == 1:
        return kloosterman(t, a)
    values = []
    for x, y, z, w in product(t.elements, repeat=4):
        det = t.sub(t.mul(x, w), t.mul(y, z))
        if det == 0:
            continue
        # Tr of adj(w)/det is (x + w)/det
        trace = t.add(x, w)
        values.append(t.add(trace, t.mul(a, t.mul(trace, t.inv(det)))))
    return character_sum(t, values).to_int()


def _alpha_plus_inverse_counts(t: FieldTable) -> np.ndarray:
    alphas = np.arange(1, t.q, dtype=np.int64)
    return np.bincount(t.add_table[alphas, t.inv_table[alphas]], minlength=t.q)


def _encode_delta(table: DeltaTable):
    return {'m': table.m, 'values': [str(v) for v in table.values]}


def _decode_delta(payload) -> DeltaTable:
    return DeltaTable(m=payload['m'], values=tuple(int(v) for v in payload['values']))


@cached('delta', persist=True, encode=_encode_delta, decode=_decode_delta)
def delta_table(t: FieldTable, m: int) -> DeltaTable:
    """delta(m,q;.) by m-fold additive convolution of the distribution of alpha + 1/alpha"""
    require(0 <= m <= MAX_DELTA, f"delta tables are supported for 0 <= m <= {MAX_DELTA}")
    current = np.zeros(t.q, dtype=object)
    current[0] = 1
    step = _alpha_plus_inverse_counts(t)
    for _ in range(m):
        following = np.zeros(t.q, dtype=object)
        for beta in np.nonzero(step)[0]:
            # add_table[:, beta] is a permutation, so the fancy-indexed add has no collisions
            following[t.add_table[:, beta]] += current * int(step[beta])
        current = following
    table = DeltaTable(m=m, values=tuple(int(v) for v in current))
    if m >= 1:
        ensure(sum(table.values) == (t.q - 1) ** m, f"delta({m}) mass is not (q-1)^{m}")
    return table


def delta_table_by_enumeration(t: FieldTable, m: int) -> DeltaTable:
    """Tuple-enumeration oracle for delta(m,q;.)"""
    require(0 <= m <= 2 and t.q <= 9, "delta enumeration is limited to m <= 2 and q <= 9")
    counts = [0] * t.q
    for alphas in product(t.nonzero(), repeat=m):
        beta = 0
        for alpha in alphas:
            beta = t.add(beta, t.add(alpha, t.inv(alpha)))
        counts[beta] += 1
    return DeltaTable(m=m, values=tuple(counts))


def delta1_via_squares(t: FieldTable, beta: int) -> int:
    """delta(1,q;beta) read off the square class of beta^2 - 1"""
    discriminant = t.sub(t.mul(beta, beta), 1)
    if discriminant == 0:
        return 1
    return 2 if t.is_square(discriminant) else 0


def _moment_arguments(t: FieldTable, kind: MomentKind) -> List[int]:
    if kind is MomentKind.MK:
        return list(t.nonzero())
    if kind is MomentKind.SK:
        return t.squares()
    if kind is MomentKind.T0SK:
        return [t.mul(a, a) for a in t.nonzero() if t.trace(a) == 0]
    return [t.mul(a, a) for a in t.nonzero() if t.trace(a) != 0]


@cached('moment', persist=True, encode=encode_int, decode=decode_int)
def moment(t: FieldTable, kind: MomentKind, h: int) -> int:
    """Direct power moment of the given kind"""
    kind = MomentKind(kind)
    require(0 <= h <= MAX_MOMENT, f"moment order h={h} outside 0..{MAX_MOMENT}")
    table = kloosterman_table(t)
    return sum(table[a] ** h for a in _moment_arguments(t, kind))


def salie_m(t: FieldTable, h: int) -> int:
    """M_h: h-tuples of units with sum 1 and sum of inverses 1, by a 2-D convolution"""
    require(0 <= h <= 6, f"M_h is supported for h <= 6, got {h}")
    q = t.q
    state = np.zeros((q, q), dtype=np.int64)
    state[0, 0] = 1
    for _ in range(h):
        following = np.zeros_like(state)
        for alpha in t.nonzero():
            rows = t.add_table[:, alpha]
            cols = t.add_table[:, t.inv(alpha)]
            following[np.ix_(rows, cols)] += state
        state = following
    return int(state[1, 1])


def salie_m_by_enumeration(t: FieldTable, h: int) -> int:
    """Tuple-enumeration oracle for M_h over a prime field"""
    require(t.r == 1 and 0 <= h <= 3, "M_h enumeration is limited to the prime field and h <= 3")
    if h == 0:
        return 0
    count = 0
    for alphas in product(t.nonzero(), repeat=h):
        total, inverse_total = 0, 0
        for alpha in alphas:
            total = t.add(total, alpha)
            inverse_total = t.add(inverse_total, t.inv(alpha))
        if total == 1 and inverse_total == 1:
            count += 1
    return count


def salie_rhs(t: FieldTable, h: int) -> int:
    require(h >= 1, "Salie's formula starts at h=1")
    q = t.q
    return q * q * salie_m(t, h - 1) - (q - 1) ** (h - 1) + 2 * (-1) ** (h - 1)


def salie_check(t: FieldTable, h: int) -> bool:
    """MK^h against q^2 M_{h-1} - (q-1)^{h-1} + 2(-1)^{h-1}"""
    require(1 <= h <= 5, f"Salie check supports 1 <= h <= 5, got {h}")
    lhs = moment(t, MomentKind.MK, h)
    rhs = salie_rhs(t, h)
    logger.info(f"Salie h={h} over F_{t.q}: MK={lhs}, rhs={rhs}")
    return lhs == rhs


def a_r_formula(t: FieldTable, r: int) -> int:
    require(0 <= r <= 8, f"a_r formula supports 0 <= r <= 8, got {r}")
    if r % 2:
        return 0
    q = t.q
    value = q ** (r * (r + 2) // 4)
    for j in range(1, r // 2 + 1):
        value *= q ** (2 * j - 1) - 1
    return value


def a_r_sum(t: FieldTable, r: int) -> int:
    """Brute-force sum of lambda(h^T B h) over nonsingular symmetric B and all vectors h"""
    require(0 <= r <= 2 and t.q <= 9, "a_r enumeration is limited to r <= 2 and q <= 9")
    if r == 0:
        return 1
    values = []
    if r == 1:
        for b in t.nonzero():
            values.extend(t.mul(b, t.mul(x, x)) for x in t.elements)
        return character_sum(t, values).to_int()
    two = t.from_int(2)
    for x, y, z in product(t.elements, repeat=3):
        if t.sub(t.mul(x, z), t.mul(y, y)) == 0:
            continue
        for h1, h2 in product(t.elements, repeat=2):
            form = t.add(t.add(t.mul(x, t.mul(h1, h1)), t.mul(two, t.mul(y, t.mul(h1, h2)))),
                         t.mul(z, t.mul(h2, h2)))
            values.append(form)
    return character_sum(t, values).to_int()


def nonsingular_symmetric_count(q: int, r: int) -> int:
    """Number of nonsingular symmetric r x r matrices, r <= 2"""
    require(0 <= r <= 2, "only r <= 2 is tabulated")
    return (1, q - 1, q ** 3 - q ** 2)[r]


def incomplete_moment_identity(t: FieldTable, m: int, beta: int) -> bool:
    """sum_a lambda(-a beta) K(a^2)^m == q delta(m,q;beta) - (q-1)^m"""
    require(0 <= m <= 4, f"m={m} outside 0..4")
    table = kloosterman_table(t)
    lhs = EisensteinInt()
    for a in t.nonzero():
        lhs = lhs + canonical_char(t, t.neg(t.mul(a, beta))) * table[t.mul(a, a)] ** m
    rhs = t.q * delta_table(t, m)[beta] - (t.q - 1) ** m
    return lhs.is_rational and lhs.to_int() == rhs


def char_delta_identity(t: FieldTable, m: int, a: int) -> bool:
    """sum_beta delta(m,q;beta) lambda(a beta) == K(a^2)^m"""
    require(a != 0, "character-delta identity needs a nonzero a")
    require(0 <= m <= 4, f"m={m} outside 0..4")
    delta = delta_table(t, m)
    lhs = EisensteinInt()
    for beta in t.elements:
        lhs = lhs + canonical_char(t, t.mul(a, beta)) * delta[beta]
    return lhs == EisensteinInt(kloosterman(t, t.mul(a, a)) ** m, 0)


def weil_bound_holds(t: FieldTable) -> bool:
    """K(lambda;a)^2 <= 4q for every a"""
    return all(k * k <= 4 * t.q for k in kloosterman_table(t).values())


def square_argument_grouping_holds(t: FieldTable, h: int) -> bool:
    """Grouping a by a^2 counts every square argument twice"""
    table = kloosterman_table(t)
    grouped: Dict[int, int] = {}
    for a in t.nonzero():
        square = t.mul(a, a)
        grouped[square] = grouped.get(square, 0) + 1
    ensure(all(c == 2 for c in grouped.values()), "squaring is not two-to-one on F_q^*")
    regrouped = sum(c * table[s] ** h for s, c in grouped.items())
    return regrouped == 2 * moment(t, MomentKind.SK, h)


def stratum_exp_sum(t: FieldTable, n: int, r: int, rho: bool, a: int) -> EisensteinInt:
    """Closed form of sum lambda(a Tr w) over Q sigma_r Q, or rho Q sigma_r Q when rho is set"""
    require(a != 0, "exponential sums need a nonzero a")
    require(0 <= r <= n, f"Bruhat index r={r} outside 0..{n}")
    if r % 2:
        return EisensteinInt()
    q = t.q
    scale = q ** comb(n + 1, 2) * qbinom(n, r, q) * q ** (r * n - r * r // 4)
    for j in range(1, r // 2 + 1):
        scale *= q ** (2 * j - 1) - 1
    prefactor = canonical_char(t, t.neg(a) if rho else a)
    return prefactor * (scale * kloosterman_gl(t, n - r, t.mul(a, a)))


def orthogonal_gauss_sum(t: FieldTable, n: int, a: int) -> EisensteinInt:
    """sum lambda(a Tr w) over O(2n+1,q), assembled stratum by stratum"""
    total = EisensteinInt()
    for r in range(n + 1):
        total = total + stratum_exp_sum(t, n, r, False, a) + stratum_exp_sum(t, n, r, True, a)
    return total


def double_coset_exp_sum(fam: CosetFamily, t: FieldTable, a: int) -> EisensteinInt:
    """sum lambda(a Tr w) over DC_i(n,q): lambda(+-a) A K(a^2), or lambda(+-a) A (K(a^2)^2 + q^2 - q)"""
    require(a != 0, "exponential sums need a nonzero a")
    require(fam.q == t.q, "family and field disagree on q")
    big_a, _, _ = constants(fam)
    k = kloosterman(t, t.mul(a, a))
    core = k if fam.sign is Sign.MINUS else k * k + t.q * t.q - t.q
    prefactor = canonical_char(t, a if fam.i == 1 else t.neg(a))
    return prefactor * (big_a * core)
