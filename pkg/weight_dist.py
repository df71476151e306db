"""
Weight distributions of the double-coset codes
Per-trace cell sizes, the constrained-composition DP for C_j, and dual codeword weights
"""

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Set, Tuple

import numpy as np

from char_sums import delta_table, kloosterman
from combinat import CosetFamily, Sign, constants, exact_div, multinom3
from errors import ConsistencyError, ParameterError, ensure, require
from finite_field import FieldTable

logger = logging.getLogger(__name__)

MAX_WEIGHT = 12


class CodeFamily(str, Enum):
    """Codes from the four double cosets (O) or the comparison codes of the SK identities (Sp)"""
    O = 'O'
    SP = 'Sp'


class SpVariant(str, Enum):
    """Cell sizes used for the Sp comparison code"""
    CONSISTENT = 'consistent'
    PRINTED = 'printed'


@dataclass(frozen=True)
class CodeSpec:
    """One code C(DC_i(n,q)) or C(DC(n,q))"""
    family: CodeFamily
    sign: Sign
    n: int
    q: int
    i: int = 1
    variant: SpVariant = SpVariant.CONSISTENT

    def __post_init__(self):
        object.__setattr__(self, 'family', CodeFamily(self.family))
        object.__setattr__(self, 'sign', Sign(self.sign))
        object.__setattr__(self, 'variant', SpVariant(self.variant))
        # parity and index validation
        self.coset_family

    @property
    def coset_family(self) -> CosetFamily:
        return CosetFamily(self.sign, self.n, self.i, self.q)

    @property
    def length(self) -> int:
        return constants(self.coset_family)[2]

    def label(self) -> str:
        sign = '-' if self.sign is Sign.MINUS else '+'
        if self.family is CodeFamily.O:
            return f"C(DC_{self.i}^{sign}({self.n},{self.q}))"
        return f"C(DC^{sign}({self.n},{self.q}))[{self.variant.value}]"


@dataclass(frozen=True)
class CellProfile:
    """N(beta): number of coordinates whose group element has trace beta"""
    field: str
    q: int
    sizes: Tuple[int, ...]
    length: int
    mass_ok: bool = True

    @property
    def mass(self) -> int:
        return sum(self.sizes)

    def as_dict(self) -> Dict[int, int]:
        return dict(enumerate(self.sizes))


@dataclass(frozen=True)
class WeightCounts:
    """C_0, ..., C_{j_max}"""
    prefix: Tuple[int, ...]

    def __getitem__(self, j: int) -> int:
        return self.prefix[j]

    def __len__(self):
        return len(self.prefix)


def _plus_cell(big_a: int, big_b: int, q: int, delta2: int, special: bool) -> int:
    if special:
        return exact_div(big_a * (big_b + q * delta2 + (q - 1) ** 3), q, "plus-sign cell size")
    return exact_div(big_a * (big_b + q * delta2 - 2 * q * q + 3 * q - 1), q, "plus-sign cell size")


def cell_profile(spec: CodeSpec, t: FieldTable) -> CellProfile:
    """Exact cell sizes N(beta) for every beta in F_q"""
    require(spec.q == t.q, f"code over q={spec.q} evaluated in F_{t.q}")
    q = t.q
    big_a, big_b, length = constants(spec.coset_family)
    minus = spec.sign is Sign.MINUS
    delta = delta_table(t, 1 if minus else 2)
    sizes: List[int] = []

    if spec.family is CodeFamily.O:
        shift = t.neg(1) if spec.i == 1 else 1
        special = 1 if spec.i == 1 else t.neg(1)
        for beta in t.elements:
            moved = t.add(beta, shift)
            if minus:
                sizes.append(exact_div(big_a * (big_b + q * delta[moved] - q + 1), q, "minus-sign cell size"))
            else:
                sizes.append(_plus_cell(big_a, big_b, q, delta[0] if beta == special else delta[moved], beta == special))
    elif minus:
        for beta in t.elements:
            sizes.append(exact_div(big_a * (big_b + q * delta[beta] - q + 1), q, "minus-sign cell size"))
    elif spec.variant is SpVariant.CONSISTENT:
        for beta in t.elements:
            sizes.append(_plus_cell(big_a, big_b, q, delta[beta], beta == 0))
    else:
        q4 = q ** 4
        for beta in t.elements:
            if beta == 0:
                sizes.append(q4 * (delta[0] + q ** 5 - q ** 2 - 3 * q + 3))
            else:
                sizes.append(q4 * (delta[beta] + q ** 5 - q ** 3 - q ** 2 - 2 * q + 3))

    ensure(all(size >= 0 for size in sizes), f"negative cell size in {spec.label()}")
    mass_ok = sum(sizes) == length
    if not mass_ok:
        if spec.variant is SpVariant.PRINTED and spec.family is CodeFamily.SP:
            logger.warning(f"{spec.label()}: cell sizes sum to {sum(sizes)}, code length is {length}")
        else:
            raise ConsistencyError(f"{spec.label()}: cell sizes sum to {sum(sizes)}, code length is {length}")
    return CellProfile(field=t.cache_key(), q=q, sizes=tuple(sizes), length=length, mass_ok=mass_ok)


def profile_from_histogram(t: FieldTable, histogram: Dict[int, int]) -> CellProfile:
    """Wrap an enumerated trace histogram as a profile"""
    sizes = tuple(int(histogram.get(beta, 0)) for beta in t.elements)
    return CellProfile(field=t.cache_key(), q=t.q, sizes=sizes, length=sum(sizes))


def _cell_steps(size: int, j_max: int) -> Dict[Tuple[int, int], int]:
    """Ways to place nu ones and mu twos in one cell, keyed by (nu + mu, (nu - mu) mod 3)"""
    steps: Dict[Tuple[int, int], int] = {}
    for used in range(j_max + 1):
        for nu in range(used + 1):
            mu = used - nu
            ways = multinom3(size, nu, mu)
            if ways:
                key = (used, (nu - mu) % 3)
                steps[key] = steps.get(key, 0) + ways
    return steps


def weight_counts(profile: CellProfile, t: FieldTable, j_max: int) -> WeightCounts:
    """C_j for j <= j_max: selections with sum(nu + mu) = j and sum((nu - mu) beta) = 0 in F_q"""
    require(0 <= j_max <= MAX_WEIGHT, f"j_max={j_max} outside 0..{MAX_WEIGHT}")
    require(profile.q == t.q, "profile and field disagree on q")
    q = t.q
    # table[w][d]: selections of weight w whose running F_q-sum is d
    table = [np.zeros(q, dtype=object) for _ in range(j_max + 1)]
    table[0][0] = 1
    for beta, size in enumerate(profile.sizes):
        if size == 0:
            continue
        steps = _cell_steps(size, j_max)
        following = [row.copy() for row in table]
        for (used, k), ways in steps.items():
            if used == 0:
                continue
            shift = t.add_table[:, t.mul(k, beta)]
            for w in range(j_max - used + 1):
                following[w + used][shift] += table[w] * ways
        table = following
    prefix = tuple(int(row[0]) for row in table)
    ensure(prefix[0] == 1, "C_0 must be 1")
    return WeightCounts(prefix=prefix)


def code_weight_counts(spec: CodeSpec, t: FieldTable, j_max: int) -> WeightCounts:
    return weight_counts(cell_profile(spec, t), t, j_max)


def _re_lambda(t: FieldTable, a: int) -> Fraction:
    return Fraction(1) if t.trace(a) == 0 else Fraction(-1, 2)


def dual_weight(spec: CodeSpec, t: FieldTable, a: int) -> int:
    """Hamming weight of the dual codeword c(a), from Kloosterman sums"""
    require(a != 0, "dual weights are defined for nonzero a")
    if spec.family is CodeFamily.SP and spec.variant is SpVariant.PRINTED:
        raise ParameterError("dual weights of the printed Sp profile have no closed form; use dual_weights_from_profile")
    big_a, big_b, length = constants(spec.coset_family)
    k = kloosterman(t, t.mul(a, a))
    core = k if spec.sign is Sign.MINUS else k * k + t.q * t.q - t.q
    # the comparison code's exponential sums carry no lambda(+-a) prefactor
    re = _re_lambda(t, a) if spec.family is CodeFamily.O else Fraction(1)
    weight = Fraction(2, 3) * big_a * (big_b - re * core)
    ensure(weight.denominator == 1, f"dual weight {weight} of {spec.label()} is not an integer")
    weight = int(weight)
    ensure(0 <= weight <= length, f"dual weight {weight} outside 0..{length}")
    return weight


def dual_weights_from_profile(profile: CellProfile, t: FieldTable, a: int) -> int:
    """Number of coordinates with tr(a beta) != 0, read off the cell sizes"""
    return sum(size for beta, size in enumerate(profile.sizes)
               if size and t.trace(t.mul(a, beta)) != 0)


def dual_distribution(spec: CodeSpec, t: FieldTable) -> Dict[int, int]:
    """Weight histogram of the whole dual code (q words)"""
    counts = Counter(dual_weight(spec, t, a) for a in t.nonzero())
    counts[0] += 1
    ensure(sum(counts.values()) == t.q, "dual code does not have q words")
    return dict(sorted(counts.items()))


def dual_power_sum(spec: CodeSpec, t: FieldTable, h: int) -> int:
    """sum over a != 0 of w(c(a))^h"""
    return sum(dual_weight(spec, t, a) ** h for a in t.nonzero())


def predicted_zero_cells(spec: CodeSpec, t: FieldTable) -> Set[int]:
    """Cells that vanish: only n=1 minus-sign O-codes have them, where beta^2 -+ 2beta is a nonsquare"""
    if spec.family is not CodeFamily.O or spec.sign is not Sign.MINUS or spec.n != 1:
        return set()
    two = t.from_int(2)
    zeros = set()
    for beta in t.elements:
        linear = t.mul(two, beta)
        value = t.sub(t.mul(beta, beta), linear) if spec.i == 1 else t.add(t.mul(beta, beta), linear)
        if value != 0 and not t.is_square(value):
            zeros.add(beta)
    return zeros
