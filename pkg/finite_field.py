"""
Finite field arithmetic for F_{3^r}
Dense add/mul tables, the trace to F_3, the canonical additive character and square classes
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from cache_manager import cached
from errors import ConstructionError, ConsistencyError, ParameterError, ensure, require

logger = logging.getLogger(__name__)

P = 3
MAX_DEGREE = 6

# Conway polynomials, most-significant coefficient first
DEFAULT_MODULI: Dict[int, Tuple[int, ...]] = {
    1: (1, 1),
    2: (1, 2, 2),
    3: (1, 0, 2, 1),
    4: (1, 2, 0, 0, 2),
    5: (1, 0, 0, 0, 2, 1),
    6: (1, 0, 2, 0, 1, 2, 2),
}

FIELD_SPEC_PATTERN = re.compile(r'^\s*3\s*\^\s*(\d+)\s*(?:/\s*([0-9,\s]+))?\s*$')


@dataclass(frozen=True)
class EisensteinInt:
    """Exact value a + b*omega with omega a primitive cube root of unity"""
    a: int = 0
    b: int = 0

    @classmethod
    def coerce(cls, value) -> 'EisensteinInt':
        if isinstance(value, EisensteinInt):
            return value
        if isinstance(value, int):
            return cls(value, 0)
        return NotImplemented

    @classmethod
    def from_trace_counts(cls, c0: int, c1: int, c2: int) -> 'EisensteinInt':
        """c0*1 + c1*omega + c2*omega^2, using omega^2 = -1 - omega"""
        return cls(c0 - c2, c1 - c2)

    def __add__(self, other):
        other = EisensteinInt.coerce(other)
        if other is NotImplemented:
            return other
        return EisensteinInt(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return EisensteinInt(-self.a, -self.b)

    def __sub__(self, other):
        other = EisensteinInt.coerce(other)
        if other is NotImplemented:
            return other
        return EisensteinInt(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = EisensteinInt.coerce(other)
        if other is NotImplemented:
            return other
        a, b, c, d = self.a, self.b, other.a, other.b
        return EisensteinInt(a * c - b * d, a * d + b * c - b * d)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        require(exponent >= 0, "EisensteinInt powers need a nonnegative exponent")
        result = EisensteinInt(1, 0)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def conjugate(self) -> 'EisensteinInt':
        return EisensteinInt(self.a - self.b, -self.b)

    def norm(self) -> int:
        return self.a * self.a - self.a * self.b + self.b * self.b

    def real_part(self) -> Fraction:
        return Fraction(2 * self.a - self.b, 2)

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def to_int(self) -> int:
        if self.b != 0:
            raise ConsistencyError(f"{self} is not a rational integer")
        return self.a

    def __str__(self):
        return f"{self.a}{self.b:+d}w"


ONE = EisensteinInt(1, 0)
OMEGA = EisensteinInt(0, 1)
OMEGA2 = EisensteinInt(-1, -1)
CUBE_ROOTS = (ONE, OMEGA, OMEGA2)


@dataclass(frozen=True)
class FieldParams:
    """Exponent, order and modulus (most-significant coefficient first) of F_{3^r}"""
    r: int
    q: int
    modulus: Tuple[int, ...]

    @property
    def spec(self) -> str:
        return format_field_spec(self)


def parse_field_spec(text: str) -> Tuple[int, Optional[Tuple[int, ...]]]:
    """Parse '3^r' or '3^r/c_r,...,c_0' into (r, modulus or None)"""
    match = FIELD_SPEC_PATTERN.match(text or '')
    if not match:
        raise ParameterError(f"Malformed field spec '{text}', expected 3^r or 3^r/c_r,...,c_0")
    r = int(match.group(1))
    modulus = None
    if match.group(2):
        try:
            modulus = tuple(int(c) for c in match.group(2).split(','))
        except ValueError:
            raise ParameterError(f"Malformed modulus in field spec '{text}'")
    return r, modulus


def format_field_spec(params: FieldParams) -> str:
    if params.modulus == DEFAULT_MODULI.get(params.r):
        return f"3^{params.r}"
    return f"3^{params.r}/" + ",".join(str(c) for c in params.modulus)


# Polynomials over F_3 below are coefficient lists, least-significant first.

def _trim(poly: List[int]) -> List[int]:
    while poly and poly[-1] == 0:
        poly.pop()
    return poly


def poly_rem(num: Sequence[int], den: Sequence[int]) -> List[int]:
    """Remainder of num modulo a monic den over F_3"""
    rem = _trim([c % P for c in num])
    den = _trim([c % P for c in den])
    ensure(bool(den) and den[-1] == 1, "poly_rem needs a monic divisor")
    while len(rem) >= len(den):
        lead = rem[-1]
        shift = len(rem) - len(den)
        for k, c in enumerate(den):
            rem[shift + k] = (rem[shift + k] - lead * c) % P
        _trim(rem)
    return rem


def find_factor(modulus: Sequence[int]) -> Optional[Tuple[int, ...]]:
    """Return a monic factor of degree 1..deg/2 (most-significant first), or None if irreducible"""
    low_first = list(reversed(modulus))
    degree = len(low_first) - 1
    for d in range(1, degree // 2 + 1):
        for tail in product(range(P), repeat=d):
            candidate = list(tail) + [1]
            if not poly_rem(low_first, candidate):
                return tuple(reversed(candidate))
    return None


def is_irreducible(modulus: Sequence[int]) -> bool:
    return find_factor(modulus) is None


class FieldTable:
    """Precomputed arithmetic for F_{3^r}; element index encodes coefficients base 3, constant term first"""

    def __init__(self, params: FieldParams):
        self.params = params
        self.r = params.r
        self.q = params.q
        q, r = self.q, self.r

        powers = P ** np.arange(r, dtype=np.int64)
        digits = (np.arange(q, dtype=np.int64)[:, None] // powers[None, :]) % P
        self._digits = digits
        self.add_table = (((digits[:, None, :] + digits[None, :, :]) % P) @ powers).astype(np.int64)
        self.neg_table = (((-digits) % P) @ powers).astype(np.int64)

        generator, exp_table = self._find_primitive()
        log_table = np.full(q, -1, dtype=np.int64)
        log_table[exp_table] = np.arange(q - 1, dtype=np.int64)
        self.generator = generator
        self.exp_table = exp_table
        self.log_table = log_table

        mul = np.zeros((q, q), dtype=np.int64)
        logs = log_table[1:]
        mul[1:, 1:] = exp_table[(logs[:, None] + logs[None, :]) % (q - 1)]
        self.mul_table = mul
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = exp_table[(-logs) % (q - 1)]
        self.inv_table = inv

        self.frob_table = mul[mul[np.arange(q), np.arange(q)], np.arange(q)]
        trace = np.arange(q, dtype=np.int64)
        current = np.arange(q, dtype=np.int64)
        for _ in range(1, r):
            current = self.frob_table[current]
            trace = self.add_table[trace, current]
        ensure(bool((trace < P).all()), "trace left F_3")
        self.trace_table = trace

        square = np.zeros(q, dtype=bool)
        square[1:] = (log_table[1:] % 2) == 0
        self.square_table = square

        for table in (self.add_table, self.neg_table, self.mul_table, self.inv_table,
                      self.frob_table, self.trace_table, self.square_table,
                      self.exp_table, self.log_table):
            table.setflags(write=False)
        logger.info(f"Built F_{q} with modulus {params.modulus}, generator index {generator}")

    def _mul_poly(self, x: int, y: int) -> int:
        """Schoolbook product used only while the tables are being built"""
        r = self.r
        low_modulus = list(reversed(self.params.modulus))
        xd = [int(c) for c in self._digits[x]]
        yd = [int(c) for c in self._digits[y]]
        full = [0] * (2 * r - 1)
        for i, a in enumerate(xd):
            if a:
                for j, b in enumerate(yd):
                    full[i + j] += a * b
        rem = poly_rem(full, low_modulus)
        return sum(c * P ** k for k, c in enumerate(rem))

    def _find_primitive(self) -> Tuple[int, np.ndarray]:
        q = self.q
        for g in range(1, q):
            powers = [1]
            x = g
            while x != 1:
                powers.append(x)
                x = self._mul_poly(x, g)
                if len(powers) > q - 1:
                    break
            if len(powers) == q - 1:
                return g, np.array(powers, dtype=np.int64)
        raise ConsistencyError(f"No primitive element in F_{q}; modulus {self.params.modulus} is not irreducible")

    def cache_key(self) -> str:
        return self.params.spec

    def __repr__(self):
        return f"FieldTable({self.params.spec})"

    @property
    def elements(self) -> range:
        return range(self.q)

    def nonzero(self) -> range:
        return range(1, self.q)

    def squares(self) -> List[int]:
        return [x for x in self.nonzero() if self.square_table[x]]

    def add(self, x: int, y: int) -> int:
        return int(self.add_table[x, y])

    def sub(self, x: int, y: int) -> int:
        return int(self.add_table[x, self.neg_table[y]])

    def neg(self, x: int) -> int:
        return int(self.neg_table[x])

    def mul(self, x: int, y: int) -> int:
        return int(self.mul_table[x, y])

    def inv(self, x: int) -> int:
        require(x != 0, "0 has no inverse")
        return int(self.inv_table[x])

    def pow(self, x: int, e: int) -> int:
        if x == 0:
            return 1 if e == 0 else 0
        return int(self.exp_table[(int(self.log_table[x]) * e) % (self.q - 1)])

    def frob(self, x: int) -> int:
        return int(self.frob_table[x])

    def from_int(self, n: int) -> int:
        """Image of the integer n in the prime field"""
        return n % P

    def trace(self, x: int) -> int:
        return int(self.trace_table[x])

    def is_square(self, x: int) -> bool:
        """Square class of a nonzero element; 0 reports False"""
        return bool(self.square_table[x])

    def trace_histogram(self, values: Optional[Iterable[int]] = None) -> List[int]:
        """Counts of trace 0, 1, 2 over values (default: the whole field)"""
        if values is None:
            values = np.arange(self.q)
        if not isinstance(values, np.ndarray):
            values = np.fromiter(values, dtype=np.int64)
        counts = np.bincount(self.trace_table[values], minlength=P)
        return [int(c) for c in counts]


def _field_key(r: int, modulus: Optional[Sequence[int]] = None) -> str:
    chosen = tuple(modulus) if modulus is not None else DEFAULT_MODULI.get(r)
    return f"field:{r}:{chosen}"


@cached('field', key_func=_field_key)
def build_field(r: int, modulus: Optional[Sequence[int]] = None) -> FieldTable:
    """Build (and memoize) the table for F_{3^r}

    Args:
        r: Extension degree, 1 <= r <= 6
        modulus: Monic degree-r polynomial, most-significant coefficient first; defaults to a Conway polynomial

    Returns:
        Immutable FieldTable
    """
    require(isinstance(r, int) and 1 <= r <= MAX_DEGREE, f"Extension degree r={r} outside 1..{MAX_DEGREE}")
    if modulus is None:
        modulus = DEFAULT_MODULI[r]
    modulus = tuple(int(c) % P for c in modulus)
    require(len(modulus) == r + 1, f"Modulus {modulus} does not have degree {r}")
    require(modulus[0] == 1, f"Modulus {modulus} is not monic")
    factor = find_factor(modulus)
    if factor is not None:
        raise ConstructionError(f"Modulus {modulus} is reducible over F_3: divisible by {factor}", factor)
    return FieldTable(FieldParams(r=r, q=P ** r, modulus=modulus))


def field_from_spec(text: str) -> FieldTable:
    r, modulus = parse_field_spec(text)
    return build_field(r, modulus)


def canonical_char(t: FieldTable, x: int) -> EisensteinInt:
    """lambda(x) = omega^{tr x}"""
    return CUBE_ROOTS[t.trace_table[x]]


def character_sum(t: FieldTable, values: Iterable[int]) -> EisensteinInt:
    """Sum of lambda over a multiset of field elements"""
    c0, c1, c2 = t.trace_histogram(values)
    return EisensteinInt.from_trace_counts(c0, c1, c2)
