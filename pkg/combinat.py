"""
Exact combinatorics for the double-coset codes
Stirling numbers, q-binomials, guarded multinomials and the A/B/N size constants
"""

import logging
from dataclasses import dataclass
from enum import Enum
from math import comb, factorial, prod
from typing import Tuple

from errors import ConsistencyError, ParameterError, require

logger = logging.getLogger(__name__)

MAX_STIRLING = 64


class Sign(str, Enum):
    """Which infinite family a double coset belongs to"""
    MINUS = 'minus'
    PLUS = 'plus'


@dataclass(frozen=True)
class CosetFamily:
    """DC_i^-(n,q) for odd n, DC_i^+(n,q) for even n"""
    sign: Sign
    n: int
    i: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, 'sign', Sign(self.sign))
        require(self.n >= 1, f"n={self.n} must be positive")
        require(self.i in (1, 2), f"i={self.i} must be 1 or 2")
        if self.sign is Sign.MINUS:
            require(self.n % 2 == 1, f"minus-sign double cosets need odd n, got n={self.n}")
        else:
            require(self.n % 2 == 0, f"plus-sign double cosets need even n, got n={self.n}")

    @property
    def bruhat_index(self) -> int:
        """r such that the double coset is Q sigma_r Q (i=1) or rho Q sigma_r Q (i=2)"""
        return self.n - 1 if self.sign is Sign.MINUS else self.n - 2


def exact_div(numerator: int, denominator: int, what: str = 'quotient') -> int:
    """Integer division that must leave no remainder"""
    quotient, remainder = divmod(numerator, denominator)
    if remainder:
        raise ConsistencyError(f"{what}: {numerator} is not divisible by {denominator}")
    return quotient


def stirling2(h: int, t: int) -> int:
    """S(h,t) from the alternating binomial sum"""
    require(0 <= h <= MAX_STIRLING, f"Stirling number S({h},{t}) outside supported range")
    if t < 0 or t > h:
        return 0
    total = sum((-1) ** (t - j) * comb(t, j) * j ** h for j in range(t + 1))
    return exact_div(total, factorial(t), f"S({h},{t})")


def qbinom(n: int, r: int, q: int) -> int:
    """Gaussian binomial [n; r]_q"""
    if r < 0 or r > n:
        return 0
    numerator = prod(q ** (n - j) - 1 for j in range(r))
    denominator = prod(q ** (r - j) - 1 for j in range(r))
    return exact_div(numerator, denominator, f"[{n};{r}]_{q}")


def falling_binom(c: int, k: int) -> int:
    """C(c, k) via c(c-1)...(c-k+1)/k!, for astronomically large c and small k"""
    if k < 0 or c < k:
        return 0
    return exact_div(prod(c - m for m in range(k)), factorial(k), f"C({c},{k})")


def multinom3(c: int, a: int, b: int) -> int:
    """c!/(a! b! (c-a-b)!) and 0 when a + b > c"""
    require(a >= 0 and b >= 0, "multinomial parts must be nonnegative")
    if a + b > c:
        return 0
    falling = prod(c - m for m in range(a + b))
    return exact_div(falling, factorial(a) * factorial(b), f"multinomial({c};{a},{b})")


def tail_binom(length: int, j: int, t: int) -> int:
    """C(N-j, N-t) computed as C(N-j, t-j)"""
    if t < j:
        return 0
    return falling_binom(length - j, t - j)


def gl_order(n: int, q: int) -> int:
    return prod(q ** n - q ** j for j in range(n))


def _q_power(numerator: int, q: int, what: str) -> int:
    return q ** exact_div(numerator, 4, f"exponent of {what}")


def constants(fam: CosetFamily) -> Tuple[int, int, int]:
    """A, B and N = A*B = |DC_i(n,q)| for the family's sign"""
    n, q = fam.n, fam.q
    if fam.sign is Sign.MINUS:
        a = (_q_power(5 * n * n - 1, q, 'A-') * qbinom(n, 1, q)
             * prod(q ** (2 * j - 1) - 1 for j in range(1, (n - 1) // 2 + 1)))
        b = (_q_power((n - 1) ** 2, q, 'B-') * (q ** n - 1)
             * prod(q ** (2 * j) - 1 for j in range(1, (n - 1) // 2 + 1)))
    else:
        a = (_q_power(5 * n * n - 2 * n, q, 'A+') * qbinom(n, 2, q)
             * prod(q ** (2 * j - 1) - 1 for j in range(1, (n - 2) // 2 + 1)))
        b = (_q_power((n - 2) ** 2, q, 'B+') * (q ** n - 1) * (q ** (n - 1) - 1)
             * prod(q ** (2 * j) - 1 for j in range(1, (n - 2) // 2 + 1)))
    return a, b, a * b


def bruhat_sizes(n: int, q: int, r: int) -> Tuple[int, int]:
    """(|B_r \\ Q(2n+1,q)|, |Q sigma_r Q|)"""
    if not (n >= 1 and 0 <= r <= n):
        raise ParameterError(f"Bruhat index r={r} outside 0..{n}")
    cosets = q ** comb(r + 1, 2) * qbinom(n, r, q)
    double_coset = (q ** (n * n) * prod(q ** j - 1 for j in range(1, n + 1))
                    * q ** comb(r, 2) * q ** r * qbinom(n, r, q))
    return cosets, double_coset


def orthogonal_order(n: int, q: int) -> int:
    """|O(2n+1,q)| as the sum of both rho-classes over every Bruhat stratum"""
    return sum(2 * bruhat_sizes(n, q, r)[1] for r in range(n + 1))
