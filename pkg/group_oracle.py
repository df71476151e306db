"""
Group enumeration oracle
Explicit matrices for Q(2n+1,q), rho, sigma_r, the double cosets, O(3,q) and the tiny kernel codes
that the closed-form modules are checked against
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from char_sums import double_coset_exp_sum
from combinat import CosetFamily, bruhat_sizes, constants, gl_order
from errors import ConsistencyError, ParameterError, ensure, require
from finite_field import EisensteinInt, FieldTable, canonical_char
from performance_monitor import time_function
from task_queue import VerificationQueue

logger = logging.getLogger(__name__)

ORACLE_SCALES = {(1, 3), (1, 9), (2, 3)}
KERNEL_LENGTH_LIMIT = 8


@dataclass(frozen=True)
class MatrixGF:
    """Square matrix over F_q, entries row-major as element indices"""
    dim: int
    entries: Tuple[int, ...]

    @classmethod
    def from_array(cls, array: np.ndarray) -> 'MatrixGF':
        return cls(dim=array.shape[0], entries=tuple(int(x) for x in array.ravel()))

    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.int64).reshape(self.dim, self.dim)

    def encode(self) -> bytes:
        return encode_array(self.array())

    def __getitem__(self, index: Tuple[int, int]) -> int:
        row, col = index
        return self.entries[row * self.dim + col]


@dataclass
class CosetEnumeration:
    """Explicit elements of one double coset with their trace histogram"""
    family: CosetFamily
    elements: List[MatrixGF]
    trace_histogram: Dict[int, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.elements)


@dataclass
class ExplicitCode:
    """Kernel code of the trace vector and its dual, coordinates in canonical element order"""
    family: CosetFamily
    trace_vector: Tuple[int, ...]
    dual_words: Dict[int, Tuple[int, ...]]
    kernel_words: Optional[List[Tuple[int, ...]]] = None

    @property
    def length(self) -> int:
        return len(self.trace_vector)


def encode_array(array: np.ndarray) -> bytes:
    """Big-endian 16-bit encoding, so byte order sorts like the entries"""
    return np.ascontiguousarray(array, dtype='>u2').tobytes()


def check_scale(n: int, t: FieldTable) -> None:
    if (n, t.q) not in ORACLE_SCALES:
        raise ParameterError(f"oracle enumeration limited to (n,q) in {sorted(ORACLE_SCALES)}, got ({n},{t.q})")


# Small-matrix arithmetic on index arrays

def mat_mul(t: FieldTable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product of an a x b and a b x c matrix over F_q"""
    products = t.mul_table[x[:, :, None], y[None, :, :]]
    out = products[:, 0, :]
    for j in range(1, products.shape[1]):
        out = t.add_table[out, products[:, j, :]]
    return out


def mat_add(t: FieldTable, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return t.add_table[x, y]


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.int64)


def mat_inv(t: FieldTable, x: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse; raises ParameterError for singular input"""
    dim = x.shape[0]
    work = [[int(v) for v in row] + [1 if k == r else 0 for k in range(dim)] for r, row in enumerate(x)]
    for col in range(dim):
        pivot = next((r for r in range(col, dim) if work[r][col] != 0), None)
        if pivot is None:
            raise ParameterError("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        scale = t.inv(work[col][col])
        work[col] = [t.mul(scale, v) for v in work[col]]
        for r in range(dim):
            if r != col and work[r][col] != 0:
                factor = work[r][col]
                work[r] = [t.sub(v, t.mul(factor, p)) for v, p in zip(work[r], work[col])]
    return np.array([row[dim:] for row in work], dtype=np.int64)


def mat_trace(t: FieldTable, x: np.ndarray) -> int:
    total = 0
    for k in range(x.shape[0]):
        total = t.add(total, int(x[k, k]))
    return total


def j_matrix(n: int) -> np.ndarray:
    """Gram matrix [[0, 1_n, 0], [1_n, 0, 0], [0, 0, 1]]"""
    dim = 2 * n + 1
    j = np.zeros((dim, dim), dtype=np.int64)
    for k in range(n):
        j[k, n + k] = 1
        j[n + k, k] = 1
    j[2 * n, 2 * n] = 1
    return j


def rho_matrix(t: FieldTable, n: int) -> np.ndarray:
    rho = identity(2 * n + 1)
    rho[2 * n, 2 * n] = t.neg(1)
    return rho


def sigma_matrix(n: int, r: int) -> np.ndarray:
    """Swaps e_k and e_{n+k} for k < r"""
    require(0 <= r <= n, f"sigma_r needs 0 <= r <= n, got r={r}")
    sigma = identity(2 * n + 1)
    for k in range(r):
        sigma[k, k] = 0
        sigma[n + k, n + k] = 0
        sigma[k, n + k] = 1
        sigma[n + k, k] = 1
    return sigma


def is_orthogonal(t: FieldTable, w: np.ndarray, n: int) -> bool:
    """t(w) J w == J"""
    gram = j_matrix(n)
    return bool((mat_mul(t, mat_mul(t, w.T, gram), w) == gram).all())


def block_relations_hold(t: FieldTable, w: np.ndarray, n: int) -> bool:
    """The six block relations characterising O(2n+1,q)"""
    a, b, e = w[:n, :n], w[:n, n:2 * n], w[:n, 2 * n:]
    c, d, f = w[n:2 * n, :n], w[n:2 * n, n:2 * n], w[n:2 * n, 2 * n:]
    g, h, i = w[2 * n:, :n], w[2 * n:, n:2 * n], w[2 * n:, 2 * n:]

    def tsum(*terms):
        total = terms[0]
        for term in terms[1:]:
            total = mat_add(t, total, term)
        return total

    def m(x, y):
        return mat_mul(t, x, y)

    zero_n = np.zeros((n, n), dtype=np.int64)
    zero_col = np.zeros((n, 1), dtype=np.int64)
    relations = [
        (tsum(m(a.T, c), m(c.T, a), m(g.T, g)), zero_n),
        (tsum(m(b.T, d), m(d.T, b), m(h.T, h)), zero_n),
        (tsum(m(a.T, d), m(c.T, b), m(g.T, h)), identity(n)),
        (tsum(m(e.T, f), m(f.T, e), m(i, i)), identity(1)),
        (tsum(m(a.T, f), m(c.T, e), m(g.T, i)), zero_col),
        (tsum(m(b.T, f), m(d.T, e), m(h.T, i)), zero_col),
    ]
    return all((lhs == rhs).all() for lhs, rhs in relations)


def _gl_matrices(t: FieldTable, n: int) -> Iterable[np.ndarray]:
    for entries in product(t.elements, repeat=n * n):
        candidate = np.asarray(entries, dtype=np.int64).reshape(n, n)
        if n == 1:
            if entries[0] != 0:
                yield candidate
            continue
        det = t.sub(t.mul(entries[0], entries[3]), t.mul(entries[1], entries[2]))
        if det != 0:
            yield candidate


def _unipotent_parts(t: FieldTable, n: int) -> Iterable[np.ndarray]:
    """[[1, B, -t(h)], [0, 1, 0], [0, h, 1]] with B + t(B) + t(h) h = 0"""
    upper_pairs = [(r, c) for r in range(n) for c in range(r + 1, n)]
    for h in product(t.elements, repeat=n):
        for free in product(t.elements, repeat=len(upper_pairs)):
            b = np.zeros((n, n), dtype=np.int64)
            for k in range(n):
                # 2 B_kk + h_k^2 = 0 forces B_kk = h_k^2 in characteristic 3
                b[k, k] = t.mul(h[k], h[k])
            for (r, c), value in zip(upper_pairs, free):
                b[r, c] = value
                b[c, r] = t.neg(t.add(value, t.mul(h[r], h[c])))
            u = identity(2 * n + 1)
            u[:n, n:2 * n] = b
            for k in range(n):
                u[k, 2 * n] = t.neg(h[k])
                u[2 * n, n + k] = h[k]
            yield u


def _build_q_arrays(n: int, t: FieldTable) -> List[np.ndarray]:
    elements = []
    for a in _gl_matrices(t, n):
        levi = identity(2 * n + 1)
        levi[:n, :n] = a
        levi[n:2 * n, n:2 * n] = mat_inv(t, a).T
        for u in _unipotent_parts(t, n):
            w = mat_mul(t, levi, u)
            ensure(is_orthogonal(t, w, n), "parametrized element of Q is not orthogonal")
            elements.append(w)
    return elements


def build_Q(n: int, t: FieldTable) -> List[MatrixGF]:
    """Every element of Q(2n+1,q) from its Levi/unipotent parametrization"""
    check_scale(n, t)
    elements = sorted((MatrixGF.from_array(w) for w in _build_q_arrays(n, t)), key=MatrixGF.encode)
    expected = gl_order(n, t.q) * t.q ** (n * (n + 1) // 2)
    ensure(len({m.encode() for m in elements}) == expected, f"|Q({2 * n + 1},{t.q})| != {expected}")
    logger.info(f"Enumerated Q({2 * n + 1},{t.q}): {len(elements)} elements")
    return elements


def _closure(t: FieldTable, start: Dict[bytes, np.ndarray], generators: List[np.ndarray]) -> Dict[bytes, np.ndarray]:
    """Close a set under left multiplication by the generators"""
    members = dict(start)
    frontier = list(start.values())
    while frontier:
        following = []
        for x in frontier:
            for g in generators:
                y = mat_mul(t, g, x)
                key = encode_array(y)
                if key not in members:
                    members[key] = y
                    following.append(y)
        frontier = following
    return members


def q_generators(n: int, t: FieldTable) -> List[np.ndarray]:
    """Greedy generating set: keep each element not yet in the subgroup generated so far"""
    check_scale(n, t)
    group = sorted(_build_q_arrays(n, t), key=encode_array)
    one = identity(2 * n + 1)
    subgroup = {encode_array(one): one}
    generators: List[np.ndarray] = []
    for element in group:
        if encode_array(element) in subgroup:
            continue
        generators.append(element)
        subgroup = _closure(t, subgroup, generators)
        if len(subgroup) == len(group):
            break
    ensure(len(subgroup) == len(group), "generators do not span Q")
    logger.debug(f"Q({2 * n + 1},{t.q}) generated by {len(generators)} elements")
    return generators


def enumerate_bruhat_cell(n: int, r: int, t: FieldTable, rho: bool = False) -> List[np.ndarray]:
    """Q sigma_r Q (or rho Q sigma_r Q) as the left-multiplication closure of sigma_r Q"""
    check_scale(n, t)
    sigma = sigma_matrix(n, r)
    start = {}
    for y in _build_q_arrays(n, t):
        w = mat_mul(t, sigma, y)
        start[encode_array(w)] = w
    cell = _closure(t, start, q_generators(n, t))
    if rho:
        twist = rho_matrix(t, n)
        twisted = (mat_mul(t, twist, w) for w in cell.values())
        cell = {encode_array(w): w for w in twisted}
    expected = bruhat_sizes(n, t.q, r)[1]
    if len(cell) != expected:
        raise ConsistencyError(f"Bruhat cell r={r} rho={rho} has {len(cell)} elements, expected {expected}")
    return [cell[key] for key in sorted(cell)]


def _histogram(t: FieldTable, arrays: Iterable[np.ndarray]) -> Dict[int, int]:
    counts = Counter(mat_trace(t, w) for w in arrays)
    return {beta: counts.get(beta, 0) for beta in t.elements}


@time_function('enumerate_double_coset')
def enumerate_double_coset(fam: CosetFamily, t: FieldTable) -> CosetEnumeration:
    """DC_i(n,q) explicitly, with its trace histogram"""
    require(fam.q == t.q, "family and field disagree on q")
    check_scale(fam.n, t)
    arrays = enumerate_bruhat_cell(fam.n, fam.bruhat_index, t, rho=fam.i == 2)
    expected = constants(fam)[2]
    if len(arrays) != expected:
        raise ConsistencyError(f"{fam} has {len(arrays)} elements, expected {expected}")
    enumeration = CosetEnumeration(family=fam,
                                   elements=[MatrixGF.from_array(w) for w in arrays],
                                   trace_histogram=_histogram(t, arrays))
    logger.info(f"Enumerated {fam.sign.value} n={fam.n} i={fam.i} q={t.q}: {enumeration.size} elements")
    return enumeration


def _bilinear_rows(t: FieldTable, vectors: np.ndarray, x: np.ndarray) -> np.ndarray:
    """B(x, v) = x1 v2 + x2 v1 + x3 v3 for every row v"""
    first = t.mul_table[x[0], vectors[:, 1]]
    second = t.mul_table[x[1], vectors[:, 0]]
    third = t.mul_table[x[2], vectors[:, 2]]
    return t.add_table[t.add_table[first, second], third]


def all_vectors(t: FieldTable) -> np.ndarray:
    return np.array(list(product(t.elements, repeat=3)), dtype=np.int64)


def quadratic_values(t: FieldTable, vectors: np.ndarray) -> np.ndarray:
    """B(v, v) = 2 v1 v2 + v3^2 for every row v"""
    cross = t.mul_table[vectors[:, 0], vectors[:, 1]]
    return t.add_table[t.add_table[cross, cross], t.mul_table[vectors[:, 2], vectors[:, 2]]]


def o3_partition(t: FieldTable, first_column: Sequence[int]) -> List[MatrixGF]:
    """Orthogonal 3 x 3 matrices with the given first column"""
    vectors = all_vectors(t)
    c0 = np.asarray(first_column, dtype=np.int64)
    found = []
    norms = quadratic_values(t, vectors)
    with_c0 = _bilinear_rows(t, vectors, c0)
    for c1 in vectors[(norms == 0) & (with_c0 == 1)]:
        with_c1 = _bilinear_rows(t, vectors, c1)
        for c2 in vectors[(norms == 1) & (with_c0 == 0) & (with_c1 == 0)]:
            w = np.stack([c0, c1, c2], axis=1)
            found.append(MatrixGF.from_array(w))
    return found


def isotropic_first_columns(t: FieldTable) -> List[Tuple[int, ...]]:
    vectors = all_vectors(t)
    norms = quadratic_values(t, vectors)
    return [tuple(int(x) for x in v) for v, norm in zip(vectors, norms) if v.any() and norm == 0]


@time_function('enumerate_o3')
def enumerate_O3(t: FieldTable, workers: int = 1, exhaustive: bool = False) -> List[MatrixGF]:
    """All of O(3,q) in canonical order

    By default each isotropic first column is completed independently on the verification queue.
    exhaustive=True instead tests every one of the 3^9 matrices for orthogonality; that literal scan
    is only run for q=3, where it is cheap enough to cross-check the partitioned enumeration.
    """
    require(t.q in (3, 9), f"O(3,q) enumeration supports q in (3, 9), got {t.q}")
    if exhaustive:
        require(t.q == 3, "the exhaustive 3^9 scan is only offered for q=3")
        elements = []
        for entries in product(t.elements, repeat=9):
            w = np.asarray(entries, dtype=np.int64).reshape(3, 3)
            if is_orthogonal(t, w, 1):
                elements.append(MatrixGF.from_array(w))
    else:
        queue = VerificationQueue(workers=workers)
        for column in isotropic_first_columns(t):
            queue.submit(f"o3:{column}", o3_partition, t, column)
        elements = [m for result in queue.run() for m in result.unwrap()]
    elements.sort(key=MatrixGF.encode)
    expected = sum(2 * bruhat_sizes(1, t.q, r)[1] for r in range(2))
    if len(elements) != expected:
        raise ConsistencyError(f"|O(3,{t.q})| = {len(elements)}, expected {expected}")
    return elements


def bruhat_partition_check(t: FieldTable, workers: int = 1) -> Dict[str, object]:
    """O(3,q) is the disjoint union of Q sigma_r Q and rho Q sigma_r Q for r = 0, 1"""
    group = {m.encode() for m in enumerate_O3(t, workers)}
    seen: set = set()
    cells = {}
    disjoint = True
    for r in range(2):
        for rho in (False, True):
            cell = {encode_array(w) for w in enumerate_bruhat_cell(1, r, t, rho)}
            disjoint = disjoint and not (cell & seen)
            seen |= cell
            cells[f"{'rho ' if rho else ''}Q sigma_{r} Q"] = len(cell)
    return {'order': len(group), 'cells': cells, 'disjoint': disjoint, 'covers': seen == group}


def coset_exp_sum(enum: CosetEnumeration, t: FieldTable, a: int) -> EisensteinInt:
    """sum over the enumerated coset of lambda(a Tr w)"""
    require(a != 0, "exponential sums need a nonzero a")
    total = EisensteinInt()
    for beta, count in enum.trace_histogram.items():
        if count:
            total = total + canonical_char(t, t.mul(a, beta)) * count
    return total


def exp_sums_match(enum: CosetEnumeration, t: FieldTable) -> bool:
    """Enumerated sums against the closed forms for every a != 0"""
    return all(coset_exp_sum(enum, t, a) == double_coset_exp_sum(enum.family, t, a) for a in t.nonzero())


def trace_count_identity(enum: CosetEnumeration, t: FieldTable, beta: int) -> bool:
    """q N(beta) == |DC| + sum_a lambda(-a beta) S(a)"""
    total = EisensteinInt(enum.size, 0)
    for a in t.nonzero():
        total = total + canonical_char(t, t.neg(t.mul(a, beta))) * coset_exp_sum(enum, t, a)
    return total == EisensteinInt(t.q * enum.trace_histogram[beta], 0)


def explicit_code(fam: CosetFamily, t: FieldTable, with_kernel: Optional[bool] = None) -> ExplicitCode:
    """Kernel code {u in F_3^N : u . v = 0} and dual words (tr(a Tr g_k))_k for every a in F_q"""
    enumeration = enumerate_double_coset(fam, t)
    trace_vector = tuple(mat_trace(t, m.array()) for m in enumeration.elements)
    length = len(trace_vector)
    dual_words = {a: tuple(t.trace(t.mul(a, v)) for v in trace_vector) for a in t.elements}
    ensure(len(set(dual_words.values())) == t.q, "a -> c(a) is not injective")

    if with_kernel is None:
        with_kernel = length <= KERNEL_LENGTH_LIMIT
    kernel = None
    if with_kernel:
        require(length <= KERNEL_LENGTH_LIMIT, f"kernel enumeration needs length <= {KERNEL_LENGTH_LIMIT}")
        kernel = []
        for word in product(range(3), repeat=length):
            total = 0
            for u, v in zip(word, trace_vector):
                if u:
                    total = t.add(total, t.mul(u, v))
            if total == 0:
                kernel.append(word)
        # every kernel word is orthogonal over F_3 to every trace word
        for word in kernel:
            for dual in dual_words.values():
                ensure(sum(u * c for u, c in zip(word, dual)) % 3 == 0, "kernel word not orthogonal to trace code")
        ensure(len(kernel) * t.q == 3 ** length, "kernel and trace code are not mutual duals")
    return ExplicitCode(family=fam, trace_vector=trace_vector, dual_words=dual_words, kernel_words=kernel)


def hamming_weight(word: Sequence[int]) -> int:
    return sum(1 for x in word if x)


def kernel_weight_distribution(code: ExplicitCode) -> Dict[int, int]:
    require(code.kernel_words is not None, "kernel words were not enumerated")
    counts = Counter(hamming_weight(word) for word in code.kernel_words)
    return dict(sorted(counts.items()))


def dual_weights_by_enumeration(code: ExplicitCode) -> Dict[int, int]:
    counts = Counter(hamming_weight(word) for word in code.dual_words.values())
    return dict(sorted(counts.items()))
