"""Hidden sums on F_2^n built from alternating radical-ring products.

A product is stored by its values on basis pairs e_i . e_j (i < j); the
bilinear, symmetric, alternating extension is computed on demand. The
circle operation x o y = x + y + x.y is the hidden sum, and its translation
group consists of the affine maps tau_a(x) = x o a = x . kappa_a + a.
"""

from __future__ import annotations

import functools
import itertools
import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .gf2 import (
    AffineMap,
    BitMatrix,
    PermutationTable,
    _check_width,
    bits_of,
    bits_to_str,
    general_linear_group,
    left_kernel,
    mat_inverse,
    mat_rank,
    random_invertible,
    str_to_bits,
    vec_mat,
)

Pair = Tuple[int, int]
MAX_EXHAUSTIVE_WIDTH = 4


class ProductError(ValueError):
    """A pair table that does not define a valid radical-ring product."""

    def __init__(self, message: str, witness: tuple):
        super().__init__(f"{message}; witness={witness}")
        self.witness = witness


class NonRegularError(ProductError):
    pass


class NonAssociativeError(ProductError):
    pass


@functools.lru_cache(maxsize=None)
def pair_list(width: int) -> Tuple[Pair, ...]:
    """The basis pairs (i, j), i < j, 0-based, in table order."""
    return tuple(itertools.combinations(range(width), 2))


@dataclass(frozen=True)
class RingProduct:
    """Basis-pair table of an alternating symmetric bilinear product.

    `entries[p]` is e_i . e_j for the p-th pair of `pair_list(width)`.
    Instances are shape-checked only; `build_product` also validates the
    ring axioms.
    """

    width: int
    entries: Tuple[int, ...]

    def __post_init__(self):
        _check_width(self.width)
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) != len(pair_list(self.width)):
            raise ValueError(f"expected {len(pair_list(self.width))} pair entries")
        if any(not 0 <= v < (1 << self.width) for v in self.entries):
            raise ValueError("pair entry does not fit width")

    @functools.cached_property
    def basis_table(self) -> Tuple[Tuple[int, ...], ...]:
        """Full n x n table of e_i . e_j, zero on the diagonal."""
        n = self.width
        t = [[0] * n for _ in range(n)]
        for (i, j), v in zip(pair_list(n), self.entries):
            t[i][j] = t[j][i] = v
        return tuple(map(tuple, t))

    def table(self) -> Dict[Pair, int]:
        """Nonzero pair entries as {(i, j): e_i . e_j}."""
        return {ij: v for ij, v in zip(pair_list(self.width), self.entries) if v}

    def is_zero(self) -> bool:
        return not any(self.entries)

    def mul(self, x: int, y: int) -> int:
        t = self.basis_table
        acc = 0
        for i in bits_of(x):
            acc ^= vec_mat(y, t[i])
        return acc

    def circ(self, x: int, y: int) -> int:
        return x ^ y ^ self.mul(x, y)

    @functools.cached_property
    def circ_table(self) -> np.ndarray:
        """circ_table[x, y] = x o y; only for width <= 8."""
        if self.width > 8:
            raise ValueError("circ table is only materialised for width <= 8")
        size = 1 << self.width
        return np.array([[self.circ(x, y) for y in range(size)] for x in range(size)],
                        dtype=np.int64)

    def kappa(self, a: int) -> BitMatrix:
        """Linear part of tau_a: x -> x + x.a."""
        return BitMatrix(self.width, tuple(
            (1 << i) ^ self.mul(1 << i, a) for i in range(self.width)))

    def tau(self, a: int) -> AffineMap:
        return AffineMap(self.kappa(a), a)

    def code(self) -> int:
        """Integer whose binary expansion is the concatenated table bits."""
        s = "".join(bits_to_str(v, self.width) for v in self.entries)
        return int(s, 2) if s else 0

    @classmethod
    def from_code(cls, width: int, code: int) -> "RingProduct":
        total = len(pair_list(width)) * width
        s = format(code, f"0{total}b") if total else ""
        return cls(width, tuple(str_to_bits(s[p:p + width])
                                for p in range(0, total, width)))


def circ(x: int, y: int, p: RingProduct) -> int:
    return p.circ(x, y)


def tau(a: int, p: RingProduct) -> AffineMap:
    return p.tau(a)


def _regularity_witness(p: RingProduct) -> Optional[tuple]:
    # x -> x + x.a must be a bijection for every a, not only basis a
    for a in range(1 << p.width):
        k = p.kappa(a)
        if mat_rank(k) < p.width:
            x = left_kernel(k.rows)[0]
            return (a, x, 0)
    return None


def _associativity_witness(p: RingProduct) -> Optional[tuple]:
    n = p.width
    t = p.basis_table
    for i, j, k in itertools.product(range(n), repeat=3):
        if p.mul(t[i][j], 1 << k) != p.mul(1 << i, t[j][k]):
            return (i, j, k)
    return None


def validate_product(p: RingProduct) -> RingProduct:
    """Raise ProductError unless p is associative and radical."""
    w = _regularity_witness(p)
    if w is not None:
        a, x, y = w
        raise NonRegularError(
            f"x -> x + x.a is not injective for a={a:#x}: {x:#x} and {y:#x} collide", w)
    w = _associativity_witness(p)
    if w is not None:
        raise NonAssociativeError("(e_i.e_j).e_k != e_i.(e_j.e_k)", w)
    return p


def build_product(width: int, table: Mapping[Pair, int]) -> RingProduct:
    """Validated product from a {(i, j): e_i . e_j} mapping (0-based, i < j).

    Unlisted pairs are zero. Symmetry and alternation are implicit.
    """
    index = {ij: k for k, ij in enumerate(pair_list(width))}
    entries = [0] * len(index)
    for (i, j), v in table.items():
        if i > j:
            i, j = j, i
        if (i, j) not in index:
            raise ValueError(f"invalid basis pair {(i, j)} for width {width}")
        entries[index[(i, j)]] = int(v)
    return validate_product(RingProduct(width, tuple(entries)))


def zero_product(width: int) -> RingProduct:
    return RingProduct(width, (0,) * len(pair_list(width)))


def exterior_algebra(k: int) -> RingProduct:
    """Positive-degree part of the exterior algebra on k generators.

    Basis vectors are the nonempty subsets of the generators, ordered by size
    then lexicographically (k=3: e1, e2, e3, e12, e13, e23, e123).
    """
    if not 2 <= k <= 4:
        raise ValueError("exterior_algebra needs 2 <= k <= 4")
    subsets = sorted(range(1, 1 << k), key=lambda s: (s.bit_count(), sorted(bits_of(s))))
    pos = {s: i for i, s in enumerate(subsets)}
    n = len(subsets)
    table = {}
    for i, j in pair_list(n):
        s, t = subsets[i], subsets[j]
        if not s & t:
            table[(i, j)] = 1 << pos[s | t]
    return build_product(n, table)


@functools.lru_cache(maxsize=None)
def exterior_basis_labels(k: int) -> Tuple[str, ...]:
    subsets = sorted(range(1, 1 << k), key=lambda s: (s.bit_count(), sorted(bits_of(s))))
    return tuple("e" + "".join(str(b + 1) for b in bits_of(s)) for s in subsets)


# -- subspaces ----------------------------------------------------------------

def annihilator(a: int, p: RingProduct) -> List[int]:
    """Basis of {x : x.a = 0}, which is also the fixed space of kappa_a."""
    return left_kernel([p.mul(1 << i, a) for i in range(p.width)])


def u_space(p: RingProduct) -> List[int]:
    """Basis of U = {a : tau_a is an ordinary translation} = {a : x.a = 0 for all x}."""
    n = p.width
    t = p.basis_table
    # row l stacks e_1.e_l, ..., e_n.e_l into one wide vector
    rows = [sum(t[i][l] << (i * n) for i in range(n)) for l in range(n)]
    return left_kernel(rows)


def u_space_dual(p: RingProduct) -> List[int]:
    """Basis of {a : sigma_a = tau_a}, read as a subspace of (V, o).

    The set equals u_space(p); on it o and + agree, so the same vectors are
    a basis for either structure.
    """
    return u_space(p)


@dataclass(frozen=True)
class HiddenSum:
    product: RingProduct
    u_basis: Tuple[int, ...]
    u_dim: int


def hidden_sum(p: RingProduct) -> HiddenSum:
    basis = tuple(u_space(p))
    return HiddenSum(p, basis, len(basis))


# -- coordinates --------------------------------------------------------------

@dataclass(frozen=True)
class CoordinateTable:
    """Bijection between o-coefficient vectors and elements of V.

    forward[lam] = lam_1 b_1 o ... o lam_n b_n; backward is its inverse.
    """

    product: RingProduct
    basis: Tuple[int, ...]
    forward: Tuple[int, ...] = field(repr=False)
    backward: Tuple[int, ...] = field(repr=False)


def op_basis(p: RingProduct) -> Tuple[int, ...]:
    """The standard basis if it is o-independent, else a greedy o-basis.

    The greedy basis takes the smallest element outside the current o-span
    at each step.
    """
    n = p.width
    standard = tuple(1 << i for i in range(n))
    spanned = {0}
    for b in standard:
        spanned |= {p.circ(s, b) for s in spanned}
    if len(spanned) == 1 << n:
        return standard
    basis = []
    spanned = {0}
    while len(basis) < n:
        v = min(x for x in range(1 << n) if x not in spanned)
        basis.append(v)
        spanned |= {p.circ(s, v) for s in spanned}
    return tuple(basis)


def coordinate_table(p: RingProduct, basis: Optional[Sequence[int]] = None) -> CoordinateTable:
    """Coefficient table for `basis`, by default `op_basis(p)`."""
    n = p.width
    basis = tuple(basis) if basis is not None else op_basis(p)
    if len(basis) != n:
        raise ValueError(f"a basis of (V, o) needs {n} vectors")
    forward = [0] * (1 << n)
    for lam in range(1, 1 << n):
        low = (lam & -lam).bit_length() - 1
        forward[lam] = p.circ(forward[lam & (lam - 1)], basis[low])
    backward = [-1] * (1 << n)
    for lam, x in enumerate(forward):
        if backward[x] != -1:
            raise ValueError("basis vectors are not o-independent")
        backward[x] = lam
    return CoordinateTable(p, basis, tuple(forward), tuple(backward))


def coordinates(x: int, ct: CoordinateTable) -> int:
    return ct.backward[x]


def combine(lam: int, ct: CoordinateTable) -> int:
    return ct.forward[lam]


# -- affine maps w.r.t. o -----------------------------------------------------

FunctionLike = Union[PermutationTable, Sequence[int]]


def _images(f: FunctionLike) -> Sequence[int]:
    return f.images if isinstance(f, PermutationTable) else f


def op_affine_witness(f: FunctionLike, p: RingProduct) -> Optional[Tuple[int, int]]:
    """First pair (x, y) with g(x o y) != g(x) o g(y), where g = f o f(0); None if affine."""
    img = _images(f)
    size = 1 << p.width
    if len(img) != size:
        raise ValueError("function and product widths differ")
    if p.width <= 8:
        c = p.circ_table
        f0 = img[0]
        g = c[np.asarray(img), f0]
        lhs = g[c]  # g(x o y)
        rhs = c[g[:, None], g[None, :]]
        bad = np.argwhere(lhs != rhs)
        return None if not len(bad) else (int(bad[0][0]), int(bad[0][1]))
    f0 = img[0]
    g = [p.circ(v, f0) for v in img]
    for x in range(size):
        for y in range(size):
            if g[p.circ(x, y)] != p.circ(g[x], g[y]):
                return (x, y)
    return None


def is_op_affine(f: FunctionLike, p: RingProduct) -> bool:
    return op_affine_witness(f, p) is None


def contains_std_translations(p: RingProduct) -> bool:
    """True iff every ordinary translation is o-affine (checked on generators)."""
    return all(is_op_affine(AffineMap.sigma(p.width, 1 << i).table(), p)
               for i in range(p.width))


def enumerate_affine_group(p: RingProduct) -> Iterator[PermutationTable]:
    """All o-affine permutations, 2^n * |GL(n, 2)| of them.

    Each is a coefficient-space linear map transported through `op_basis(p)`,
    followed by a o-translation.
    """
    n = p.width
    ct = coordinate_table(p)
    size = 1 << n
    for a in general_linear_group(n):
        lin = [ct.forward[a.apply(ct.backward[x])] for x in range(size)]
        for t in range(size):
            yield PermutationTable(n, tuple(p.circ(v, t) for v in lin))


def op_linear_from_matrix(p: RingProduct, a: BitMatrix, ct: Optional[CoordinateTable] = None
                          ) -> PermutationTable:
    """The o-linear map whose coefficient action is lam -> lam . a."""
    ct = ct or coordinate_table(p)
    return PermutationTable(p.width, tuple(
        ct.forward[a.apply(ct.backward[x])] for x in range(1 << p.width)))


# -- enumeration ---------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _associative_codes(width: int) -> Tuple[int, ...]:
    """Codes of associative pair tables, ascending; vectorised prefilter."""
    n = width
    pairs = pair_list(n)
    total_bits = len(pairs) * n
    found: List[int] = []
    chunk = 1 << 20
    for start in range(0, 1 << total_bits, chunk):
        codes = np.arange(start, min(1 << total_bits, start + chunk), dtype=np.uint32)
        zero = np.zeros(len(codes), dtype=np.uint8)
        g = [[zero] * n for _ in range(n)]
        for p, (i, j) in enumerate(pairs):
            shift = total_bits - (p + 1) * n
            raw = ((codes >> shift) & ((1 << n) - 1)).astype(np.uint8)
            # the first character of the pair's bitstring is coordinate x_1
            v = np.zeros_like(raw)
            for b in range(n):
                v |= ((raw >> (n - 1 - b)) & 1) << b
            g[i][j] = g[j][i] = v

        def times_basis(v, k):
            r = np.zeros_like(v)
            for l in range(n):
                r ^= ((v >> l) & 1) * g[l][k]
            return r

        ok = np.ones(len(codes), dtype=bool)
        for i, j, k in itertools.product(range(n), repeat=3):
            if i < k:  # commutativity makes (i, j, k) and (k, j, i) equivalent
                ok &= times_basis(g[i][j], k) == times_basis(g[j][k], i)
        found.extend(int(c) for c in codes[ok])
    return tuple(found)


def _quotient_of_exterior(width: int, rng: random.Random) -> Optional[RingProduct]:
    """Random radical product as a quotient of an exterior algebra, or None on overshoot."""
    feasible = [k for k in range(1, width + 1) if (1 << k) - 1 >= width]
    # k == width always yields the zero product; keep it rare
    weights = [1 if k == width else 8 for k in feasible]
    k = rng.choices(feasible, weights)[0]
    monos = sorted(range(1, 1 << k), key=lambda s: (s.bit_count(), s))
    dim = len(monos)
    idx = {s: i for i, s in enumerate(monos)}

    def mono_mul(i: int, j: int) -> int:
        s, t = monos[i], monos[j]
        return 0 if s & t else 1 << idx[s | t]

    def lam_mul(u: int, v: int) -> int:
        acc = 0
        for i in bits_of(u):
            for j in bits_of(v):
                acc ^= mono_mul(i, j)
        return acc

    ideal: Dict[int, int] = {}  # pivot bit -> fully reduced row

    def reduce(v: int) -> int:
        for piv, row in ideal.items():
            if (v >> piv) & 1:
                v ^= row
        return v

    def add(v: int) -> bool:
        v = reduce(v)
        if not v:
            return False
        piv = v.bit_length() - 1
        for q in list(ideal):
            if (ideal[q] >> piv) & 1:
                ideal[q] ^= v
        ideal[piv] = v
        return True

    decomposable = [i for i, s in enumerate(monos) if s.bit_count() >= 2]
    while dim - len(ideal) > width:
        v = 0
        while not v:
            v = sum(1 << i for i in decomposable if rng.random() < 0.5)
        queue = [v]
        while queue:
            w = queue.pop()
            if add(w):
                queue.extend(lam_mul(w, 1 << i) for i in range(dim))
    if dim - len(ideal) != width:
        return None
    keep = [i for i in range(dim) if i not in ideal]
    pos = {i: r for r, i in enumerate(keep)}

    def to_quotient(v: int) -> int:
        v = reduce(v)
        return sum(1 << pos[i] for i in bits_of(v))

    base = [[to_quotient(mono_mul(keep[r], keep[s])) for s in range(width)]
            for r in range(width)]
    # random change of basis: new basis vector i has old coordinates change.rows[i]
    change = random_invertible(width, rng)
    back = mat_inverse(change).rows

    def old_mul(x: int, y: int) -> int:
        acc = 0
        for r in bits_of(x):
            acc ^= vec_mat(y, base[r])
        return acc

    entries = tuple(vec_mat(old_mul(change.rows[i], change.rows[j]), back)
                    for i, j in pair_list(width))
    return RingProduct(width, entries)


def random_product(width: int, rng: random.Random) -> RingProduct:
    """A validated random product on F_2^width.

    Every such algebra is a quotient of an exterior algebra; a random ideal
    inside the decomposable part is factored out and the result is moved by a
    random change of basis. Not uniform over products.
    """
    while True:
        p = _quotient_of_exterior(width, rng)
        if p is not None:
            return validate_product(p)


def enumerate_products(width: int, limit: Optional[int] = None, seed: Optional[int] = None,
                       allow_exhaustive: bool = False, start: int = 0,
                       stop: Optional[int] = None) -> Iterator[RingProduct]:
    """Stream valid products.

    Without a seed: every valid pair table in ascending code order (the
    concatenated table bits read as a binary number), optionally restricted
    to codes in [start, stop) so scans can be partitioned. Refused for
    width >= 5 unless allow_exhaustive is set.

    With a seed: a reproducible stream of random products (see
    random_product); `limit` bounds its length.
    """
    _check_width(width)
    if seed is not None:
        rng = random.Random(seed)
        count = 0
        while limit is None or count < limit:
            yield random_product(width, rng)
            count += 1
        return
    if width > MAX_EXHAUSTIVE_WIDTH and not allow_exhaustive:
        raise ValueError(f"exhaustive enumeration refused for width {width}; "
                         "pass a seed or allow_exhaustive")
    emitted = 0
    if width <= MAX_EXHAUSTIVE_WIDTH:
        codes: Iterator[int] = iter(_associative_codes(width))
    else:
        codes = iter(range(1 << (len(pair_list(width)) * width)))
    for code in codes:
        if code < start or (stop is not None and code >= stop):
            continue
        if limit is not None and emitted >= limit:
            return
        try:
            p = validate_product(RingProduct.from_code(width, code))
        except ProductError:
            continue
        emitted += 1
        yield p


# -- product file format ------------------------------------------------------

def parse_product(text: str) -> RingProduct:
    """Parse 'n=<int>' then '<i> <j> <bits>' lines (1-based, i < j); validates."""
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise ValueError("product file must start with 'n=<int>'")
    n = int(lines[0][2:])
    table = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"bad product line: {ln!r}")
        i, j = int(parts[0]), int(parts[1])
        if not 1 <= i < j <= n or len(parts[2]) != n:
            raise ValueError(f"bad product line: {ln!r}")
        table[(i - 1, j - 1)] = str_to_bits(parts[2])
    return build_product(n, table)


def format_product(p: RingProduct) -> str:
    lines = [f"n={p.width}"]
    for (i, j), v in p.table().items():
        lines.append(f"{i + 1} {j + 1} {bits_to_str(v, p.width)}")
    return "\n".join(lines) + "\n"


def brick_product() -> RingProduct:
    """The width-3 product e_1 . e_2 = e_3 behind the three printed generators."""
    return build_product(3, {(0, 1): 0b100})


__all__ = [
    "ProductError", "NonRegularError", "NonAssociativeError", "RingProduct",
    "HiddenSum", "CoordinateTable", "build_product", "validate_product", "zero_product",
    "circ", "tau", "u_space", "u_space_dual", "annihilator", "hidden_sum",
    "exterior_algebra", "exterior_basis_labels", "coordinate_table", "coordinates",
    "combine", "op_basis", "is_op_affine", "op_affine_witness", "contains_std_translations",
    "enumerate_affine_group", "op_linear_from_matrix", "enumerate_products",
    "random_product", "parse_product", "format_product", "pair_list", "brick_product",
]
