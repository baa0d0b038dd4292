"""Bit-packed vectors, matrices and affine maps over GF(2).

Vectors are plain ints: coordinate x_1 sits at bit 0, x_i at bit i-1.
Matrices act on row vectors from the right, so row i of a matrix is the
image of the i-th basis vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple

MAX_WIDTH = 16


class SingularMatrixError(ValueError):
    """Raised when inverting a matrix of deficient rank."""


def _check_width(width: int) -> None:
    if not 1 <= width <= MAX_WIDTH:
        raise ValueError(f"width must be in 1..{MAX_WIDTH}, got {width}")


def bits_of(x: int) -> Iterator[int]:
    """Yield the positions of the set bits of x, lowest first."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def vec_mat(x: int, rows: Sequence[int]) -> int:
    """Row vector times matrix: XOR of the rows selected by the bits of x."""
    acc = 0
    i = 0
    while x:
        if x & 1:
            acc ^= rows[i]
        x >>= 1
        i += 1
    return acc


def bits_to_str(x: int, width: int) -> str:
    """Render x as a bitstring whose first character is coordinate x_1."""
    return "".join("1" if (x >> i) & 1 else "0" for i in range(width))


def str_to_bits(s: str) -> int:
    s = s.strip()
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {s!r}")
    return sum(1 << i for i, c in enumerate(s) if c == "1")


@dataclass(frozen=True)
class BitVector:
    """An element of F_2^width. Addition is XOR."""

    width: int
    bits: int

    def __post_init__(self):
        _check_width(self.width)
        if not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"bits {self.bits:#x} do not fit width {self.width}")

    @classmethod
    def unit(cls, width: int, i: int) -> "BitVector":
        """The basis vector with a single 1 at (0-based) position i."""
        return cls(width, 1 << i)

    @classmethod
    def from_coords(cls, coords: Sequence[int]) -> "BitVector":
        return cls(len(coords), sum((c & 1) << i for i, c in enumerate(coords)))

    @classmethod
    def from_str(cls, s: str) -> "BitVector":
        return cls(len(s.strip()), str_to_bits(s))

    def coords(self) -> Tuple[int, ...]:
        return tuple((self.bits >> i) & 1 for i in range(self.width))

    def __int__(self) -> int:
        return self.bits

    def __index__(self) -> int:
        return self.bits

    def __add__(self, other: "BitVector") -> "BitVector":
        if other.width != self.width:
            raise ValueError("width mismatch")
        return BitVector(self.width, self.bits ^ other.bits)

    __xor__ = __add__

    def __str__(self) -> str:
        return bits_to_str(self.bits, self.width)


# -- elimination on raw row lists (any number of columns) -------------------

def rank_of_rows(rows: Iterable[int]) -> int:
    """Rank over GF(2) of a list of int-packed rows."""
    basis: List[int] = []  # descending, distinct leading bits
    for r in rows:
        for b in basis:
            r = min(r, r ^ b)
        if r:
            basis.append(r)
            basis.sort(reverse=True)
    return len(basis)


def left_kernel(rows: Sequence[int]) -> List[int]:
    """Basis of {x : x . A = 0} where A has the given rows.

    Columns may be arbitrarily many, so this also serves for the stacked
    maps used by annihilator computations.
    """
    work = [(r, 1 << i) for i, r in enumerate(rows)]
    pivots: List[Tuple[int, int]] = []
    kernel: List[int] = []
    for r, tag in work:
        for pr, ptag in pivots:
            if r ^ pr < r:
                r ^= pr
                tag ^= ptag
        if r:
            pivots.append((r, tag))
            pivots.sort(reverse=True)
        else:
            kernel.append(tag)
    return kernel


def span(basis: Sequence[int]) -> List[int]:
    """All 2^k linear combinations of the given independent vectors."""
    out = [0]
    for b in basis:
        out += [v ^ b for v in out]
    return out


# -- square matrices --------------------------------------------------------

@dataclass(frozen=True)
class BitMatrix:
    """Square GF(2) matrix; row i is the image of basis vector e_{i+1}."""

    width: int
    rows: Tuple[int, ...]

    def __post_init__(self):
        _check_width(self.width)
        object.__setattr__(self, "rows", tuple(self.rows))
        if len(self.rows) != self.width:
            raise ValueError(f"expected {self.width} rows, got {len(self.rows)}")
        limit = 1 << self.width
        for r in self.rows:
            if not 0 <= r < limit:
                raise ValueError(f"row {r:#x} does not fit width {self.width}")

    @classmethod
    def identity(cls, width: int) -> "BitMatrix":
        return cls(width, tuple(1 << i for i in range(width)))

    @classmethod
    def zero(cls, width: int) -> "BitMatrix":
        return cls(width, (0,) * width)

    @classmethod
    def from_strings(cls, lines: Sequence[str]) -> "BitMatrix":
        return cls(len(lines), tuple(str_to_bits(s) for s in lines))

    def to_strings(self) -> List[str]:
        return [bits_to_str(r, self.width) for r in self.rows]

    def __getitem__(self, ij: Tuple[int, int]) -> int:
        i, j = ij
        return (self.rows[i] >> j) & 1

    def apply(self, x: int) -> int:
        """x . A for a row vector x."""
        return vec_mat(x, self.rows)

    __call__ = apply

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if other.width != self.width:
            raise ValueError("width mismatch")
        return BitMatrix(self.width, tuple(other.apply(r) for r in self.rows))

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if other.width != self.width:
            raise ValueError("width mismatch")
        return BitMatrix(self.width, tuple(a ^ b for a, b in zip(self.rows, other.rows)))

    def __pow__(self, e: int) -> "BitMatrix":
        result = BitMatrix.identity(self.width)
        base = self
        while e:
            if e & 1:
                result = result @ base
            base = base @ base
            e >>= 1
        return result

    def transpose(self) -> "BitMatrix":
        n = self.width
        return BitMatrix(n, tuple(
            sum(((self.rows[i] >> j) & 1) << i for i in range(n)) for j in range(n)))

    def is_zero(self) -> bool:
        return not any(self.rows)

    def __str__(self) -> str:
        return "\n".join(self.to_strings())


def mat_rank(m: BitMatrix) -> int:
    return rank_of_rows(m.rows)


def kernel_dim(m: BitMatrix) -> int:
    """Dimension of {x : x . M = 0}; 2**kernel_dim(K + I) counts fixed points of K."""
    return m.width - mat_rank(m)


def kernel_basis(m: BitMatrix) -> List[int]:
    return left_kernel(m.rows)


def mat_inverse(m: BitMatrix) -> BitMatrix:
    """Gauss-Jordan inverse; raises SingularMatrixError on rank deficiency."""
    n = m.width
    rows = list(m.rows)
    inv = [1 << i for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if (rows[r] >> col) & 1), None)
        if pivot is None:
            raise SingularMatrixError(f"matrix has rank {mat_rank(m)} < {n}")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        for r in range(n):
            if r != col and (rows[r] >> col) & 1:
                rows[r] ^= rows[col]
                inv[r] ^= inv[col]
    return BitMatrix(n, tuple(inv))


def is_unipotent(m: BitMatrix) -> bool:
    """True iff (M + I) is nilpotent, i.e. (M + I)^width = 0."""
    return ((m + BitMatrix.identity(m.width)) ** m.width).is_zero()


def fixed_point_count(m: BitMatrix) -> int:
    return 1 << kernel_dim(m + BitMatrix.identity(m.width))


def general_linear_group(width: int) -> Iterator[BitMatrix]:
    """Every invertible width x width matrix, rows built in lexicographic order.

    Row by row the next row is chosen outside the span of the previous ones,
    so nothing is generated and then discarded.
    """
    full = 1 << width

    def extend(prefix: List[int], spanned: set):
        if len(prefix) == width:
            yield BitMatrix(width, tuple(prefix))
            return
        for r in range(1, full):
            if r in spanned:
                continue
            new_span = spanned | {v ^ r for v in spanned}
            prefix.append(r)
            yield from extend(prefix, new_span)
            prefix.pop()

    yield from extend([], {0})


def random_invertible(width: int, rng) -> BitMatrix:
    """Uniform element of GL(width, 2) by rejection."""
    full = 1 << width
    while True:
        rows = tuple(rng.randrange(full) for _ in range(width))
        if rank_of_rows(rows) == width:
            return BitMatrix(width, rows)


@dataclass(frozen=True)
class AffineMap:
    """x -> x . linear + translation, with linear invertible."""

    linear: BitMatrix
    translation: int = 0

    def __post_init__(self):
        if mat_rank(self.linear) != self.linear.width:
            raise SingularMatrixError("affine map needs an invertible linear part")
        if not 0 <= self.translation < (1 << self.linear.width):
            raise ValueError("translation does not fit width")

    @property
    def width(self) -> int:
        return self.linear.width

    @classmethod
    def sigma(cls, width: int, a: int) -> "AffineMap":
        """The ordinary translation x -> x + a."""
        return cls(BitMatrix.identity(width), a)

    def __call__(self, x: int) -> int:
        return self.linear.apply(x) ^ self.translation

    def then(self, other: "AffineMap") -> "AffineMap":
        """Apply self first, then other."""
        return AffineMap(self.linear @ other.linear, other(self.translation))

    def table(self) -> Tuple[int, ...]:
        return tuple(self(x) for x in range(1 << self.width))


# -- permutation tables -----------------------------------------------------

@dataclass(frozen=True)
class PermutationTable:
    """Explicit map on F_2^width given by its 2^width images.

    Non-bijective tables are allowed; differential uniformity is defined for
    arbitrary functions.
    """

    width: int
    images: Tuple[int, ...]

    def __post_init__(self):
        _check_width(self.width)
        object.__setattr__(self, "images", tuple(int(v) for v in self.images))
        size = 1 << self.width
        if len(self.images) != size:
            raise ValueError(f"expected {size} images, got {len(self.images)}")
        if any(not 0 <= v < size for v in self.images):
            raise ValueError("image out of range")

    @classmethod
    def identity(cls, width: int) -> "PermutationTable":
        return cls(width, tuple(range(1 << width)))

    @classmethod
    def from_function(cls, width: int, fn) -> "PermutationTable":
        return cls(width, tuple(fn(x) for x in range(1 << width)))

    def __call__(self, x: int) -> int:
        return self.images[x]

    def __len__(self) -> int:
        return len(self.images)

    def is_bijective(self) -> bool:
        return len(set(self.images)) == len(self.images)

    def inverse(self) -> "PermutationTable":
        if not self.is_bijective():
            raise ValueError("table is not a permutation")
        inv = [0] * len(self.images)
        for x, y in enumerate(self.images):
            inv[y] = x
        return PermutationTable(self.width, tuple(inv))

    def then(self, other: "PermutationTable") -> "PermutationTable":
        """Apply self first, then other."""
        return PermutationTable(self.width, tuple(other.images[y] for y in self.images))


# -- text formats ------------------------------------------------------------

def _header(line: str) -> int:
    line = line.strip()
    if not line.startswith("n="):
        raise ValueError(f"expected 'n=<int>' header, got {line!r}")
    return int(line[2:])


def _content_lines(text: str) -> List[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def parse_matrix(text: str) -> BitMatrix:
    """Parse the 'n=<int>' + n lines of n bits matrix format."""
    lines = _content_lines(text)
    if not lines:
        raise ValueError("empty matrix file")
    n = _header(lines[0])
    body = lines[1:]
    if len(body) != n or any(len(r) != n for r in body):
        raise ValueError(f"matrix body must be {n} lines of {n} characters")
    return BitMatrix.from_strings(body)


def format_matrix(m: BitMatrix) -> str:
    return "\n".join([f"n={m.width}", *m.to_strings()]) + "\n"


def parse_permutation(text: str) -> PermutationTable:
    """Parse 'n=<int>' followed by 2^n lines, line x holding f(x)."""
    lines = _content_lines(text)
    if not lines:
        raise ValueError("empty permutation file")
    n = _header(lines[0])
    body = lines[1:]
    if len(body) != 1 << n:
        raise ValueError(f"expected {1 << n} image lines, got {len(body)}")
    images = tuple(int(v, 0) for v in body)
    if sorted(images) != list(range(1 << n)):
        raise ValueError("images are not a permutation of 0..2^n-1")
    return PermutationTable(n, images)


def format_permutation(f: PermutationTable) -> str:
    return "\n".join([f"n={f.width}", *map(str, f.images)]) + "\n"
