"""A 6-bit translation-based toy cipher with an embedded hidden sum.

Two identical 3-bit S-boxes (a polynomial over GF(8)) feed a fixed 6x6
mixing layer, followed by XOR with the round key. The bit embedding
GF(8) bit embedding and the side on which the mixing matrix acts open, so
both are part of a FieldConvention and resolved by convention_search.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .differential import delta_uniformity
from .gf2 import (
    AffineMap,
    BitMatrix,
    PermutationTable,
    format_matrix,
    mat_inverse,
    mat_rank,
    parse_matrix,
)
from .hidden_sum import RingProduct, build_product, is_op_affine

BRICK_WIDTH = 3
BRICK_COUNT = 2
BLOCK_WIDTH = BRICK_WIDTH * BRICK_COUNT
DEFAULT_ROUNDS = 16

MIXING_ROWS = (
    "001110",
    "001011",
    "000001",
    "101001",
    "111001",
    "001000",
)

# gamma(x) = a^4 x^6 + a^3 x^4 + a x^3 + a^3 x^2 + x + a^6, as (coefficient exponent, power)
SBOX_TERMS = ((4, 6), (3, 4), (1, 3), (3, 2), (0, 1))
SBOX_CONSTANT_EXP = 6


# -- GF(8) = GF(2)[a] / (a^3 + a + 1); elements as ints, bit i <-> a^i --------

def gf8_mul(x: int, y: int) -> int:
    r = 0
    for i in range(3):
        if (y >> i) & 1:
            r ^= x << i
    for i in (4, 3):
        if (r >> i) & 1:
            r ^= 0b1011 << (i - 3)
    return r


def gf8_pow(x: int, e: int) -> int:
    r = 1
    for _ in range(e):
        r = gf8_mul(r, x)
    return r


ALPHA = 0b010


def sbox_polynomial(x: int) -> int:
    """The S-box polynomial evaluated on a GF(8) element in polynomial basis."""
    acc = gf8_pow(ALPHA, SBOX_CONSTANT_EXP)
    for coeff_exp, power in SBOX_TERMS:
        acc ^= gf8_mul(gf8_pow(ALPHA, coeff_exp), gf8_pow(x, power))
    return acc


@dataclass(frozen=True)
class FieldConvention:
    """How bit vectors meet GF(8) and how the mixing matrix acts.

    `exponents[i]` is the power of alpha carried by coordinate x_{i+1};
    `action` is "row" (x -> x . lambda) or "col" (x -> lambda . x^T).
    """

    exponents: Tuple[int, int, int]
    action: str

    def __post_init__(self):
        if sorted(self.exponents) != [0, 1, 2]:
            raise ValueError("exponents must be a permutation of 0, 1, 2")
        if self.action not in ("row", "col"):
            raise ValueError("action must be 'row' or 'col'")

    @property
    def id(self) -> str:
        return "a" + "".join(map(str, self.exponents)) + "-" + self.action

    @classmethod
    def from_id(cls, ident: str) -> "FieldConvention":
        try:
            exps, action = ident.split("-")
            if not exps.startswith("a") or len(exps) != 4:
                raise ValueError
            return cls(tuple(int(c) for c in exps[1:]), action)
        except ValueError:
            raise ValueError(f"bad convention id {ident!r}") from None

    def to_field(self, x: int) -> int:
        return sum(((x >> i) & 1) << e for i, e in enumerate(self.exponents))

    def from_field(self, y: int) -> int:
        return sum(((y >> e) & 1) << i for i, e in enumerate(self.exponents))


def all_conventions() -> List[FieldConvention]:
    """The 12 candidates, in search order."""
    return [FieldConvention(p, action)
            for p in itertools.permutations(range(3)) for action in ("row", "col")]


def build_sbox(convention: FieldConvention) -> PermutationTable:
    return PermutationTable(BRICK_WIDTH, tuple(
        convention.from_field(sbox_polynomial(convention.to_field(x)))
        for x in range(1 << BRICK_WIDTH)))


def mixing_matrix() -> BitMatrix:
    return BitMatrix.from_strings(MIXING_ROWS)


def is_proper_mixing(m: BitMatrix, brick_width: int = BRICK_WIDTH,
                     brick_count: int = BRICK_COUNT) -> bool:
    """Invertible and no proper nonempty wall (sum of bricks) is mapped onto itself."""
    if mat_rank(m) != m.width:
        return False
    brick = (1 << brick_width) - 1
    for subset in range(1, (1 << brick_count) - 1):
        wall = 0
        for b in range(brick_count):
            if (subset >> b) & 1:
                wall |= brick << (b * brick_width)
        # the wall is invariant iff every basis vector in it maps inside it
        if all(m.rows[i] & ~wall == 0 for i in range(m.width) if (wall >> i) & 1):
            return False
    return True


@dataclass(frozen=True)
class ToyCipherSpec:
    convention: FieldConvention
    rounds: int = DEFAULT_ROUNDS
    sbox: Optional[PermutationTable] = None
    mixing: BitMatrix = field(default_factory=mixing_matrix)
    brick_width: int = BRICK_WIDTH
    brick_count: int = BRICK_COUNT

    def __post_init__(self):
        if self.sbox is None:
            object.__setattr__(self, "sbox", build_sbox(self.convention))
        if self.rounds < 0:
            raise ValueError("rounds must be non-negative")
        if not self.sbox.is_bijective():
            raise ValueError("S-box is not a permutation")
        if self.mixing.width != self.block_width:
            raise ValueError("mixing layer width mismatch")

    @property
    def block_width(self) -> int:
        return self.brick_width * self.brick_count

    @property
    def mixing_action(self) -> BitMatrix:
        """Matrix acting on row vectors from the right."""
        return self.mixing if self.convention.action == "row" else self.mixing.transpose()

    def bricklayer(self, x: int) -> int:
        w = self.brick_width
        mask = (1 << w) - 1
        out = 0
        for b in range(self.brick_count):
            out |= self.sbox.images[(x >> (b * w)) & mask] << (b * w)
        return out

    def gamma_table(self) -> PermutationTable:
        return PermutationTable.from_function(self.block_width, self.bricklayer)

    def lambda_gamma_table(self) -> PermutationTable:
        lam = self.mixing_action
        return PermutationTable.from_function(
            self.block_width, lambda x: lam.apply(self.bricklayer(x)))


def round_function(x: int, k: int, spec: ToyCipherSpec) -> int:
    """sigma_k(lambda(gamma(x)))."""
    return spec.mixing_action.apply(spec.bricklayer(x)) ^ k


def round_keys(key: int, spec: ToyCipherSpec) -> List[int]:
    # identity schedule: every round uses the master key
    return [key] * spec.rounds


def encrypt(v: int, key: int, spec: ToyCipherSpec) -> int:
    for k in round_keys(key, spec):
        v = round_function(v, k, spec)
    return v


def decrypt(c: int, key: int, spec: ToyCipherSpec) -> int:
    lam_inv = mat_inverse(spec.mixing_action)
    sinv = spec.sbox.inverse()
    w = spec.brick_width
    mask = (1 << w) - 1
    for k in reversed(round_keys(key, spec)):
        y = lam_inv.apply(c ^ k)
        c = 0
        for b in range(spec.brick_count):
            c |= sinv.images[(y >> (b * w)) & mask] << (b * w)
    return c


def encryption_table(key: int, spec: ToyCipherSpec) -> PermutationTable:
    return PermutationTable.from_function(spec.block_width, lambda v: encrypt(v, key, spec))


def build_hidden_sum_6() -> RingProduct:
    """Brick-wise copy of the width-3 product e_1 . e_2 = e_3 on F_2^6."""
    return build_product(BLOCK_WIDTH, {(0, 1): 1 << 2, (3, 4): 1 << 5})


@dataclass
class TrapdoorReport:
    convention: str
    verdicts: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def text(self) -> str:
        lines = [f"convention {self.convention}"]
        lines += [f"  {name}: {'affine' if ok else 'NOT affine'}" for name, ok in self.verdicts.items()]
        lines.append(f"trapdoor {'PRESENT' if self.passed else 'ABSENT'}")
        return "\n".join(lines)

    def summary(self) -> str:
        return (f"#SUMMARY check=trapdoor convention={self.convention} "
                f"passed={int(self.passed)} failed={sum(not v for v in self.verdicts.values())}")


def trapdoor_check(spec: ToyCipherSpec, hidden: Optional[RingProduct] = None) -> TrapdoorReport:
    """Are all ordinary translations and lambda.gamma affine for the hidden sum?

    Generator membership suffices: AGL(V, o) is a group, and every round
    and hence every encryption map is a composition of these generators.
    """
    hidden = hidden or build_hidden_sum_6()
    n = spec.block_width
    verdicts = {}
    for i in range(n):
        verdicts[f"sigma_e{i + 1}"] = is_op_affine(AffineMap.sigma(n, 1 << i).table(), hidden)
    verdicts["lambda_gamma"] = is_op_affine(spec.lambda_gamma_table(), hidden)
    return TrapdoorReport(spec.convention.id, verdicts)


@dataclass
class ConventionSearch:
    chosen: Optional[FieldConvention]
    matrix: Dict[str, TrapdoorReport]

    def text(self) -> str:
        lines = [f"{cid}: {'pass' if r.passed else 'fail'}" for cid, r in self.matrix.items()]
        lines.append(f"chosen: {self.chosen.id if self.chosen else 'NONE'}")
        return "\n".join(lines)


def convention_search(rounds: int = DEFAULT_ROUNDS) -> ConventionSearch:
    """Try all 12 conventions; pick the first that passes trapdoor_check."""
    matrix = {}
    chosen = None
    for conv in all_conventions():
        report = trapdoor_check(ToyCipherSpec(conv, rounds))
        matrix[conv.id] = report
        if chosen is None and report.passed:
            chosen = conv
    return ConventionSearch(chosen, matrix)


def substitute_sbox_search(limit: int = 1, action: str = "row") -> List[PermutationTable]:
    """3-bit permutations with differential uniformity 4 that keep the trapdoor.

    Fallback for when no field convention passes; returns up to `limit`.
    """
    found = []
    conv = FieldConvention((0, 1, 2), action)
    for images in itertools.permutations(range(1 << BRICK_WIDTH)):
        sbox = PermutationTable(BRICK_WIDTH, images)
        if delta_uniformity(sbox) != 4:
            continue
        if trapdoor_check(ToyCipherSpec(conv, 1, sbox=sbox)).passed:
            found.append(sbox)
            if len(found) >= limit:
                break
    return found


# frozen result of convention_search(); tests assert the search reproduces it
DEFAULT_CONVENTION = FieldConvention((1, 2, 0), "row")


def default_spec(rounds: int = DEFAULT_ROUNDS) -> ToyCipherSpec:
    return ToyCipherSpec(DEFAULT_CONVENTION, rounds)


# -- spec file -------------------------------------------------------------------

def format_spec(spec: ToyCipherSpec) -> str:
    lines = [f"convention={spec.convention.id}",
             f"rounds={spec.rounds}",
             "sbox=" + " ".join(map(str, spec.sbox.images))]
    return "\n".join(lines) + "\n" + format_matrix(spec.mixing)


def parse_spec(text: str) -> ToyCipherSpec:
    """Parse the key=value header followed by the mixing matrix block."""
    values = {}
    matrix_lines = []
    in_matrix = False
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if ln.startswith("n="):
            in_matrix = True
        if in_matrix:
            matrix_lines.append(ln)
            continue
        key, sep, value = ln.partition("=")
        if not sep:
            raise ValueError(f"bad spec line: {ln!r}")
        values[key.strip()] = value.strip()
    missing = {"convention", "rounds", "sbox"} - values.keys()
    if missing or not matrix_lines:
        raise ValueError(f"spec file is missing {sorted(missing) or ['mixing matrix']}")
    conv = FieldConvention.from_id(values["convention"])
    sbox = PermutationTable(BRICK_WIDTH, tuple(int(v) for v in values["sbox"].split()))
    return ToyCipherSpec(conv, int(values["rounds"]), sbox=sbox,
                         mixing=parse_matrix("\n".join(matrix_lines)))
