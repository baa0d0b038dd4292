"""Global deduction of the toy cipher through its hidden sum.

Every encryption map is affine for the brick-wise hidden sum, so in hidden
coordinates [phi(v)] = [v] . M + [t] with t = phi(0). Seven chosen
plaintexts determine M and t; M^-1 then comes either from Gaussian
elimination (variant 1) or from seven decryption queries (variant 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Sequence, Tuple

from .gf2 import BitMatrix, SingularMatrixError, bits_to_str, mat_inverse
from .oracle import BudgetExceeded
from .toy_cipher import BLOCK_WIDTH

BRUTE_FORCE_BASELINE = 1 << BLOCK_WIDTH
DEFAULT_SPOT_POINTS = (0x3F, 0x2A, 0x15)


class Oracle(Protocol):
    enc_used: int
    dec_used: int

    def encrypt(self, v: int) -> int: ...

    def decrypt(self, c: int) -> int: ...


class AttackError(RuntimeError):
    """The oracle does not behave like a map affine for the hidden sum."""


def brick_coords(x: int) -> int:
    """Hidden-sum coefficients of a 3-bit brick: (x1, x2, x1*x2 + x3)."""
    x1, x2, x3 = x & 1, (x >> 1) & 1, (x >> 2) & 1
    return x1 | (x2 << 1) | (((x1 & x2) ^ x3) << 2)


def flatten_coords(v: int) -> int:
    """Coefficients of a 6-bit block, brick by brick. An involution."""
    return brick_coords(v & 7) | (brick_coords(v >> 3) << 3)


unflatten_coords = flatten_coords


@dataclass
class AttackTranscript:
    variant: int
    queries_enc: List[Tuple[int, int]] = field(default_factory=list)
    queries_dec: List[Tuple[int, int]] = field(default_factory=list)
    M: Optional[BitMatrix] = None
    M_inv: Optional[BitMatrix] = None
    t: Optional[int] = None
    spot_checks: List[Tuple[int, int, int]] = field(default_factory=list)
    failure: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.failure is None and self.M is not None and self.M_inv is not None


def _query(transcript: AttackTranscript, oracle: Oracle, kind: str, v: int) -> int:
    if kind == "enc":
        out = oracle.encrypt(v)
        transcript.queries_enc.append((v, out))
    else:
        out = oracle.decrypt(v)
        transcript.queries_dec.append((v, out))
    return out


def _rows_from_probes(base: int, images: Sequence[int]) -> BitMatrix:
    b = flatten_coords(base)
    return BitMatrix(BLOCK_WIDTH, tuple(flatten_coords(y) ^ b for y in images))


def recover_affine(oracle: Oracle, variant: int = 1, strict: bool = True,
                   spot_points: Sequence[int] = DEFAULT_SPOT_POINTS) -> AttackTranscript:
    """Recover (M, t) with 7 encryptions, plus 7 decryptions for variant 2.

    Probes are 0 and the unit vectors e'_i; their coordinate vectors are the
    same unit vectors, so each probe yields one row. Variant 2 probes the
    inverse map at the same seven points. Unless `strict`, a few extra
    encryptions check the recovered map on points that were not queried.

    Running out of budget ends the attack with `failure` set; a singular M
    or a failed spot check raises AttackError.
    """
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    tr = AttackTranscript(variant)
    probes = [1 << i for i in range(BLOCK_WIDTH)]
    try:
        tr.t = _query(tr, oracle, "enc", 0)
        images = [_query(tr, oracle, "enc", e) for e in probes]
        tr.M = _rows_from_probes(tr.t, images)
        if variant == 1:
            try:
                tr.M_inv = mat_inverse(tr.M)
            except SingularMatrixError as exc:
                raise AttackError(f"recovered M is singular: {exc}") from exc
        else:
            s = _query(tr, oracle, "dec", 0)
            pre = [_query(tr, oracle, "dec", e) for e in probes]
            tr.M_inv = _rows_from_probes(s, pre)
            if tr.M @ tr.M_inv != BitMatrix.identity(BLOCK_WIDTH):
                raise AttackError("encryption and decryption probes are inconsistent")
        if not strict:
            for v in spot_points:
                got = _query(tr, oracle, "enc", v)
                want = reconstruct(tr, "enc", v)
                tr.spot_checks.append((v, got, want))
                if got != want:
                    raise AttackError(f"spot check failed at {v:02X}: oracle {got:02X}, "
                                      f"model {want:02X}")
    except BudgetExceeded as exc:
        tr.failure = str(exc)
    return tr


def reconstruct(transcript: AttackTranscript, direction: str, v: int) -> int:
    """Encrypt or decrypt v from the recovered (M, t) alone."""
    if transcript.M is None or transcript.t is None:
        raise ValueError("transcript has no recovered map")
    t = flatten_coords(transcript.t)
    if direction == "enc":
        return unflatten_coords(transcript.M.apply(flatten_coords(v)) ^ t)
    if direction == "dec":
        if transcript.M_inv is None:
            raise ValueError("transcript has no inverse")
        return unflatten_coords(transcript.M_inv.apply(flatten_coords(v) ^ t))
    raise ValueError("direction must be 'enc' or 'dec'")


@dataclass(frozen=True)
class CostReport:
    variant: int
    enc_queries: int
    dec_queries: int
    baseline: int
    failures: Tuple[str, ...]

    @property
    def total(self) -> int:
        return self.enc_queries + self.dec_queries

    @property
    def beats_brute_force(self) -> bool:
        return not self.failures and self.total < self.baseline

    def line(self) -> str:
        verdict = "cheaper than brute force" if self.beats_brute_force else "NOT cheaper"
        text = (f"cost: {self.enc_queries} enc + {self.dec_queries} dec = {self.total} "
                f"oracle calls vs {self.baseline} encryptions for key search ({verdict})")
        for f in self.failures:
            text += f"\nfailure: {f}"
        return text


def cost_report(transcript: AttackTranscript) -> CostReport:
    failures = (transcript.failure,) if transcript.failure else ()
    return CostReport(transcript.variant, len(transcript.queries_enc),
                      len(transcript.queries_dec), BRUTE_FORCE_BASELINE, failures)


def format_transcript(transcript: AttackTranscript) -> str:
    """Deterministic text report: queries, M, t and the cost line."""
    w = BLOCK_WIDTH
    lines = [f"variant {transcript.variant}"]
    for v, c in transcript.queries_enc:
        lines.append(f"ENC {v:02X} -> {c:02X}")
    for c, v in transcript.queries_dec:
        lines.append(f"DEC {c:02X} -> {v:02X}")
    for v, got, want in transcript.spot_checks:
        lines.append(f"SPOT {v:02X} oracle={got:02X} model={want:02X}")
    if transcript.t is not None:
        lines.append(f"t = {transcript.t:02X} [t] = {bits_to_str(flatten_coords(transcript.t), w)}")
    if transcript.M is not None:
        lines.append("M =")
        lines += ["  " + r for r in transcript.M.to_strings()]
    if transcript.M_inv is not None:
        lines.append("M^-1 =")
        lines += ["  " + r for r in transcript.M_inv.to_strings()]
    lines.append(cost_report(transcript).line())
    return "\n".join(lines) + "\n"


def verify_against(transcript: AttackTranscript, enc_table: Sequence[int]) -> int:
    """Number of blocks where the reconstruction disagrees with a known table."""
    bad = 0
    for v, c in enumerate(enc_table):
        if reconstruct(transcript, "enc", v) != c or reconstruct(transcript, "dec", c) != v:
            bad += 1
    return bad
