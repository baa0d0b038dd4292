"""Command line entry point: ``hiddensum <group> <command> [flags]``."""

from __future__ import annotations

import argparse
import logging
import random
import secrets
import sys
from pathlib import Path
from typing import List, Optional

from . import attack as atk
from . import differential as dfa
from . import hidden_sum as hs
from . import oracle as orc
from . import toy_cipher as toy
from .gf2 import PermutationTable, bits_to_str, parse_permutation, str_to_bits

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _product(path: str) -> hs.RingProduct:
    try:
        return hs.parse_product(_read(path))
    except hs.ProductError:
        raise
    except ValueError as exc:
        raise UsageError(f"malformed product file {path}: {exc}") from exc


def _perm(path: str) -> PermutationTable:
    try:
        return parse_permutation(_read(path))
    except ValueError as exc:
        raise UsageError(f"malformed permutation file {path}: {exc}") from exc


def _hex6(s: str) -> int:
    try:
        v = int(s, 16)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not hex: {s!r}") from None
    if not 0 <= v < 64 or len(s) > 2:
        raise argparse.ArgumentTypeError(f"expected 2 hex digits 00..3F, got {s!r}")
    return v


def _spec(args) -> toy.ToyCipherSpec:
    if getattr(args, "spec", None):
        try:
            spec = toy.parse_spec(_read(args.spec))
        except ValueError as exc:
            raise UsageError(f"malformed spec file {args.spec}: {exc}") from exc
        if getattr(args, "rounds", None) is not None:
            spec = toy.ToyCipherSpec(spec.convention, args.rounds, spec.sbox, spec.mixing)
        return spec
    conv = toy.FieldConvention.from_id(args.convention) if getattr(args, "convention", None) \
        else toy.DEFAULT_CONVENTION
    rounds = args.rounds if getattr(args, "rounds", None) is not None else toy.DEFAULT_ROUNDS
    return toy.ToyCipherSpec(conv, rounds)


def _op(args) -> Optional[hs.RingProduct]:
    if args.op == "plus":
        return None
    if not args.product:
        raise UsageError("--op circ needs --product")
    return _product(args.product)


# -- hs ------------------------------------------------------------------------

def cmd_hs_enumerate(args) -> int:
    if args.n > hs.MAX_EXHAUSTIVE_WIDTH and args.seed is None and not args.allow_exhaustive:
        raise UsageError(f"exhaustive enumeration refused for n={args.n}; give --seed and --limit")
    count = 0
    for p in hs.enumerate_products(args.n, limit=args.limit, seed=args.seed,
                                   allow_exhaustive=args.allow_exhaustive):
        count += 1
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"n{args.n}_{count:05d}.prod").write_text(hs.format_product(p))
        if not args.quiet:
            print(f"{p.code():x} u_dim={hs.hidden_sum(p).u_dim} "
                  + " ".join(f"{i + 1}{j + 1}:{bits_to_str(v, p.width)}"
                             for (i, j), v in p.table().items()))
    print(f"#SUMMARY check=enumerate n={args.n} count={count} seed={args.seed}")
    return EXIT_OK


def cmd_hs_validate(args) -> int:
    try:
        p = hs.parse_product(_read(args.product))
    except hs.ProductError as exc:
        print(f"INVALID {type(exc).__name__}: {exc}")
        print(f"#SUMMARY check=validate valid=0 error={type(exc).__name__}")
        return EXIT_VIOLATION
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"VALID n={p.width} u_dim={hs.hidden_sum(p).u_dim} "
          f"std_translations={int(hs.contains_std_translations(p))}")
    print(f"#SUMMARY check=validate valid=1 n={p.width}")
    return EXIT_OK


def cmd_hs_u_space(args) -> int:
    p = _product(args.product)
    basis = hs.u_space_dual(p) if args.dual else hs.u_space(p)
    print(f"dimension {len(basis)}")
    for b in basis:
        print(bits_to_str(b, p.width))
    print(f"#SUMMARY check=u_space n={p.width} dim={len(basis)}")
    return EXIT_OK


def cmd_hs_exterior(args) -> int:
    p = hs.exterior_algebra(args.k)
    text = hs.format_product(p)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    labels = hs.exterior_basis_labels(args.k)
    mins = min(1 << len(hs.annihilator(a, p)) for a in range(1, 1 << p.width))
    print(f"# basis: {' '.join(labels)}")
    print(f"#SUMMARY check=exterior k={args.k} n={p.width} u_dim={len(hs.u_space(p))} "
          f"min_annihilator={mins}")
    return EXIT_OK


def cmd_hs_coords(args) -> int:
    p = _product(args.product)
    x = str_to_bits(args.x)
    if len(args.x) != p.width:
        raise UsageError(f"--x needs {p.width} bits")
    ct = hs.coordinate_table(p)
    lam = hs.coordinates(x, ct)
    print(bits_to_str(lam, p.width))
    print(f"#SUMMARY check=coords x={args.x} lambda={bits_to_str(lam, p.width)} "
          f"basis={','.join(bits_to_str(b, p.width) for b in ct.basis)}")
    return EXIT_OK


# -- diff ----------------------------------------------------------------------

def cmd_diff_ddt(args) -> int:
    f = _perm(args.perm)
    table = dfa.ddt(f, _op(args))
    csv = table.to_csv()
    if args.csv:
        Path(args.csv).write_text(csv)
    else:
        sys.stdout.write(csv)
    print(f"#SUMMARY check=ddt n={f.width} op={table.op_tag} delta={table.max_nontrivial()}")
    return EXIT_OK


def cmd_diff_delta(args) -> int:
    f = _perm(args.perm)
    op = _op(args)
    d = dfa.delta_uniformity(f, op)
    print(d)
    print(f"#SUMMARY check=delta n={f.width} op={dfa.op_tag(op)} delta={d}")
    return EXIT_OK


def cmd_diff_verify_bounds(args) -> int:
    if args.product:
        products = [_product(args.product)]
    elif args.n:
        products = list(hs.enumerate_products(args.n))
    else:
        raise UsageError("give --product or --n")
    bad = 0
    for p in products:
        report = dfa.verify_theorem_bound(p, args.mode, args.budget, args.seed)
        if not args.quiet:
            print(report.text())
        print(report.summary())
        bad += len(report.violations)
    print(f"{'OK' if not bad else 'FAIL'} {bad} violations over {len(products)} products")
    print(f"# note: {dfa.EXCLUDED_NOTE}")
    return EXIT_OK if not bad else EXIT_VIOLATION


def cmd_diff_fact1(args) -> int:
    if args.mode == "sampled" and args.seed is None:
        raise UsageError("sampled mode needs --seed")
    try:
        report = dfa.fact1_scan(args.n, args.mode, args.seed, args.budget, long=args.long)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(report.text())
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_diff_parallel(args) -> int:
    if args.perm:
        f = _perm(args.perm)
    else:
        f = dfa.search_permutation(4, 4, args.seed)
        print(f"searched f (seed {args.seed}): {list(f.images)}")
    g = _perm(args.perm2) if args.perm2 else f
    pm = dfa.parallel_map(f, g)
    d = dfa.delta_uniformity(pm)
    print(d)
    print(f"#SUMMARY check=parallel delta_f={dfa.delta_uniformity(f)} "
          f"delta_g={dfa.delta_uniformity(g)} delta_parallel={d} n={pm.width}")
    return EXIT_OK


# -- toy -----------------------------------------------------------------------

def cmd_toy_keygen(args) -> int:
    key = random.Random(args.seed).randrange(64) if args.seed is not None else secrets.randbelow(64)
    print(f"{key:02X}")
    return EXIT_OK


def cmd_toy_encrypt(args) -> int:
    spec = _spec(args)
    fn = toy.encrypt if args.command == "encrypt" else toy.decrypt
    print(f"{fn(args.input, args.key, spec):02X}")
    return EXIT_OK


def cmd_toy_check_trapdoor(args) -> int:
    spec = _spec(args)
    report = toy.trapdoor_check(spec)
    print(report.text())
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_VIOLATION


def cmd_toy_convention_search(args) -> int:
    result = toy.convention_search()
    print(result.text())
    ok = result.chosen is not None
    print(f"#SUMMARY check=convention_search chosen={result.chosen.id if ok else 'none'} "
          f"passing={sum(r.passed for r in result.matrix.values())}/{len(result.matrix)}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_toy_write_spec(args) -> int:
    text = toy.format_spec(_spec(args))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- attack / serve ------------------------------------------------------------

def cmd_attack_run(args) -> int:
    if (args.target is None) == (args.local_key is None):
        raise UsageError("give exactly one of --target or --local-key")
    if args.local_key is not None:
        spec = _spec(args)
        oracle = orc.LocalOracle(spec, args.local_key, args.enc_budget, args.dec_budget)
        tr = atk.recover_affine(oracle, args.variant, strict=args.strict)
        verification = None
        if tr.complete:
            bad = atk.verify_against(tr, oracle.enc_table)
            verification = f"verification: {64 - bad}/64 blocks reconstructed in both directions"
    else:
        with orc.OracleClient(args.target) as client:
            tr = atk.recover_affine(client, args.variant, strict=args.strict)
        verification = ("verification: spot checks passed" if tr.spot_checks
                        else "verification: M . M^-1 = I" if args.variant == 2 and tr.complete
                        else "verification: none (strict mode, remote key)")
    sys.stdout.write(atk.format_transcript(tr))
    if verification:
        print(verification)
    cost = atk.cost_report(tr)
    print(f"#SUMMARY check=attack variant={tr.variant} enc={cost.enc_queries} "
          f"dec={cost.dec_queries} baseline={cost.baseline} "
          f"beats_brute_force={int(cost.beats_brute_force)}")
    return EXIT_OK if cost.beats_brute_force else EXIT_VIOLATION


def cmd_serve(args) -> int:
    host, port = orc.parse_endpoint(args.listen)
    spec = _spec(args)
    key = args.key if args.key is not None else secrets.randbelow(64)
    server = orc.OracleServer((host, port), spec, key, args.enc_budget, args.dec_budget)
    print(f"listening on {server.endpoint} rounds={spec.rounds} "
          f"enc_budget={args.enc_budget} dec_budget={args.dec_budget}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _cipher_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="toy cipher spec file")
    p.add_argument("--rounds", type=int)
    p.add_argument("--convention", help="field convention id, e.g. a120-row")


def _op_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--op", choices=["plus", "circ"], default="plus")
    p.add_argument("--product", help="product file defining the circle operation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiddensum", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group", required=True)

    g = groups.add_parser("hs", help="hidden sums and products").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("enumerate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--allow-exhaustive", action="store_true")
    p.add_argument("--out-dir")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_hs_enumerate)
    p = g.add_parser("validate")
    p.add_argument("--product", required=True)
    p.set_defaults(func=cmd_hs_validate)
    p = g.add_parser("u-space")
    p.add_argument("--product", required=True)
    p.add_argument("--dual", action="store_true")
    p.set_defaults(func=cmd_hs_u_space)
    p = g.add_parser("exterior")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hs_exterior)
    p = g.add_parser("coords")
    p.add_argument("--product", required=True)
    p.add_argument("--x", required=True, help="bitstring, first character is x_1")
    p.set_defaults(func=cmd_hs_coords)

    g = groups.add_parser("diff", help="differential uniformity").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("ddt")
    p.add_argument("--perm", required=True)
    p.add_argument("--csv")
    _op_flags(p)
    p.set_defaults(func=cmd_diff_ddt)
    p = g.add_parser("delta")
    p.add_argument("--perm", required=True)
    _op_flags(p)
    p.set_defaults(func=cmd_diff_delta)
    p = g.add_parser("verify-bounds")
    p.add_argument("--product")
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_diff_verify_bounds)
    p = g.add_parser("fact1")
    p.add_argument("--n", type=int, required=True, choices=[3, 4, 5])
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--long", action="store_true", help="allow the exhaustive n=4 sweep")
    p.set_defaults(func=cmd_diff_fact1)
    p = g.add_parser("parallel")
    p.add_argument("--perm", help="f; searched with --seed when omitted")
    p.add_argument("--perm2", help="g; defaults to f")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_diff_parallel)

    g = groups.add_parser("toy", help="the 6-bit toy cipher").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("keygen")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_toy_keygen)
    for name in ("encrypt", "decrypt"):
        p = g.add_parser(name)
        p.add_argument("--key", type=_hex6, required=True)
        p.add_argument("--in", dest="input", type=_hex6, required=True)
        _cipher_flags(p)
        p.set_defaults(func=cmd_toy_encrypt)
    p = g.add_parser("check-trapdoor")
    _cipher_flags(p)
    p.set_defaults(func=cmd_toy_check_trapdoor)
    p = g.add_parser("convention-search")
    p.set_defaults(func=cmd_toy_convention_search)
    p = g.add_parser("write-spec")
    p.add_argument("--out")
    _cipher_flags(p)
    p.set_defaults(func=cmd_toy_write_spec)

    g = groups.add_parser("attack", help="hidden-sum global deduction").add_subparsers(
        dest="command", required=True)
    p = g.add_parser("run")
    p.add_argument("--target", help="tcp://host:port of an oracle server")
    p.add_argument("--local-key", type=_hex6)
    p.add_argument("--variant", type=int, choices=[1, 2], default=1)
    p.add_argument("--strict", action="store_true", help="exactly 7 (+7) queries, no spot checks")
    p.add_argument("--enc-budget", type=int, default=orc.DEFAULT_ENC_BUDGET)
    p.add_argument("--dec-budget", type=int, default=orc.DEFAULT_DEC_BUDGET)
    _cipher_flags(p)
    p.set_defaults(func=cmd_attack_run)

    p = groups.add_parser("serve", help="run the oracle server")
    p.add_argument("--listen", default="127.0.0.1:6464")
    p.add_argument("--key", type=_hex6)
    p.add_argument("--enc-budget", type=int, default=orc.DEFAULT_ENC_BUDGET)
    p.add_argument("--dec-budget", type=int, default=orc.DEFAULT_DEC_BUDGET)
    _cipher_flags(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            print("#FAIL reason=usage message=bad command line")
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"#FAIL reason=usage message={exc}")
        return EXIT_USAGE
    except (hs.ProductError, orc.OracleError, atk.AttackError) as exc:
        print(f"#FAIL reason={type(exc).__name__} message={exc}")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
