"""``darwinscope`` command-line front end.

Reports are ``key=value`` lines on stdout.  Exit codes: 0 success, 1 the
analysis answered "no" (not comparable, no decomposition, ...), 2 bad input.

Arguments that take a state, partition or decomposition also accept fixture
tokens ``<fixture>.<key>``, e.g. ``ambiguity4.state``, ``fig1a.A`` or
``ambiguity4.B`` (a decomposition where one is expected).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .approx import fit_ghz
from .darwinism import joint_distribution, pointer_from_decomposition, redundancy, sbs_check
from .errors import DarwinscopeError
from .fixtures import FIXTURE_NAMES, build_fixture
from .ghz import detect_ghz, etut_scan, fine_grain, match_decompositions, verify_semi_ghz
from .hilbert import HermitianObservable
from .partitions import DEFAULT_ENUMERATION_CAP, Partition, classify_relative, comparable_set, is_comparable, pair_covers

OK, NEGATIVE, INPUT_ERROR = 0, 1, 2
SEED_ENV = "DARWINSCOPE_SEED"


class InputError(DarwinscopeError):
    pass


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _fixture_token(text: str):
    name, dot, key = text.rpartition(".")
    if dot and name in FIXTURE_NAMES and not Path(text).exists():
        return build_fixture(name), key
    return None, None


def load_state(text: str):
    fx, key = _fixture_token(text)
    if fx is not None:
        if key != "state" or fx.state is None:
            raise InputError(f"fixture {fx.name} has no state {key!r}")
        return fx.state
    sf = io.read_state(text)
    if sf.renormalized:
        print(f"warning: {text}: state renormalized (norm error {sf.norm_error:.3g})", file=sys.stderr)
    return sf.state


def load_partition(text: str, n_systems: int | None = None) -> Partition:
    fx, key = _fixture_token(text)
    if fx is not None:
        if key not in fx.partitions:
            raise InputError(f"fixture {fx.name} has no partition {key!r} (have {', '.join(fx.partitions)})")
        part = fx.partitions[key]
        if n_systems is not None and part.n_systems != n_systems:
            raise InputError(f"partition {part} covers {part.n_systems} systems, state has {n_systems}")
        return part
    return Partition.parse(text, n_systems)


def load_decomposition(text: str):
    fx, key = _fixture_token(text)
    if fx is not None:
        if key not in fx.decompositions:
            raise InputError(f"fixture {fx.name} has no decomposition {key!r}")
        return fx.decompositions[key]
    return io.read_decomposition(text)


def _systems(text: str) -> tuple[int, ...]:
    try:
        return tuple(sorted(int(t) for t in text.split(",")))
    except ValueError:
        raise InputError(f"expected comma-separated system indices, got {text!r}") from None


def _bool(v: bool) -> str:
    return "true" if v else "false"


def _pair(w) -> str:
    return "none" if w is None else f"({w[0]},{w[1]})"


def _num(x: float) -> str:
    return io.fmt(x)


def _emit_decomposition(dec, out):
    if out:
        io.write_decomposition(out, dec)
        print(f"written={out}")


def cmd_comparable(args) -> int:
    a = load_partition(args.a)
    b = load_partition(args.b, a.n_systems)
    fwd = is_comparable(b, a)
    rev = is_comparable(a, b)
    print(f"comparable={_bool(fwd.value)} witness={_pair(fwd.witness)}")
    print(f"reverse_comparable={_bool(rev.value)} reverse_witness={_pair(rev.witness)}")
    print(f"relation={classify_relative(b, a, system_fixed=args.system_fixed).kind.value}")
    return OK if fwd else NEGATIVE


def cmd_comparable_set(args) -> int:
    a = load_partition(args.a)
    count = 0
    for b in comparable_set(a, cap=args.cap):
        print(f"partition={b}")
        count += 1
    print(f"count={count}")
    return OK


def cmd_paircover(args) -> int:
    a = load_partition(args.a)
    b = load_partition(args.b, a.n_systems)
    res = pair_covers(a, b)
    print(f"pair_covers={_bool(res.value)} witness={_pair(res.witness)}")
    return OK if res else NEGATIVE


def cmd_detect(args) -> int:
    state = load_state(args.state)
    part = load_partition(args.partition, state.layout.n_systems)
    dec = detect_ghz(state, part, tol=args.tol, seed=args.seed)
    if dec is None:
        print("result=none")
        return NEGATIVE
    rep = verify_semi_ghz(state, dec, args.tol)
    print(f"result=ghz branches={dec.n_branches} partition={dec.partition}")
    print(f"reconstruction_error={_num(rep.reconstruction_error)}")
    for i, c in enumerate(dec.coefficients):
        print(f"coef[{i}]={_num(c.real)} {_num(c.imag)}")
    _emit_decomposition(dec, args.out)
    return OK


def cmd_verify(args) -> int:
    state = load_state(args.state)
    dec = load_decomposition(args.dec)
    rep = verify_semi_ghz(state, dec, args.tol)
    print(f"valid={_bool(rep.valid)} branches={rep.n_branches} orthonormal={_bool(rep.orthonormal)}")
    print(f"reconstruction_error={_num(rep.reconstruction_error)}")
    print("gram_ranks=" + ",".join(str(r) for r in rep.gram_ranks))
    for p in rep.problems:
        print(f"problem={p}")
    return OK if rep else NEGATIVE


def cmd_match(args) -> int:
    da = load_decomposition(args.dec1)
    db = load_decomposition(args.dec2)
    m = match_decompositions(da, db, args.tol)
    if m is None:
        print("match=false")
        return NEGATIVE
    print(f"match=true permutation={','.join(map(str, m.permutation))} max_residual={_num(m.max_residual)}")
    print("phases=" + ",".join(_num(p) for p in m.phases))
    return OK


def cmd_finegrain(args) -> int:
    state = load_state(args.state)
    dec = load_decomposition(args.dec)
    fine = fine_grain(state, dec, tol=args.tol, seed=args.seed)
    print(f"partition={fine.partition} branches={fine.n_branches}")
    print(f"refined={_bool(fine.partition != dec.partition)}")
    _emit_decomposition(fine, args.out)
    return OK


def _pointer(args, state) -> HermitianObservable:
    if args.dec:
        return pointer_from_decomposition(load_decomposition(args.dec))
    if not args.pointer:
        raise InputError("give --pointer SYSTEMS or --dec DEC")
    targets = state.layout.check_subset(_systems(args.pointer), proper=True)
    d = state.layout.dim_of(targets)
    return HermitianObservable.computational(targets, d)


def cmd_mutualinfo(args) -> int:
    state = load_state(args.state)
    s_obs = _pointer(args, state)
    targets = state.layout.check_subset(_systems(args.fragment), proper=True)
    f_obs = HermitianObservable.computational(targets, state.layout.dim_of(targets))
    dist = joint_distribution(state, s_obs, f_obs)
    print(f"I_bits={_num(dist.mutual_information())}")
    print(f"H_S_bits={_num(dist.entropy_s())}")
    print(f"H_S_given_F_bits={_num(dist.conditional_entropy_s_given_f())}")
    return OK


def cmd_redundancy(args) -> int:
    state = load_state(args.state)
    pointer = _pointer(args, state)
    rep = redundancy(state, pointer, delta=args.delta, seed=args.seed)
    for line in rep.key_values():
        print(line)
    print(f"search={rep.search}")
    return OK


def cmd_sbs(args) -> int:
    state = load_state(args.state)
    part = load_partition(args.partition, state.layout.n_systems)
    if part.system is None:
        raise InputError("sbs needs a partition with a marked system fraction (S: prefix)")
    if args.dec:
        basis = pointer_from_decomposition(load_decomposition(args.dec))
    else:
        basis = np.eye(state.layout.dim_of(part.system_fraction))
    rep = sbs_check(state, part, basis, args.trace, tol=args.tol)
    print(f"sbs={_bool(rep.is_sbs)} branches={rep.n_branches} structure_error={_num(rep.structure_error)}")
    for fid, i, j, f in rep.violations:
        print(f"violation fraction={fid} branches=({i},{j}) fidelity={_num(f)}")
    for r in rep.reasons:
        print(f"reason={r}")
    return OK if rep else NEGATIVE


def cmd_fit(args) -> int:
    state = load_state(args.state)
    part = load_partition(args.partition, state.layout.n_systems)
    reference = load_decomposition(args.reference) if args.reference else None
    if args.branches is None and reference is None:
        raise InputError("give --branches or --reference")
    res = fit_ghz(state, part, args.branches, seed=args.seed, restarts=args.restarts, reference=reference)
    print(f"delta2={_num(res.delta2)}")
    print(f"converged={_bool(res.converged)}")
    print(f"iterations={res.iterations}")
    print(f"restart_winner={res.restart_winner}")
    if res.epsilon is not None:
        print(f"max_abs_eps={_num(res.epsilon.max_abs_eps)}")
        print(f"max_abs_eps_s_diag={_num(res.epsilon.max_abs_eps_s_diag)}")
    else:
        print("max_abs_eps=none")
        print("max_abs_eps_s_diag=none")
    return OK


def cmd_etut_scan(args) -> int:
    state = load_state(args.state)
    part = load_partition(args.partition, state.layout.n_systems)
    rep = etut_scan(state, part, tol=args.tol, match_tol=args.match_tol, seed=args.seed, cap=args.cap)
    if rep.reference is None:
        print("reference=none")
        return NEGATIVE
    for b in rep.violations:
        print(f"THEOREM-VIOLATION partition={b}")
    print(f"reference_branches={rep.reference.n_branches}")
    print(f"enumerated={rep.enumerated} comparable={rep.comparable} detected={rep.detected}")
    print(f"violations={len(rep.violations)}")
    return OK


def cmd_fixture(args) -> int:
    params = {}
    if args.name == "comdec":
        params = {"alpha": complex(args.alpha), "beta": complex(args.beta)}
    elif args.alpha is not None or args.beta is not None:
        raise InputError("--alpha/--beta only apply to the comdec fixture")
    fx = build_fixture(args.name, **params)
    for key, part in fx.partitions.items():
        print(f"partition.{key}={part}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if fx.state is not None:
            io.write_state(out / f"{fx.name}.state", fx.state)
            print(f"written={out / f'{fx.name}.state'}")
        for key, dec in fx.decompositions.items():
            io.write_decomposition(out / f"{fx.name}.{key}.dec", dec)
            print(f"written={out / f'{fx.name}.{key}.dec'}")
    status = OK
    if args.check:
        for key, expected, actual, ok in fx.check():
            print(f"check.{key}={'ok' if ok else 'FAIL'} expected={expected!r} actual={actual!r}")
            if not ok:
                status = NEGATIVE
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="darwinscope", description="Redundant-record analysis of pure multipartite states.")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")

    sp = sub.add_parser("comparable", help="is B comparable to A?")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.add_argument("--system-fixed", action="store_true")
    sp.set_defaults(func=cmd_comparable)

    sp = sub.add_parser("comparable-set", help="list partitions mutually comparable with A")
    sp.add_argument("a")
    sp.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    sp.set_defaults(func=cmd_comparable_set)

    sp = sub.add_parser("paircover", help="does a pair of A fractions overlap every B fraction?")
    sp.add_argument("a")
    sp.add_argument("b")
    sp.set_defaults(func=cmd_paircover)

    sp = sub.add_parser("detect", help="find a GHZ-like decomposition")
    sp.add_argument("state")
    sp.add_argument("partition")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out", help="write the decomposition to this file")
    seeded(sp)
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("verify", help="check a decomposition against a state")
    sp.add_argument("state")
    sp.add_argument("dec")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("match", help="match the branches of two decompositions")
    sp.add_argument("dec1")
    sp.add_argument("dec2")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_match)

    sp = sub.add_parser("finegrain", help="split environment fractions while staying GHZ-like")
    sp.add_argument("state")
    sp.add_argument("dec")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--out")
    seeded(sp)
    sp.set_defaults(func=cmd_finegrain)

    sp = sub.add_parser("mutualinfo", help="classical mutual information of pointer and fragment readouts")
    sp.add_argument("state")
    sp.add_argument("--pointer", help="system indices measured in the computational basis")
    sp.add_argument("--dec", help="take the pointer basis from this decomposition's system fraction")
    sp.add_argument("--fragment", required=True, help="fragment indices measured in the computational basis")
    sp.set_defaults(func=cmd_mutualinfo)

    sp = sub.add_parser("redundancy", help="redundancy R_delta of the pointer records")
    sp.add_argument("state")
    sp.add_argument("--pointer")
    sp.add_argument("--dec")
    sp.add_argument("--delta", type=float, default=0.0)
    seeded(sp)
    sp.set_defaults(func=cmd_redundancy)

    sp = sub.add_parser("sbs", help="spectrum broadcast structure after tracing one fraction")
    sp.add_argument("state")
    sp.add_argument("partition")
    sp.add_argument("--trace", type=int, required=True, help="1-based id of the environment fraction to trace out")
    sp.add_argument("--dec", help="pointer basis from this decomposition (default: computational)")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_sbs)

    sp = sub.add_parser("fit", help="best GHZ-like frame with k branches")
    sp.add_argument("state")
    sp.add_argument("partition")
    sp.add_argument("--branches", type=int, help="branch count (default: that of --reference)")
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--reference", help="decomposition to compute epsilon matrices against")
    seeded(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("etut-scan", help="detect over the whole comparable set and compare with the reference")
    sp.add_argument("state")
    sp.add_argument("partition")
    sp.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--match-tol", type=float, default=1e-6)
    seeded(sp)
    sp.set_defaults(func=cmd_etut_scan)

    sp = sub.add_parser("fixture", help="emit a canonical example")
    sp.add_argument("name", choices=FIXTURE_NAMES)
    sp.add_argument("--out-dir")
    sp.add_argument("--check", action="store_true", help="evaluate the expected-properties manifest")
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--beta", default=None)
    sp.set_defaults(func=cmd_fixture)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = default_seed()
        if args.command == "fixture" and args.name == "comdec":
            args.alpha = "0.5" if args.alpha is None else args.alpha
            args.beta = "0.5" if args.beta is None else args.beta
        return args.func(args)
    except (DarwinscopeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
