"""Command-line front end.

Subcommands: keygen, verify-keys, simulate, verify, bench, attack, endorse.

Every command takes ``--seed``.  Each has a built-in default seed, so runs
are always protocol-deterministic; passing ``--seed`` explicitly
additionally switches the command into reproducible-output mode, where
wall-clock fields are left blank in whatever files and stdout it produces,
making two runs with the same arguments byte-identical.  Without an
explicit ``--seed``, timing fields are filled in.

Exit codes: 0 on success, 1 when a verification or an attack expectation
fails, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import time
from pathlib import Path

from . import gamma
from .attacks import ksum_forgery_attack, rogue_key_attack
from .endorsement import FlowComparison, run_default_flow, run_revised_flow
from .errors import (
    BackendRefused,
    BadLength,
    CapacityExceeded,
    IoError,
    MultisigError,
    NonCanonical,
    NotInGroup,
)
from .group import Group, curve_group, derive_rng, toy_group, toy_group_for_order
from .schemes import (
    agms_offline,
    agms_online,
    bare_keygen,
    cosi_sign,
    cosi_verify,
    derive_keys,
    gms_sign,
    key_aggregate,
    key_verify,
    load_public_keys,
    read_signature,
    save_public_keys,
    save_secret_keys,
    verify,
    write_signature,
)
from .tree import SimSchedule, build_tree, min_branching, transcript_to_jsonl

DEFAULT_SEED = 1729
_USAGE_ERRORS = (BackendRefused, BadLength, CapacityExceeded, IoError,
                 NonCanonical, NotInGroup, ValueError)


# ── shared options ───────────────────────────────────────────────────────────

def _add_backend(p: argparse.ArgumentParser, toy_q: int = 11) -> None:
    p.add_argument("--backend", choices=("toy", "curve"), default=None,
                   help="group backend (default: $MULTISIG_BACKEND or toy)")
    p.add_argument("--toy-q", type=int, default=toy_q, metavar="Q",
                   help=f"toy subgroup order, prime (default {toy_q})")


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed; passing it explicitly also blanks timing "
                        "fields so outputs are byte-reproducible "
                        f"(default {DEFAULT_SEED})")


def _resolve_group(args) -> Group:
    backend = args.backend or os.environ.get("MULTISIG_BACKEND") or "toy"
    if backend == "curve":
        return curve_group()
    if backend == "toy":
        if args.toy_q == 11:
            return toy_group()
        return toy_group_for_order(args.toy_q)
    raise ValueError(f"unknown backend {backend!r}")


def _resolve_seed(args) -> tuple[int, bool]:
    """Returns (seed, reproducible-output mode)."""
    if args.seed is None:
        return DEFAULT_SEED, False
    return args.seed, True


def _secret_path(out: str) -> str:
    p = Path(out)
    if p.suffix:
        return str(p.with_suffix(".secret" + p.suffix))
    return str(p) + ".secret"


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


# ── keygen ───────────────────────────────────────────────────────────────────

def cmd_keygen(args) -> int:
    par = _resolve_group(args)
    seed, _ = _resolve_seed(args)
    keys = derive_keys(par, args.count, seed)
    save_public_keys(args.out, par, keys)
    secret = _secret_path(args.out)
    save_secret_keys(secret, par, keys)
    print(f"wrote {args.out} ({args.count} public keys, backend {par.group_id})")
    print(f"wrote {secret}")
    return 0


# ── verify-keys ──────────────────────────────────────────────────────────────

def cmd_verify_keys(args) -> int:
    par, pks = load_public_keys(args.keys)
    bad = 0
    for i, pk in enumerate(pks):
        ok = key_verify(par, pk)
        bad += not ok
        print(f"key {i}: {'ok' if ok else 'FAIL'}")
    print(f"{len(pks) - bad}/{len(pks)} keys verified")
    return 1 if bad else 0


# ── simulate ─────────────────────────────────────────────────────────────────

def _simulate_tree_scheme(par, args, seed):
    """Returns (signature, verified, messages, exp counts, timings, attempts)."""
    branching = args.branching or min_branching(args.signers, args.depth)
    tree = build_tree(args.signers, branching, args.depth)
    keys = derive_keys(par, args.signers, seed)
    m = args.message.encode()
    schedule = SimSchedule(parallel=True) if args.parallel else None
    exps = {}
    timings = {}

    def snap():
        return par.ops_total.exponentiations

    if args.scheme == "agms":
        e0 = snap()
        off = agms_offline(par, tree, keys, seed=seed, schedule=schedule)
        exps["sign_offline"] = snap() - e0
        timings["offline_ns"] = off.wall_ns
        e0 = snap()
        run = agms_online(par, off, m, schedule=schedule)
        exps["sign_online"] = snap() - e0
        timings["online_ns"] = run.online_ns
        messages = off.messages + run.messages
    elif args.scheme == "gms":
        e0 = snap()
        run = gms_sign(par, tree, keys, m, seed=seed, schedule=schedule)
        exps["sign_online"] = snap() - e0
        timings["online_ns"] = run.online_ns
        messages = run.messages
    else:  # cosi
        e0 = snap()
        run = cosi_sign(par, tree, keys, m, seed=seed, schedule=schedule)
        exps["sign_online"] = snap() - e0
        timings["online_ns"] = run.online_ns
        messages = run.messages

    e0 = snap()
    t0 = time.perf_counter_ns()
    if args.scheme == "cosi":
        ok = cosi_verify(par, run.agg_key, m, run.signature)
    else:
        ok = verify(par, run.agg_key, m, run.signature)
    timings["verify_ns"] = time.perf_counter_ns() - t0
    exps["verify"] = snap() - e0
    return run.signature, ok, messages, exps, timings, run.attempts


def _simulate_gamma(par, args, seed):
    m = args.message.encode()
    key = gamma.keygen(par, derive_rng(seed, "key", 0))
    exps = {}
    timings = {}
    e0 = par.ops_total.exponentiations
    nonce = gamma.precompute(par, key, derive_rng(seed, "v", 0, 0))
    exps["sign_offline"] = par.ops_total.exponentiations - e0
    timings["offline_ns"] = nonce.wall_ns
    e0 = par.ops_total.exponentiations
    t0 = time.perf_counter_ns()
    sig = gamma.sign_online(par, key, nonce, m)
    timings["online_ns"] = time.perf_counter_ns() - t0
    exps["sign_online"] = par.ops_total.exponentiations - e0
    e0 = par.ops_total.exponentiations
    t0 = time.perf_counter_ns()
    ok = gamma.verify(par, key.y, m, sig)
    timings["verify_ns"] = time.perf_counter_ns() - t0
    exps["verify"] = par.ops_total.exponentiations - e0
    return sig, ok, [], exps, timings, 1


def cmd_simulate(args) -> int:
    if args.scheme == "gamma" and args.signers != 1:
        print("error: --scheme gamma is single-signer (use --signers 1)",
              file=sys.stderr)
        return 2
    par = _resolve_group(args)
    seed, reproducible = _resolve_seed(args)
    if args.scheme == "gamma":
        sig, ok, messages, exps, timings, attempts = _simulate_gamma(par, args, seed)
    else:
        sig, ok, messages, exps, timings, attempts = _simulate_tree_scheme(
            par, args, seed)

    sig_hex = sig.to_bytes(par).hex()
    print(f"scheme={args.scheme} backend={par.group_id} signers={args.signers}")
    print(f"attempts={attempts} messages={len(messages)}")
    print(f"signature={sig_hex}")
    for phase, n in exps.items():
        print(f"exp[{phase}]={n}")
    if not reproducible:
        for name, ns in timings.items():
            print(f"{name}={ns}")
    print(f"verified={'true' if ok else 'false'}")

    if args.out:
        write_signature(args.out, par, sig)
    if args.transcript is not None:
        Path(args.transcript).write_text(transcript_to_jsonl(messages))
    if args.metrics:
        doc = {
            "schema": "multisig/metrics/v1",
            "scheme": args.scheme,
            "backend": par.group_id,
            "signers": args.signers,
            "branching": args.branching or min_branching(args.signers, args.depth),
            "depth": args.depth,
            "seed": seed,
            "attempts": attempts,
            "message_hex": args.message.encode().hex(),
            "message_count": len(messages),
            "signature_hex": sig_hex,
            "exp_count": exps,
            "verified": ok,
        }
        if not reproducible:
            doc["timings"] = timings
        _write_json(args.metrics, doc)
    return 0 if ok else 1


# ── verify ───────────────────────────────────────────────────────────────────

def cmd_verify(args) -> int:
    par, pks = load_public_keys(args.keys)
    sig = read_signature(args.signature, par)
    m = args.message.encode()
    if args.scheme in ("gms", "agms"):
        for i, pk in enumerate(pks):
            if not key_verify(par, pk):
                print(f"key {i} failed its possession check; refusing to "
                      "aggregate")
                return 1
        ok = verify(par, key_aggregate(par, pks), m, sig)
    elif args.scheme == "cosi":
        ok = cosi_verify(par, key_aggregate(par, pks), m, sig)
    else:  # gamma
        ok = gamma.verify(par, pks[0].y, m, sig)
    print(f"signature valid: {'true' if ok else 'false'}")
    return 0 if ok else 1


# ── bench ────────────────────────────────────────────────────────────────────

def _bench_once(par, scheme, tree, keys, m, seed):
    """One rep: {phase: (wall_ns, exp_delta)}."""
    out = {}

    def timed(phase, fn):
        e0 = par.ops_total.exponentiations
        t0 = time.perf_counter_ns()
        result = fn()
        out[phase] = (time.perf_counter_ns() - t0,
                      par.ops_total.exponentiations - e0)
        return result

    if scheme == "agms":
        off = timed("sign_offline", lambda: agms_offline(par, tree, keys, seed=seed))
        run = timed("sign_online", lambda: agms_online(par, off, m))
        timed("verify", lambda: verify(par, run.agg_key, m, run.signature))
    elif scheme == "gms":
        run = timed("sign_online", lambda: gms_sign(par, tree, keys, m, seed=seed))
        timed("verify", lambda: verify(par, run.agg_key, m, run.signature))
    elif scheme == "cosi":
        run = timed("sign_online", lambda: cosi_sign(par, tree, keys, m, seed=seed))
        timed("verify", lambda: cosi_verify(par, run.agg_key, m, run.signature))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return out


def _fmt_mean(x: float):
    return int(x) if float(x).is_integer() else round(x, 3)


def cmd_bench(args) -> int:
    if args.reps < 1:
        print("error: --reps must be at least 1", file=sys.stderr)
        return 2
    par = _resolve_group(args)
    seed, reproducible = _resolve_seed(args)
    schemes_list = [s.strip() for s in args.schemes.split(",") if s.strip()]
    n_list = [int(s) for s in args.signers_list.split(",") if s.strip()]
    m = args.message.encode()
    rows = []
    for scheme in schemes_list:
        for n in n_list:
            branching = args.branching or min_branching(n, args.depth)
            tree = build_tree(n, branching, args.depth)
            keys = derive_keys(par, n, f"{seed}|{n}")
            samples: dict[str, list] = {}
            for rep in range(args.reps):
                once = _bench_once(par, scheme, tree, keys, m,
                                   f"{seed}|rep{rep}")
                for phase, (wall, exp) in once.items():
                    samples.setdefault(phase, []).append((wall, exp))
            for phase, vals in samples.items():
                walls = [w for w, _ in vals]
                exps = [e for _, e in vals]
                rows.append({
                    "scheme": scheme,
                    "N": n,
                    "phase": phase,
                    "mean_ns": _fmt_mean(statistics.fmean(walls)),
                    "std_ns": _fmt_mean(statistics.pstdev(walls)),
                    "exp_count": _fmt_mean(statistics.fmean(exps)),
                })
    if reproducible:
        for row in rows:
            row["mean_ns"] = ""
            row["std_ns"] = ""

    header = ["scheme", "N", "phase", "mean_ns", "std_ns", "exp_count"]
    if args.format == "json":
        doc = {"schema": "multisig/bench/v1", "rows": rows}
        if args.out:
            _write_json(args.out, doc)
            print(f"wrote {args.out} ({len(rows)} rows)")
        else:
            print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        table = [header] + [[r[h] for h in header] for r in rows]
        if args.out:
            _write_csv(args.out, table)
            print(f"wrote {args.out} ({len(rows)} rows)")
        else:
            w = csv.writer(sys.stdout)
            w.writerows(table)
    return 0


# ── attack ───────────────────────────────────────────────────────────────────

def cmd_attack(args) -> int:
    par = _resolve_group(args)
    seed, _ = _resolve_seed(args)
    if args.kind == "rogue":
        honest = [bare_keygen(par, derive_rng(seed, "honest-key", i)).public
                  for i in range(args.n_honest)]
        report = rogue_key_attack(par, honest, args.message.encode(),
                                  seed=seed, proof_attempts=args.retries_pop)
        doc = report.to_json_dict(par)
        expectation_met = report.baseline_accepts and report.proofs_accepted == 0
        verdict = (f"baseline_accepts={report.baseline_accepts} "
                   f"proofs_accepted={report.proofs_accepted}/"
                   f"{report.proof_attempts}")
    else:  # ksum
        report = ksum_forgery_attack(par, target=args.target, k=args.k,
                                     n_honest=args.n_honest,
                                     list_size=args.list_size,
                                     retries=args.retries, seed=seed)
        doc = report.to_json_dict(par)
        if args.target == "cosi":
            expectation_met = report.successes >= 1
        else:
            expectation_met = report.successes == 0
        verdict = (f"target={args.target} attempts={report.attempts} "
                   f"successes={report.successes}")
    doc["expectation_met"] = expectation_met
    if args.out:
        _write_json(args.out, doc)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(doc, sort_keys=True, indent=2))
    print(f"{verdict} expectation={'met' if expectation_met else 'VIOLATED'}")
    return 0 if expectation_met else 1


# ── endorse ──────────────────────────────────────────────────────────────────

def cmd_endorse(args) -> int:
    par = _resolve_group(args)
    seed, reproducible = _resolve_seed(args)
    n_list = [int(s) for s in args.endorsers_list.split(",") if s.strip()]
    proposal = args.message.encode()
    records = []
    for n in n_list:
        if args.flow in ("both", "revised"):
            records.append(run_revised_flow(par, n, proposal, seed=seed,
                                            depth=args.depth))
        if args.flow in ("both", "default"):
            records.append(run_default_flow(par, n, proposal, seed=seed))
    comparison = FlowComparison(records)

    for rec in records:
        print(f"{rec.flow} n={rec.n_endorsers}: "
              f"step7_verify_calls={rec.step7_verify_calls()} "
              f"signature_bytes={rec.signature_bytes} "
              f"accepted={'true' if rec.accepted else 'false'}")

    if args.format == "json":
        doc = comparison.to_json_dict(include_timing=not reproducible)
        if args.out:
            _write_json(args.out, doc)
            print(f"wrote {args.out}")
        else:
            print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        rows = comparison.csv_rows(include_timing=not reproducible)
        if args.out:
            _write_csv(args.out, rows)
            print(f"wrote {args.out} ({len(rows) - 1} rows)")
        else:
            csv.writer(sys.stdout).writerows(rows)
    return 0 if all(r.accepted for r in records) else 1


# ── parser ───────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multisig",
        description="Tree multi-signatures with an offline/online split: "
                    "key management, protocol simulation, benchmarks, attack "
                    "demos, and an endorsement-flow comparison.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate proof-carrying key pairs")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--out", required=True,
                   help="public key file; secrets go to <out>.secret.<ext>")
    _add_backend(p)
    _add_seed(p)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("verify-keys",
                       help="check every possession proof in a key file")
    p.add_argument("--keys", required=True)
    p.set_defaults(func=cmd_verify_keys)

    p = sub.add_parser("simulate",
                       help="run one signing protocol over a signer tree")
    p.add_argument("--scheme", choices=("gms", "agms", "cosi", "gamma"),
                   default="agms")
    p.add_argument("--signers", type=int, default=3)
    p.add_argument("--branching", type=int, default=None,
                   help="tree fan-out (default: smallest that fits --depth)")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--message", default="simulated transaction")
    p.add_argument("--out", default=None, help="write signature bytes here")
    p.add_argument("--metrics", default=None, help="write metrics JSON here")
    p.add_argument("--transcript", default=None,
                   help="write message transcript JSONL here")
    p.add_argument("--parallel", action="store_true",
                   help="run independent subtrees on threads; every output "
                        "value stays identical, timings aside")
    _add_backend(p)
    _add_seed(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="verify a signature file against keys")
    p.add_argument("--scheme", choices=("gms", "agms", "cosi", "gamma"),
                   default="agms")
    p.add_argument("--keys", required=True)
    p.add_argument("--signature", required=True)
    p.add_argument("--message", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="wall-clock and operation-count sweep")
    p.add_argument("--schemes", default="gms,agms,cosi")
    p.add_argument("--signers-list", default="4,16,64,256,1024,4096")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--branching", type=int, default=None)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--message", default="bench message")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_backend(p)
    _add_seed(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("attack", help="run an attack demo (toy backend only)")
    p.add_argument("kind", choices=("rogue", "ksum"))
    p.add_argument("--target", choices=("cosi", "agms"), default="cosi",
                   help="ksum only: cosi expects a forgery, agms expects none")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--list-size", type=int, default=None)
    p.add_argument("--retries", type=int, default=8)
    p.add_argument("--retries-pop", type=int, default=100,
                   help="rogue only: possession-proof forging attempts")
    p.add_argument("--n-honest", type=int, default=3)
    p.add_argument("--message", default="pay the usual 1")
    p.add_argument("--out", default=None)
    _add_backend(p, toy_q=65521)
    _add_seed(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("endorse",
                       help="compare endorsement flows step by step")
    p.add_argument("--endorsers-list", default="2,4,8,16,32")
    p.add_argument("--flow", choices=("both", "revised", "default"),
                   default="both")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--message", default="endorse proposal")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_backend(p)
    _add_seed(p)
    p.set_defaults(func=cmd_endorse)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MultisigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
