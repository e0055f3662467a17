"""Command line entry point: bound, evaluate, construct, simulate, verify.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import min_alphabet
from .noise import MAX_TABLE_SIZE, NoiseModel, point_index, sample_correlated_pairs
from .protocol import (
    build_center_set,
    build_protocol,
    protocol_from_dict,
    protocol_to_dict,
    size_window,
    verify_protocol,
)
from .sets import (
    Cylinder,
    DegenerateSetError,
    HammingBall,
    evaluate,
    read_explicit_set,
)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def provenance(subcommand: str, params: dict, seed) -> dict:
    return {
        "tool": "nicd",
        "version": __version__,
        "subcommand": subcommand,
        "params": dict(sorted(params.items())),
        "seed": seed,
    }


def csv_header(prov: dict) -> str:
    return "".join(
        f"# {line}\n"
        for line in (
            f"nicd {prov['version']}",
            f"subcommand: {prov['subcommand']}",
            f"params: {json.dumps(prov['params'], sort_keys=True)}",
            f"seed: {json.dumps(prov['seed'])}",
        )
    )


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def to_json(obj) -> str:
    # insertion order keeps the provenance block first
    return json.dumps(obj, indent=2) + "\n"


def float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    return vals


def int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


_DESCRIPTOR = re.compile(r"^(cylinder|ball):(.*)$")
_FIELDS = {"cylinder": {"s": int, "n": int, "k": int}, "ball": {"s": int, "n": int, "alpha": float, "variant": str}}
_REQUIRED = {"cylinder": ("s", "n", "k"), "ball": ("s", "n", "alpha")}


def parse_descriptor(text: str):
    """'cylinder:s=..,n=..,k=..', 'ball:s=..,n=..,alpha=..[,variant=zero]' or a file path."""
    m = _DESCRIPTOR.match(text)
    if not m:
        path = Path(text)
        if path.exists():
            return read_explicit_set(path)
        raise UsageError(f"descriptor {text!r}: expected 'cylinder:...', 'ball:...' or an existing file")
    kind, body = m.groups()
    fields = _FIELDS[kind]
    values = {}
    pos = len(kind) + 1
    for part in body.split(","):
        if "=" not in part:
            raise UsageError(f"descriptor {text!r}: expected key=value at position {pos}, got {part!r}")
        key, raw = (v.strip() for v in part.split("=", 1))
        if key not in fields:
            raise UsageError(f"descriptor {text!r}: unknown field {key!r} at position {pos}")
        try:
            values[key] = fields[key](raw)
        except ValueError:
            raise UsageError(f"descriptor {text!r}: bad value {raw!r} for field {key!r} at position {pos}") from None
        pos += len(part) + 1
    missing = [f for f in _REQUIRED[kind] if f not in values]
    if missing:
        raise UsageError(f"descriptor {text!r}: missing field(s) {', '.join(missing)}")
    try:
        if kind == "cylinder":
            return Cylinder(values["s"], values["n"], values["k"])
        return HammingBall(values["s"], values["n"], values["alpha"], values.get("variant", "nonzero"))
    except ValueError as exc:
        raise UsageError(f"descriptor {text!r}: {exc}") from None


def with_length(spec, n: int):
    if isinstance(spec, Cylinder):
        return Cylinder(spec.s, n, spec.k)
    if isinstance(spec, HammingBall):
        return HammingBall(spec.s, n, spec.alpha, spec.variant)
    raise UsageError("--n only applies to cylinder and ball descriptors")


def cmd_bound(args) -> int:
    if not args.epsilon or not args.delta:
        raise UsageError("--epsilon and --delta need at least one value each")
    params = {"epsilon": args.epsilon, "delta": args.delta, "s_max": args.s_max, "trace": args.trace}
    rows, trace_rows = [], []
    for eps in args.epsilon:
        for delta in sorted(args.delta):
            try:
                res = min_alphabet(delta, eps, s_max=args.s_max, trace=args.trace)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            rows.append(
                {
                    "epsilon": eps,
                    "delta": delta,
                    "S": res.S if res.S is not None else "",
                    "p": "" if res.p is None else repr(res.p),
                    "sigma_sq": "" if res.sigma_sq is None else repr(res.sigma_sq),
                    "capped": int(res.capped),
                    "trivial": int(res.trivial),
                    "monotone": int(res.monotone),
                }
            )
            trace_rows.extend({"epsilon": eps, "delta": delta, "s": s, "sigma_sq": sq, "p": p} for s, sq, p in res.trace)
    prov = provenance("bound", params, None)
    if args.format == "json":
        emit(to_json({"provenance": prov, "rows": rows, "trace": trace_rows if args.trace else None}), args.out)
    else:
        buf = io.StringIO()
        buf.write(csv_header(prov))
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        emit(buf.getvalue(), args.out)
        if args.trace:
            tbuf = io.StringIO()
            tbuf.write(csv_header(prov))
            tw = csv.DictWriter(tbuf, fieldnames=["epsilon", "delta", "s", "sigma_sq", "p"], lineterminator="\n")
            tw.writeheader()
            tw.writerows(trace_rows)
            if args.out:
                Path(args.out).with_suffix(".trace.csv").write_text(tbuf.getvalue())
            else:
                sys.stdout.write(tbuf.getvalue())
    return EXIT_FAIL if all(r["capped"] for r in rows) else EXIT_OK


def cmd_evaluate(args) -> int:
    base = parse_descriptor(args.set)
    specs = [with_length(base, n) for n in args.n] if args.n else [base]
    params = {"set": args.set, "epsilon": args.epsilon, "n": args.n}
    reports = []
    for spec in specs:
        for eps in args.epsilon:
            try:
                rep = evaluate(spec, NoiseModel(spec.s, eps)).to_dict()
            except DegenerateSetError as exc:
                rep = {"degenerate": str(exc)}
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            rep.update({"s": spec.s, "n": spec.n, "epsilon": eps, "set": type(spec).__name__.lower()})
            reports.append(rep)
    prov = provenance("evaluate", params, None)
    if args.format == "csv":
        keys = ["set", "s", "n", "epsilon", "probability", "joint", "conditional", "m_value", "method", "degenerate"]
        buf = io.StringIO()
        buf.write(csv_header(prov))
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        writer.writerows(reports)
        emit(buf.getvalue(), args.out)
    else:
        emit(to_json({"provenance": prov, "reports": reports}), args.out)
    return EXIT_OK


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("NICD_THREADS", "1")))
    except ValueError:
        return 1


def cmd_construct(args) -> int:
    A = read_explicit_set(args.set)
    if A.s**A.n > MAX_TABLE_SIZE:
        raise UsageError("the set's domain exceeds the enumeration guard")
    if not 0 <= args.k <= A.n:
        raise UsageError(f"k must lie in [0, {A.n}]")
    lo, hi = size_window(A.s, A.n, args.k)
    warning = None
    if not lo <= len(A) <= hi:
        warning = f"|A| = {len(A)} is outside the window [{lo:g}, {hi:g}]; the 1/16 guarantee does not apply"
        print(f"warning: {warning}", file=sys.stderr)
    model = NoiseModel(A.s, args.epsilon)
    seeds = list(range(args.seed, args.seed + args.seeds))

    def attempt(seed):
        tp = build_protocol(A, build_center_set(A.s, A.n, args.k, seed))
        return seed, tp, verify_protocol(tp, A, model)

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        results = list(pool.map(attempt, seeds))
    best_seed, best_tp, best_rep = max(results, key=lambda r: (r[2].agreement, -r[0]))
    params = {"set": str(args.set), "k": args.k, "epsilon": args.epsilon, "seeds": args.seeds}
    prov = provenance("construct", params, args.seed)
    protocol = protocol_to_dict(best_tp, seed=best_seed, include_decoder=not args.no_decoder)
    report = best_rep.to_dict()
    report.update(
        {
            "best_seed": best_seed,
            "seeds_tried": len(seeds),
            "mean_ratio": float(np.mean([r[2].ratio for r in results])),
            "warning": warning,
        }
    )
    if args.out:
        Path(args.out).write_text(to_json({"provenance": prov, "protocol": protocol}))
    emit(to_json({"provenance": prov, "report": report}), args.report)
    ok = best_rep.uniform_output and best_rep.uniform_given_agreement
    if warning is None:
        ok = ok and best_rep.stable
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    data = json.loads(Path(args.protocol).read_text())
    tp = protocol_from_dict(data.get("protocol", data))
    model = NoiseModel(tp.s, args.epsilon)
    x, y = sample_correlated_pairs(model, tp.n, args.samples, args.seed)
    fx = tp.decoder[point_index(x, tp.s)]
    fy = tp.decoder[point_index(y, tp.s)]
    hits = fx == fy
    est = float(hits.mean())
    stderr = float(np.sqrt(est * (1 - est) / args.samples))
    exact = verify_protocol(tp, tp.A, model).agreement
    params = {"protocol": str(args.protocol), "epsilon": args.epsilon, "samples": args.samples}
    out = {
        "provenance": provenance("simulate", params, args.seed),
        "agreement_estimate": est,
        "standard_error": stderr,
        "exact_agreement": exact,
        "z_score": (est - exact) / stderr if stderr > 0 else 0.0,
    }
    emit(to_json(out), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    checks = run_suite(args.suite, seed=args.seed)
    failed = [c for c in checks if not c.informational and not c.passed]
    lines = [f"# nicd {__version__} verify {args.suite} seed={args.seed}"] + [c.line() for c in checks]
    lines.append(f"{args.suite}: {'FAIL' if failed else 'PASS'} ({len(checks) - len(failed)}/{len(checks)} ok)")
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nicd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"nicd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="minimal alphabet S(delta, eps) curves")
    p.add_argument("--epsilon", type=float_list, required=True)
    p.add_argument("--delta", type=float_list, required=True)
    p.add_argument("--s-max", type=int, default=10**6)
    p.add_argument("--trace", action="store_true", help="also emit the per-s (s, sigma_sq, p) trace")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("evaluate", help="agreement report for a set")
    p.add_argument("set", help="cylinder:s=..,n=..,k=.. | ball:s=..,n=..,alpha=.. | path to an explicit set")
    p.add_argument("--epsilon", type=float_list, required=True)
    p.add_argument("--n", type=int_list, default=None, help="override n for structured sets")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("construct", help="build a translation protocol from an explicit set")
    p.add_argument("--set", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--seed", type=int, default=0, help="first seed of the search")
    p.add_argument("--threads", type=int, default=default_threads())
    p.add_argument("--no-decoder", action="store_true", help="omit the decoder table from the protocol file")
    p.add_argument("--out", help="protocol JSON path")
    p.add_argument("--report", help="verification report path (default stdout)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("simulate", help="Monte Carlo agreement of a serialized protocol")
    p.add_argument("protocol")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a named invariant suite")
    p.add_argument("suite", help=", ".join(SUITES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"nicd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"nicd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
