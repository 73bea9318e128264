"""Command line: ``ville build | verify | analyze | catalog``.

Exit codes: 0 success, 1 a hard check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis as A
from .core import ThresholdError
from .driver import RunConfig, TraceRetention, build, build_finite
from .io import (encode_csv, encode_packed, encode_text, parse_threshold, read_bits,
                 write_atomic, _csv_bytes)
from .selection import CATALOG, FamilyConfigError, UndefinedIndexError, resolve_family

ALL_CHECKS = ("half", "alternation", "budget", "blocks", "deficit", "finite-bound",
              "convergence", "fluctuation")
INPUT_CHECKS = ("half", "finite-bound", "convergence", "fluctuation")


class ConfigError(Exception):
    pass


def _emit(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        write_atomic(path, data)


def _config(args, full: bool) -> RunConfig:
    try:
        family = resolve_family(args.family)
        rule = parse_threshold(args.threshold)
    except (FamilyConfigError, ThresholdError) as e:
        raise ConfigError(str(e)) from None
    if args.length < 0:
        raise ConfigError(f"--length must be >= 0, got {args.length}")
    return RunConfig(family, args.length, rule,
                     TraceRetention.FULL if full else TraceRetention.NONE)


def _run(cfg: RunConfig):
    try:
        return build(cfg)
    except ThresholdError as e:
        raise ConfigError(str(e)) from None


def _indices(text: str | None, family, default_max: int) -> list[int]:
    if text is None:
        top = default_max if not family.is_finite else min(default_max, len(family))
        return list(range(1, top + 1))
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--select expects a comma list of indices, got {text!r}") from None
    for ell in out:
        if ell < 1 or (family.is_finite and ell > len(family)):
            raise ConfigError(f"undefined index {ell} for family with "
                              f"{len(family) if family.is_finite else 'infinitely many'} functions")
    return out


def cmd_build(args) -> int:
    cfg = _config(args, full=args.trace is not None)
    res = _run(cfg)
    enc = {"text": encode_text, "packed": encode_packed, "csv": encode_csv}[args.format]
    _emit(args.out, enc(res.bits))
    if args.trace is not None:
        tr = res.trace
        lines = ["n,cutoff,witness,active_set,bit"]
        for n in range(len(tr)):
            s = " ".join(map(str, tr.sets[tr.set_ids[n]]))
            lines.append(f"{n + 1},{tr.cutoffs[n]},{tr.witnesses[n]},{s},{tr.bits[n]}")
        write_atomic(args.trace, ("\n".join(lines) + "\n").encode())
    return 0


def cmd_verify(args) -> int:
    if args.checks:
        checks = [c.strip() for c in args.checks.split(",") if c.strip()]
        unknown = [c for c in checks if c not in ALL_CHECKS]
        if unknown:
            raise ConfigError(f"unknown check(s): {', '.join(unknown)}")
    else:
        checks = None
    try:
        family = resolve_family(args.family)
        rule = parse_threshold(args.threshold)
    except (FamilyConfigError, ThresholdError) as e:
        raise ConfigError(str(e)) from None

    if checks is None:
        if args.input:
            checks = ["half"]
        else:
            checks = [c for c in ALL_CHECKS if c != "finite-bound" or family.is_finite]
    if "finite-bound" in checks and not family.is_finite:
        raise ConfigError("finite-bound requires a finite family")
    if args.input:
        bad = [c for c in checks if c not in INPUT_CHECKS]
        if bad:
            raise ConfigError(f"checks {bad} need a construction trace; drop --input")

    results: list[A.CheckResult] = []
    trace = None
    if args.input:
        try:
            bits = read_bits(args.input, args.length if args.length else None)
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read --input: {e}") from None
    else:
        if args.length is None:
            raise ConfigError("--length is required without --input")
        needs_trace = any(c in checks for c in ("alternation", "budget", "blocks", "deficit"))
        cfg = _config(args, full=needs_trace)
        res = _run(cfg)
        bits, trace = res.bits, res.trace
    ells = _indices(args.select, family, 5)

    for c in checks:
        if c == "half":
            results.append(A.verify_half_bound(bits))
        elif c == "alternation":
            results.append(A.verify_alternation(trace))
        elif c == "budget":
            results.append(A.verify_cutoff_budget(trace, rule))
        elif c in ("blocks", "deficit"):
            for ell in ells:
                zb = A.zeta_blocks(trace, A.select(bits, family, ell))
                results.append(A.verify_block_facts(zb, rule) if c == "blocks"
                               else A.deficit_bounds(zb))
        elif c == "finite-bound":
            fb = bits if args.input else build_finite(family, len(bits))
            results.append(A.verify_finite_bound(fb, family))
        elif c == "convergence":
            for ell in ells:
                cr = A.convergence_report(A.select(bits, family, ell))
                if cr.exempt:
                    status, msg = A.INFO, f"f{ell}: finite care, exempt"
                else:
                    ok = (cr.final_deviation is not None and cr.final_deviation <= 0.05
                          and cr.envelope_ok())
                    status = A.PASS if ok else A.FAIL
                    msg = f"f{ell}: |S/m - 1/2| = {cr.final_deviation:.3g} at m = {cr.checkpoints[-1]}"
                results.append(A.CheckResult("convergence", status, msg, {
                    "ell": ell, "checkpoints": cr.checkpoints, "deviations": cr.deviations,
                    "envelope": cr.envelope, "exempt": cr.exempt}, hard=False))
        elif c == "fluctuation":
            for ell in ells:
                fr = A.fluctuation_report(A.select(bits, family, ell), rule)
                target = fr.target_exponent
                ok = fr.exponent is None or target is None or fr.exponent <= target + 0.1
                status = A.PASS if ok else A.FAIL
                msg = (f"f{ell}: delta in [{fr.min_delta}, {fr.max_delta}], "
                       f"slope {fr.exponent if fr.exponent is None else round(fr.exponent, 3)}")
                results.append(A.CheckResult("fluctuation", status, msg, {
                    "ell": ell, "max_two_delta": fr.max_two_delta,
                    "min_two_delta": fr.min_two_delta, "exponent": fr.exponent,
                    "target_exponent": target}, hard=False))
                if ell == 1:
                    # delta_1 <= 0 restates the half bound, so it is exact
                    results.append(A.CheckResult(
                        "fluctuation", A.PASS if fr.max_two_delta == 0 else A.FAIL,
                        f"f1: max delta = {fr.max_delta}", {"ell": 1}, hard=True))

    for r in results:
        print(r.line())
    failed = any(r.hard and r.status == A.FAIL for r in results)
    if args.report:
        report = {"family": args.family, "length": int(len(bits)), "threshold": args.threshold,
                  "passed": not failed,
                  "checks": [{"name": r.name, "status": r.status, "hard": r.hard,
                              "message": r.message, "details": r.details} for r in results]}
        write_atomic(args.report, json.dumps(report, indent=2, default=_jsonable).encode())
    return 1 if failed else 0


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def cmd_analyze(args) -> int:
    cfg = _config(args, full=False)
    ells = _indices(args.select, cfg.family, 5)
    res = _run(cfg)
    out = Path(args.out_dir)
    summary, fluct = [], []
    for ell in ells:
        sel = A.select(res.bits, cfg.family, ell)
        S, td = sel.sums, sel.two_delta
        rows = np.column_stack([np.arange(1, sel.count + 1), sel.positions, sel.bits,
                                S[1:], td[1:]])
        write_atomic(out / f"select_{ell}.csv",
                     _csv_bytes(["m", "n_m", "bit", "S_l", "two_delta"], rows))
        cr = A.convergence_report(sel)
        fr = A.fluctuation_report(sel, cfg.rule)
        run_min = np.minimum.accumulate(td)
        for c, dev, env in zip(cr.checkpoints, cr.deviations, cr.envelope):
            lil = A.lil_curve(c, 0.0) if c >= 3 else float("nan")
            summary.append(f"{ell},{c},{sel.positions[c - 1]},{S[c]},{td[c]},{dev:.6g},"
                           f"{env:.6g},{run_min[c]},{lil:.6g}")
        lil_end = A.lil_curve(sel.count, 0.0) if sel.count >= 3 else float("nan")
        fluct.append(",".join(str(x) for x in (
            ell, sel.count, int(sel.finite_care), fr.max_two_delta, fr.argmax,
            fr.min_two_delta, fr.argmin, _fmt(fr.exponent), _fmt(fr.target_exponent),
            _fmt(fr.constant), _fmt(fr.sup_constant), _fmt(lil_end))))
    write_atomic(out / "summary.csv", ("ell,m,n_m,S_l,two_delta,deviation,window_max_deviation,"
                                       "running_min_two_delta,lil\n"
                                       + "".join(s + "\n" for s in summary)).encode())
    write_atomic(out / "fluctuation.csv", (
        "ell,selected,finite_care,max_two_delta,argmax_m,min_two_delta,argmin_m,"
        "fitted_exponent,target_exponent,fitted_constant,sup_constant,lil_at_end\n"
        + "".join(s + "\n" for s in fluct)).encode())
    return 0


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else f"{x:.6g}"


def cmd_catalog(args) -> int:
    for name, sig, meaning in CATALOG:
        print(f"{sig:<18} {meaning}")
    print(f"{'rest = suffix_binary':<18} f_m = suffix(binary digits of m) for every later m")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ville", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, length_required=True):
        sp.add_argument("--family", required=True,
                        help="builtin name (always-only, two-fn, mixed-5, infinite) or config path")
        sp.add_argument("--length", type=int, required=length_required, help="number of bits N")
        sp.add_argument("--threshold", default="exp:3", help="exp:<r> or table:<path>")

    b = sub.add_parser("build", help="construct the sequence")
    common(b)
    b.add_argument("--format", choices=("text", "packed", "csv"), default="text")
    b.add_argument("--out", default="-")
    b.add_argument("--trace", help="per-stage CSV: n,cutoff,witness,active_set,bit")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="check invariants on a constructed prefix")
    common(v, length_required=False)
    v.add_argument("--checks", help="comma list of " + ",".join(ALL_CHECKS))
    v.add_argument("--select", help="indices for per-selection checks (default 1..5)")
    v.add_argument("--report", help="write a JSON report")
    v.add_argument("--input", help="check this bit file instead of building")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", help="write per-selection CSVs and a summary")
    common(a)
    a.add_argument("--select", help="comma list of indices (default 1..5)")
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("catalog", help="list selection functions")
    c.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except (ConfigError, UndefinedIndexError) as e:
        print(f"ville: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
