"""Command line front end.

Exit codes: 0 pass, 1 property violation, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import harness
from .adversaries import SetupError
from .core import ProtocolViolation, tally
from .oracle import mean_ci, run_suite_entry

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise harness.ConfigError(f"cannot read {path}: {exc}") from exc


def _apply_overrides(data: dict, args) -> dict:
    data = dict(data)
    data["learner"] = dict(data.get("learner", {}))
    if getattr(args, "alpha", None) is not None:
        data["learner"]["alpha"] = args.alpha
    if getattr(args, "expensive", False):
        data["learner"]["expensive"] = True
    if getattr(args, "trials", None) is not None:
        data["trials"] = args.trials
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        data["out"] = args.out
    if getattr(args, "no_timing", False):
        data["timing"] = False
    return data


def cmd_run(args) -> int:
    data = _apply_overrides(_load_json(args.config), args)
    T = args.horizon if args.horizon is not None else data.get("horizons", [64])[0]
    seed = data.get("seed", 0)
    res = harness.run_one(data["learner"], data["adversary"], T, 0, seed, timing=not args.no_timing)
    for r in res.transcript.rounds:
        pred = "abstain" if r.prediction == 0 else f"{r.prediction:+d}"
        print(f"{r.t}\tq={r.q}\tx={r.x}\tpred={pred}\ty={r.y:+d}")
    t = tally(res.transcript)
    print(f"# T={T} seed={seed} alpha={res.row.alpha} err_mis={t.err_mis} err_abs={t.err_abs} combined={t.combined}")
    if res.spec is not None and res.alpha is not None:
        from .acceptance import mistake_bound_holds
        ok, _ = mistake_bound_holds(res)
        if not ok:
            print("# FAIL: mistake bound violated")
            return EXIT_VIOLATION
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = harness.ExperimentConfig.from_dict(_apply_overrides(_load_json(args.config), args))
    cfg.workers = args.workers
    results = harness.run_sweep_streamed(cfg)
    rows = [r.row for r in results]
    if not cfg.out:
        sys.stdout.write(harness.rows_to_csv(rows))
    bounds = {}
    for T in cfg.horizons:
        res = next((r for r in results if r.row.T == T and r.spec is not None and r.alpha is not None), None)
        if res is not None:
            bounds[T] = harness.bound_values(res.spec, res.alpha, T)
    text, _ = harness.emit_report(rows, bounds)
    print(text, file=sys.stderr)
    return EXIT_VIOLATION if "FAIL" in text else EXIT_OK


def cmd_verify(args) -> int:
    if args.suite:
        entries = _load_json(args.suite)
    else:
        entries = json.loads(resources.files("injectlab").joinpath("data/verify_suite.json").read_text())
    if not isinstance(entries, list):
        raise harness.ConfigError("a suite file holds a list of checks")
    ok = True
    for entry in entries:
        try:
            rep = run_suite_entry(entry)
        except (KeyError, ValueError, TypeError) as exc:
            raise harness.ConfigError(f"bad suite entry {entry!r}: {exc}") from exc
        print(rep.line())
        if rep.counterexample is not None:
            print(f"  counterexample: {rep.counterexample!r}")
        ok &= rep.ok
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_lowerbound(args) -> int:
    T = args.horizon or 400
    trials = args.trials or 200
    seed = args.seed or 0
    floor = 0.1 * T ** 0.5
    ok = True
    for name, block in (("always-abstain", {"score": "abstain"}), ("always-minus", {"score": "minus"}),
                        ("seg potential", {"score": "seg", "alpha": args.alpha or "auto"})):
        cfg = harness.ExperimentConfig(block, {"kind": "hard_tree"}, [T], trials, seed, timing=False)
        rows = [r.row for r in harness.run_sweep_detailed(cfg)]
        mean, lo, hi = mean_ci([r.combined for r in rows])
        passed = mean >= floor
        ok &= passed
        print(f"{name}: mean combined {mean:.2f} [{lo:.2f}, {hi:.2f}] "
              f"{'>=' if passed else '<'} {floor:.2f} {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_accept(args) -> int:
    from .acceptance import run_battery
    only = None
    if args.only:
        only = {int(v) for v in args.only.split(",")}
    results = run_battery(only, seed=args.seed or 0, scale=args.scale)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return EXIT_OK if not failed else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="injectlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--alpha", help="number, 'auto' or 'sqrt'")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--out")
        sp.add_argument("--expensive", action="store_true", help="allow the transcript score at large T")
        sp.add_argument("--no-timing", action="store_true", help="write runtime_ms=0 for byte-identical output")

    sp = sub.add_parser("run", help="single episode, prints the transcript")
    sp.add_argument("config")
    sp.add_argument("-T", "--horizon", type=int)
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="experiment config to CSV")
    sp.add_argument("config")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run an oracle suite (default: the bundled one)")
    sp.add_argument("suite", nargs="?")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("lowerbound", help="hard-tree suite")
    sp.add_argument("-T", "--horizon", type=int)
    common(sp)
    sp.set_defaults(func=cmd_lowerbound)

    sp = sub.add_parser("accept", help="full acceptance battery")
    sp.add_argument("--only", help="comma-separated criterion numbers")
    sp.add_argument("--scale", type=float, default=1.0, help="multiply Monte-Carlo trial counts")
    common(sp)
    sp.set_defaults(func=cmd_accept)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (harness.ConfigError, SetupError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolViolation as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
