"""Command line entry point.

    sdla run --preset fig1 --seeds 0..19 --out DIR
    sdla run --spec FILE
    sdla oracle --scenario FILE --samples 2000
    sdla audit --log FILE
    sdla compare --dir DIR --metric fluctuation

The default output root is ``$SDLA_OUT`` (``./runs`` when unset).
Exit codes: 0 success, 1 audit found violations, 2 configuration error,
3 oracle failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import AuditError, OracleError, audit_recursion, solve_ne
from .channel import ConfigError
from .experiments import (
    METRICS,
    PRESETS,
    compare,
    load_logs,
    load_spec,
    parse_seeds,
    preset,
    read_runlog,
    run,
    scenario_fingerprint,
)
from .rng import stream
from .scenario import load_scenario

EXIT_OK, EXIT_VIOLATIONS, EXIT_CONFIG, EXIT_ORACLE, EXIT_IO = 0, 1, 2, 3, 4
OUT_ENV = "SDLA_OUT"


def output_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "runs"))


def _cmd_run(args) -> int:
    if (args.preset is None) == (args.spec is None):
        raise ConfigError("give exactly one of --preset or --spec")
    if args.preset is not None:
        spec = preset(args.preset, iterations=args.iterations,
                      seeds=args.seeds if args.seeds is not None else (0,))
    else:
        spec = load_spec(args.spec)
        if args.seeds is not None:
            spec = type(spec).from_dict(dict(spec.to_dict(), seeds=parse_seeds(args.seeds)))
        if args.iterations is not None:
            spec = type(spec).from_dict(dict(spec.to_dict(), iterations=args.iterations))
    if args.workers is not None:
        spec = type(spec).from_dict(dict(spec.to_dict(), workers=args.workers))
    out = args.out or spec.out or output_root() / spec.name
    res = run(spec, out=out)
    print(f"wrote {len(res.logs)} run logs to {res.out_dir}")
    for key, rep in res.diagnostics.items():
        print(f"  v={key}: gamma PD fraction {rep.gamma_pd_fraction:.3f}, tau_hat {rep.tau_hat:.4g}, "
              f"L_hat {rep.lipschitz_hat:.4g}, recursion violations {rep.recursion_violations}")
        for note in rep.notices:
            print(f"  notice: {note}")
    return EXIT_OK


def _cmd_oracle(args) -> int:
    scn = load_scenario(args.scenario)
    sol = solve_ne(scn.cfg, scn.dist, args.method, args.tol, args.max_iter, args.samples,
                   stream(args.seed, "oracle"))
    doc = {"p_star": sol.p_star.tolist(), "residual": sol.residual, "method": sol.method,
           "samples_used": sol.samples_used, "sweeps": sol.sweeps}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_audit(args) -> int:
    runlog = read_runlog(args.log)
    if runlog.algorithm == "iwfa":
        raise ConfigError("the recursion audit applies to SDLA logs only")
    audit = audit_recursion(runlog, np.asarray(runlog.meta["p_star"]), c_hat=args.c_hat)
    print(f"{args.log}: {audit.violations} violations over {runlog.iterations} steps "
          f"(C_hat = {audit.c_hat:.6g})")
    return EXIT_VIOLATIONS if audit.violations else EXIT_OK


def _cmd_compare(args) -> int:
    logs = load_logs(args.dir)
    if not logs:
        raise FileNotFoundError(f"no run logs in {args.dir}")
    groups: dict = {}
    for r in logs:
        groups.setdefault(scenario_fingerprint(r), []).append(r)
    for rs in groups.values():
        if len(groups) > 1:
            print(f"scenario perturbation {rs[0].meta['scenario']['perturbation']}")
        print(compare(rs, args.metric, reference=args.reference).format())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sdla", description="Distributed NE learning experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a preset or a spec file")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--spec")
    p.add_argument("--seeds", help='e.g. "0..19" or "1,2,3"')
    p.add_argument("--iterations", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("oracle", help="solve for the NE reference of a scenario")
    p.add_argument("--scenario", required=True, help="YAML file or preset name (strong, weak)")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--method", choices=("saa", "mean"), default="saa")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("audit", help="re-check the distance recursion on a run log")
    p.add_argument("--log", required=True)
    p.add_argument("--c-hat", type=float)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("compare", help="per-arm medians across seeds")
    p.add_argument("--dir", required=True)
    p.add_argument("--metric", choices=METRICS, default="nse_final")
    p.add_argument("--reference")
    p.set_defaults(func=_cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OracleError as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ConfigError, AuditError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
