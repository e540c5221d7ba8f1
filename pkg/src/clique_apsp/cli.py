"""``clique-apsp``: run pipelines on generated or loaded graphs, or run audit suites."""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

from .audit import SUITES, run_suites
from .config import DEFAULT
from .graph import Graph, gen_graph
from .oracles import exact_apsp, max_ratio
from .pipeline import MODES, run_pipeline

CSV_COLUMNS = ["n", "mode", "t", "eps", "seed", "rounds_total", "max_ratio", "claimed_factor", "wall_ms"]


def _default_seed() -> int:
    return int(os.environ.get("CLIQUE_APSP_SEED", "1"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clique-apsp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a pipeline and write report.json plus a CSV")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--gen", action="append", metavar="SPEC",
                     help="generator spec such as erdos_renyi:64:0.1:w=1-20 (repeatable)")
    src.add_argument("--input", action="append", metavar="PATH", help="edge-list file (repeatable)")
    r.add_argument("--mode", choices=MODES, default="full")
    r.add_argument("--t", type=int, default=1, help="reduction budget for --mode truncated")
    r.add_argument("--eps", type=float, default=0.1)
    r.add_argument("--seed", type=int, default=None, help="default: $CLIQUE_APSP_SEED or 1")
    r.add_argument("--reps", type=int, default=1, help="seeds seed .. seed+reps-1")
    r.add_argument("--bandwidth-exp", type=int, default=None,
                   help="c in Congested-Clique[log^c n]; default 1 (4 for large_bw)")
    r.add_argument("--knn-mode", choices=("auto", "faithful", "fast"), default="auto")
    r.add_argument("--audit", action="store_true", help="compare against exact distances")
    r.add_argument("--out", default="out", help="output directory")

    a = sub.add_parser("audit", help="run invariant suites")
    a.add_argument("--suite", action="append", choices=sorted(SUITES))
    a.add_argument("--seed", type=int, default=None)
    a.add_argument("--n", type=int, default=None)
    a.add_argument("--i", type=int, default=None, help="maximum power for the filter suite")
    a.add_argument("--fault", action="store_true", help="inject an underweight hopset edge")
    a.add_argument("--out", default=None, help="write suite results as JSON here")
    return p


def _graphs(args):
    for spec in args.gen or []:
        yield spec, lambda seed, s=spec: gen_graph(s, seed)
    for path in args.input or []:
        g = Graph.read(path)
        yield path, lambda seed, g=g: g


def cmd_run(args) -> int:
    seed0 = _default_seed() if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs, rows, violations = [], [], 0
    for source, make in _graphs(args):
        for seed in range(seed0, seed0 + args.reps):
            g = make(seed)
            t0 = time.perf_counter()
            rep = run_pipeline(g, args.mode, args.t, args.eps, seed, args.bandwidth_exp,
                               DEFAULT, args.knn_mode)
            wall_ms = (time.perf_counter() - t0) * 1000
            ratio, unsound = (None, None)
            if args.audit:
                ratio, unsound = max_ratio(rep.estimate.values, exact_apsp(g).values)
                violations += unsound
            runs.append({"source": source, "params": rep.params, "ledger": rep.ledger.to_dict(),
                         "info": rep.info, "claimed_factor": rep.estimate.claimed_factor,
                         "max_ratio": ratio, "soundness_violations": unsound,
                         "timing": {"wall_ms": wall_ms}})
            rows.append({"n": g.n, "mode": args.mode,
                         "t": args.t if args.mode == "truncated" else "",
                         "eps": args.eps, "seed": seed, "rounds_total": rep.rounds,
                         "max_ratio": "" if ratio is None else f"{ratio:.6f}",
                         "claimed_factor": f"{rep.estimate.claimed_factor:.6f}",
                         "wall_ms": f"{wall_ms:.1f}"})
            status = "" if ratio is None else f" max_ratio={ratio:.4f} unsound={unsound}"
            print(f"{source} seed={seed} n={g.n} rounds={rep.rounds}{status}")
    report = {"params": {"mode": args.mode, "t": args.t, "eps": args.eps, "seed": seed0,
                         "reps": args.reps, "bandwidth_exp": args.bandwidth_exp,
                         "config": DEFAULT.to_dict()},
              "runs": runs,
              "max_ratio": max((r["max_ratio"] for r in runs if r["max_ratio"] is not None), default=None),
              "soundness_violations": violations if args.audit else None}
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=float))
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    return 1 if violations else 0


def cmd_audit(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    results = run_suites(args.suite, seed, args.n, args.i, args.fault)
    for r in results:
        print(r.line())
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(json.dumps([r.to_dict() for r in results], indent=2, default=str))
    return 0 if all(r.passed for r in results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return cmd_run(args) if args.command == "run" else cmd_audit(args)


if __name__ == "__main__":
    sys.exit(main())
