"""Command-line entry points: generate, solve, price, extract, bench, report.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 time limit
reached (partial output is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from kepcg.cg import CgConfig, solve_kep
from kepcg.errors import KepError, ParameterError, ParseError, SizeLimitError, ValidationError
from kepcg.graph import debug_dump, load_pricing, prepare, save_pricing
from kepcg.instance import (
    GAP_EPS,
    GeneratorParams,
    SolveStatus,
    generate,
    load_instance,
    save_instance,
    save_solution,
)
from kepcg.pricing import (
    ColoringPlan,
    DssrMode,
    NgConfig,
    NgConstruction,
    solve_color_coding,
    solve_exact,
    solve_local_search,
    solve_ng_dssr,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_TIME = 0, 2, 3, 4

DEFAULT_PAIRS = (50, 100)
DEFAULT_LENGTHS = (4, 7, 13)
DEFAULT_SEEDS = (1, 2, 3, 4, 5)

log = logging.getLogger("kepcg")


def _write_json(obj, path):
    text = json.dumps(obj, indent=1) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --------------------------------------------------------------------------
# generate
# --------------------------------------------------------------------------

def cmd_generate(args) -> int:
    params = GeneratorParams(args.pairs, args.altruists, args.seed, args.k, args.l,
                             unit_weights=not args.random_weights)
    inst = generate(params)
    save_instance(inst, args.output)
    log.info("wrote %s: %d pairs, %d altruists, %d arcs", args.output,
             len(inst.pairs), len(inst.altruists), len(inst.arcs))
    return EXIT_OK


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

def _cg_config(args, l: int) -> CgConfig:
    colors = args.colors or (l + 1)
    trials = args.cc_trials
    if trials == 0:
        trials = colors
    return CgConfig(
        cc_time_limit_s=args.cc_seconds,
        cc_max_trials=trials,
        colors=args.colors,
        seed=args.seed,
        ng=NgConfig(lam=args.ng_lambda, seed=args.seed),
        subpath_expansion=not args.no_subpaths,
        total_time_limit_s=args.time_limit,
    )


def cmd_solve(args) -> int:
    path = args.instance or args.instance_pos
    if path is None:
        raise _UsageError("solve needs an instance file")
    inst = load_instance(path).with_limits(args.k, args.l)
    sol, trace = solve_kep(inst, _cg_config(args, inst.l))
    out = sol.to_dict()
    _write_json(out, args.output)
    if args.trace:
        _write_json(trace.to_dict(), args.trace)
    if args.output not in (None, "-"):
        print(f"objective {sol.objective:g}  upper bound {sol.upper_bound:g}  "
              f"gap {sol.gap:.4%}  status {sol.status.value}")
    return EXIT_TIME if sol.status is SolveStatus.TIME_LIMIT else EXIT_OK


# --------------------------------------------------------------------------
# price
# --------------------------------------------------------------------------

def _sol_json(sol):
    if sol is None:
        return None
    return {"path": None if sol.path is None else list(sol.path), "cost": sol.cost,
            "elementary": sol.elementary}


def cmd_price(args) -> int:
    g = prepare(load_pricing(args.file))
    out: dict = {"algo": args.algo}
    if args.algo == "oracle":
        sol = solve_exact(g, prune=True)
        out["OPT"] = _sol_json(sol)
    elif args.algo == "ls":
        first, best = solve_local_search(g, args.time_limit, args.seed)
        out["LF"], out["LM"] = _sol_json(first), _sol_json(best)
    elif args.algo == "cc":
        plan = ColoringPlan(colors=args.colors or g.L + 1, seed=args.seed, rho=args.rho,
                            max_trials=args.trials)
        res = solve_color_coding(g, plan, time_limit_s=args.time_limit)
        out.update(best=_sol_json(res.best), first_negative=_sol_json(res.first_negative),
                   trials=res.trials_run, proven_optimal=res.proven_optimal)
        out["CF"], out["CM"] = out["first_negative"], out["best"]
    else:
        cfg = NgConfig(mode=DssrMode(args.dssr), lam=args.ng_lambda,
                       construction=NgConstruction(args.ng_sets), seed=args.seed)
        res = solve_ng_dssr(g, g.alpha or None, cfg)
        out["NG"] = {"bound": res.bound, "path": None if res.solution.path is None
                     else list(res.solution.path), "elementary": res.elementary,
                     "iterations": res.iterations}
    if args.compare_oracle and args.algo != "oracle":
        out["OPT"] = _sol_json(solve_exact(g, prune=True))
    if args.debug_dump:
        out["debug"] = debug_dump(g)
    _write_json(out, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# extract
# --------------------------------------------------------------------------

def extract_pricing_instances(inst, config: CgConfig):
    """Run a CG solve; return ``{"first"|"middle"|"last": PricingGraph}``."""
    graphs = []
    solve_kep(inst, config, on_pricing=lambda it, g: graphs.append(g))
    if not graphs:
        return {}
    return {"first": graphs[0], "middle": graphs[(len(graphs) - 1) // 2], "last": graphs[-1]}


def cmd_extract(args) -> int:
    inst = load_instance(args.instance).with_limits(args.k, args.l)
    picked = extract_pricing_instances(inst, _cg_config(args, inst.l))
    if not picked:
        print("no pricing iterations (instance has no altruist)", file=sys.stderr)
        return EXIT_OK
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.instance).stem
    for tag, g in picked.items():
        save_pricing(g, out_dir / f"{stem}_{tag}.json")
    return EXIT_OK


# --------------------------------------------------------------------------
# bench / report
# --------------------------------------------------------------------------

REPORT_FIELDS = ("key", "pairs", "altruists", "l", "seed", "status", "lp_ub", "ip_lb", "gap",
                 "ng_calls", "iterations", "columns", "runtime_s")


@dataclass
class BenchReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def aggregates(self) -> dict:
        if not self.rows:
            return {"instances": 0}
        gaps = [r["gap"] for r in self.rows]
        by_l = {}
        for r in self.rows:
            by_l.setdefault(r["l"], []).append(r["runtime_s"])
        return {
            "instances": len(self.rows),
            "mean_gap": sum(gaps) / len(gaps),
            "gap_zero": sum(1 for x in gaps if x <= 1e-9),
            "mean_runtime_by_l": {str(k): sum(v) / len(v) for k, v in sorted(by_l.items())},
            "total_runtime_s": sum(r["runtime_s"] for r in self.rows),
        }

    def to_dict(self) -> dict:
        return {"format": 1, "rows": self.rows, "aggregates": self.aggregates}

    @classmethod
    def from_dict(cls, data) -> BenchReport:
        rows = data.get("rows")
        if not isinstance(rows, list):
            raise ParseError("missing field", "rows")
        return cls(rows)


def bench_one(task) -> dict:
    pairs, l, seed, k, altruists, cc = task
    inst = generate(GeneratorParams(pairs, altruists, seed, k, l))
    C = cc.colors or (l + 1)
    cfg = replace(cc, cc_max_trials=cc.cc_max_trials or C)
    t0 = time.perf_counter()
    sol, trace = solve_kep(inst, cfg)
    ub = sol.upper_bound
    return {
        "key": f"P{pairs:03d}_L{l:02d}_s{seed:02d}",
        "pairs": pairs,
        "altruists": len(inst.altruists),
        "l": l,
        "seed": seed,
        "status": sol.status.value,
        "lp_ub": round(ub, 9),
        "ip_lb": round(sol.objective, 9),
        "gap": round((ub - sol.objective) / max(ub, GAP_EPS), 12),
        "ng_calls": trace.ng_calls,
        "iterations": len(trace.iterations),
        "columns": len(sol.pool),
        "runtime_s": round(time.perf_counter() - t0, 3),
    }


def run_bench(pairs=DEFAULT_PAIRS, lengths=DEFAULT_LENGTHS, seeds=DEFAULT_SEEDS, k=3,
              altruists=0.05, config: CgConfig | None = None, workers: int | None = None,
              progress=None) -> BenchReport:
    """Solve the ``pairs x lengths x seeds`` matrix; rows sorted by key.

    Color coding runs on a trial budget (one shift round by default) so
    every number but ``runtime_s`` is reproducible.
    """
    config = config or CgConfig(cc_time_limit_s=600.0)
    tasks = [(p, l, s, k, altruists, config) for p in pairs for l in lengths for s in seeds]
    if workers is None:
        workers = int(os.environ.get("KEPCG_THREADS", "1") or 1)
    workers = max(1, min(workers, len(tasks)))
    rows = []
    if workers == 1:
        for t in tasks:
            rows.append(bench_one(t))
            if progress:
                progress(rows[-1])
    else:
        with ProcessPoolExecutor(workers) as pool:
            for row in pool.map(bench_one, tasks):
                rows.append(row)
                if progress:
                    progress(row)
    rows.sort(key=lambda r: r["key"])
    return BenchReport(rows)


def render_table(report: BenchReport, runtime: bool = True) -> str:
    fields = [f for f in REPORT_FIELDS if runtime or f != "runtime_s"]
    cells = [fields] + [[_fmt(r[f]) for f in fields] for r in report.rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(fields))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    agg = report.aggregates
    if agg["instances"]:
        lines.append("")
        lines.append(f"instances {agg['instances']}  mean gap {agg['mean_gap']:.4%}  "
                     f"gap = 0: {agg['gap_zero']}/{agg['instances']}")
        if runtime:
            per_l = "  ".join(f"L={k}: {v:.2f}s" for k, v in agg["mean_runtime_by_l"].items())
            lines.append(f"mean runtime  {per_l}")
    return "\n".join(lines) + "\n"


def render_csv(report: BenchReport, runtime: bool = True) -> str:
    fields = [f for f in REPORT_FIELDS if runtime or f != "runtime_s"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in report.rows:
        w.writerow(r)
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _csv_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def cmd_bench(args) -> int:
    cfg = CgConfig(cc_time_limit_s=args.cc_seconds, cc_max_trials=args.cc_trials or None,
                   ng=NgConfig(lam=args.ng_lambda), seed=0)

    def progress(row):
        print(f"{row['key']}: gap {row['gap']:.4%} {row['status']} {row['runtime_s']:.1f}s",
              file=sys.stderr)

    report = run_bench(args.pairs, args.lengths, args.seeds, args.k, args.altruists, cfg,
                       args.workers, progress)
    _write_json(report.to_dict(), args.output)
    if args.csv:
        Path(args.csv).write_text(render_csv(report, not args.omit_runtime))
    sys.stdout.write(render_table(report, not args.omit_runtime))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        data = json.loads(Path(args.report).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc})") from exc
    report = BenchReport.from_dict(data)
    runtime = not args.omit_runtime
    text = render_table(report, runtime)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(render_csv(report, runtime))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _add_cg_flags(p):
    p.add_argument("--k", type=int, default=None, help="max pairs per cycle (default: from file)")
    p.add_argument("--l", type=int, default=None, help="max vertices per chain (default: from file)")
    p.add_argument("--time-limit", type=float, default=3600.0, help="CG wall-clock budget, seconds")
    p.add_argument("--seed", type=int, default=0, help="seed for arrangement, colorings and ng sets")
    p.add_argument("--no-subpaths", action="store_true", help="add only the priced chain, not its prefixes")
    p.add_argument("--cc-seconds", type=float, default=1.0, help="color-coding budget per iteration")
    p.add_argument("--cc-trials", type=int, default=None,
                   help="color-coding trial budget per iteration (0: one round of C trials)")
    p.add_argument("--lambda", dest="ng_lambda", type=int, default=5, help="ng-set size")
    p.add_argument("--colors", type=int, default=None, help="number of colors (default L+1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kepcg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="draw a random compatibility pool")
    p.add_argument("--pairs", type=int, required=True, help="number of patient/donor pairs")
    p.add_argument("--altruists", type=float, default=0.05, help="altruists as a fraction of pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--random-weights", action="store_true", help="uniform [0,1) arc weights")
    p.add_argument("-o", "--output", required=True, help="instance JSON to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="column generation + restricted IP on an instance")
    p.add_argument("instance_pos", nargs="?", metavar="INSTANCE")
    p.add_argument("--instance", help="instance JSON (alternative to the positional)")
    _add_cg_flags(p)
    p.add_argument("-o", "--output", default=None, help="solution JSON (default stdout)")
    p.add_argument("--trace", default=None, help="trace JSON to write")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("price", help="solve one pricing instance file")
    p.add_argument("file", help="pricing instance JSON")
    p.add_argument("--algo", choices=("oracle", "ls", "cc", "ng"), required=True)
    p.add_argument("--colors", type=int, default=None, help="cc: number of colors (default L+1)")
    p.add_argument("--rho", type=float, default=0.99, help="cc: target success probability")
    p.add_argument("--trials", type=int, default=None, help="cc: cap on trials")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=1.0, help="ls/cc budget, seconds")
    p.add_argument("--dssr", choices=[m.value for m in DssrMode], default="limited")
    p.add_argument("--lambda", dest="ng_lambda", type=int, default=5, help="ng-set size")
    p.add_argument("--ng-sets", choices=[c.value for c in NgConstruction], default="dual")
    p.add_argument("--compare-oracle", action="store_true", help="also report the exact optimum")
    p.add_argument("--debug-dump", action="store_true", help="include distances and extended sets")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("extract", help="dump first/middle/last pricing instances of a CG run")
    p.add_argument("instance")
    _add_cg_flags(p)
    p.add_argument("-d", "--output-dir", default=".", help="directory for the pricing files")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bench", help="solve a seeded instance matrix and report gaps")
    p.add_argument("--pairs", type=_csv_ints, default=DEFAULT_PAIRS)
    p.add_argument("--lengths", type=_csv_ints, default=DEFAULT_LENGTHS, help="chain limits L")
    p.add_argument("--seeds", type=_csv_ints, default=DEFAULT_SEEDS)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--altruists", type=float, default=0.05)
    p.add_argument("--cc-seconds", type=float, default=600.0,
                   help="safety cap on color coding per iteration")
    p.add_argument("--cc-trials", type=int, default=0,
                   help="color-coding trials per iteration (0: one round of C trials)")
    p.add_argument("--lambda", dest="ng_lambda", type=int, default=5)
    p.add_argument("--workers", type=int, default=None, help="processes (default $KEPCG_THREADS or 1)")
    p.add_argument("-o", "--output", default="bench.json", help="report JSON")
    p.add_argument("--csv", default=None, help="also write the CSV report")
    p.add_argument("--omit-runtime", action="store_true", help="leave out the timing column")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render a bench report as a table and CSV")
    p.add_argument("report", help="bench JSON")
    p.add_argument("-o", "--output", default=None, help="text table (default stdout)")
    p.add_argument("--csv", default=None, help="CSV file to write")
    p.add_argument("--omit-runtime", action="store_true", help="leave out the timing column")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"kepcg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"kepcg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, ValueError) as exc:
        print(f"kepcg: invalid parameter: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ParseError, SizeLimitError) as exc:
        print(f"kepcg: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"kepcg: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except KepError as exc:
        print(f"kepcg: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
