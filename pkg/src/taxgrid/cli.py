"""Command line front end.

Thin client over the service operations: every command builds the same
request models the HTTP routes accept, runs them in process, and writes
deterministic CSVs plus a manifest.json recording what produced them.

Exit codes: 0 success, 2 argument or input parsing, 3 validation,
4 infeasible problem, 5 search did not converge.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .reports import (summary_table, write_dispatch_csv, write_pareto_csv,
                      write_prices_csv, write_search_csv, write_summary_csv)
from .service.ops import (build_system, error_kind, run_cluster,
                          run_find_tax, run_pareto, run_solve)
from .service.schemas import (ClusterRequest, FindTaxRequest, ParetoRequest,
                              SolveRequest, SolverOptions)
from .system import ParseError

EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_NO_CONVERGENCE = 5

_EXIT_BY_KIND = {"parse": EXIT_PARSE, "validation": EXIT_VALIDATION,
                 "infeasible": EXIT_INFEASIBLE}


@dataclass
class RunManifest:
    """What a command ran and what it wrote; one file per output directory."""

    command: str
    inputs: list[str]
    scenario: dict | None
    config: dict
    tool_version: str = __version__
    wall_time_s: float = 0.0
    outputs: list[str] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def write(self, out_dir: Path, started: float) -> Path:
        self.wall_time_s = round(time.perf_counter() - started, 3)
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True)
                        + "\n")
        return path


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _read_text(path) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _options(args) -> SolverOptions:
    return SolverOptions(gap=args.gap, jobs=args.jobs)


def _scenario(args) -> dict | None:
    return _load_json(args.scenario) if args.scenario else None


def _write_solution(out: Path, sys_data, resp) -> list[str]:
    write_dispatch_csv(out / "dispatch.csv", sys_data, resp)
    write_prices_csv(out / "prices.csv", sys_data, resp)
    write_summary_csv(out / "summary.csv", sys_data, resp)
    return ["dispatch.csv", "prices.csv", "summary.csv"]


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    system = _load_json(args.system)
    scenario = _scenario(args)
    resp = run_solve(SolveRequest(system=system, tax=args.tax,
                                  scenario=scenario, options=_options(args)))
    sys_data, _ = build_system(system, scenario)
    out = _out_dir(args)
    files = _write_solution(out, sys_data, resp)
    manifest = RunManifest(
        command="solve",
        inputs=[args.system] + ([args.scenario] if args.scenario else []),
        scenario=scenario,
        config={"tax": args.tax, "gap": args.gap, "jobs": args.jobs},
        outputs=sorted(files),
        notes={"expected_cost": resp.expected_cost,
               "expected_emissions": resp.expected_emissions})
    manifest.write(out, t0)
    print(summary_table([out / "summary.csv"], labels=[f"tax={args.tax:g}"]))
    return 0


def cmd_find_tax(args) -> int:
    t0 = time.perf_counter()
    system = _load_json(args.system)
    scenario = _scenario(args)
    resp = run_find_tax(FindTaxRequest(
        system=system, target_tons=args.target_tons,
        target_reduction=args.target_reduction, certainty=args.certainty,
        bracket=args.bracket, tolerance=args.tolerance, scenario=scenario,
        options=_options(args)))
    out = _out_dir(args)
    write_search_csv(out / "search.csv", resp)
    files = ["search.csv"]
    if resp.converged and resp.result is not None:
        sys_data, _ = build_system(system, scenario)
        files += _write_solution(out, sys_data, resp.result)
    manifest = RunManifest(
        command="find-tax",
        inputs=[args.system] + ([args.scenario] if args.scenario else []),
        scenario=scenario,
        config={"target_tons": args.target_tons,
                "target_reduction": args.target_reduction,
                "certainty": args.certainty,
                "bracket": list(args.bracket), "tolerance": args.tolerance,
                "gap": args.gap, "jobs": args.jobs},
        outputs=sorted(files),
        notes={"optimal_tax": resp.optimal_tax, "converged": resp.converged,
               "bisection_count": resp.bisection_count,
               "target_tons": resp.target_tons,
               "baseline_emissions": resp.baseline_emissions})
    manifest.write(out, t0)
    if not resp.converged:
        print(resp.message or "search did not converge", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    print(f"optimal tax: {resp.optimal_tax:.2f}")
    return 0


def cmd_pareto(args) -> int:
    t0 = time.perf_counter()
    system = _load_json(args.system)
    scenario = _scenario(args)
    resp = run_pareto(ParetoRequest(
        system=system, mode=args.mode, points=args.points, taxes=args.tax,
        bounds=args.bounds, scenario=scenario, options=_options(args)))
    out = _out_dir(args)
    write_pareto_csv(out / "pareto.csv", resp)
    manifest = RunManifest(
        command="pareto",
        inputs=[args.system] + ([args.scenario] if args.scenario else []),
        scenario=scenario,
        config={"mode": args.mode, "points": args.points, "taxes": args.tax,
                "bounds": list(args.bounds) if args.bounds else None,
                "gap": args.gap, "jobs": args.jobs},
        outputs=["pareto.csv"])
    manifest.write(out, t0)
    print(f"{len(resp.points)} points -> {out / 'pareto.csv'}")
    return 0


def cmd_cluster(args) -> int:
    t0 = time.perf_counter()
    resp = run_cluster(ClusterRequest(csv_text=_read_text(args.year_csv),
                                      k=args.k))
    out = _out_dir(args)
    (out / "days.json").write_text(
        json.dumps({"days": resp.days}, indent=2, sort_keys=True) + "\n")
    manifest = RunManifest(
        command="cluster", inputs=[args.year_csv], scenario=None,
        config={"k": args.k}, outputs=["days.json"],
        notes={"sizes": resp.sizes, "total_days": resp.total_days})
    manifest.write(out, t0)
    for day_id in sorted(resp.sizes):
        print(f"{day_id}: {resp.sizes[day_id]}/{resp.total_days} days")
    return 0


def cmd_report(args) -> int:
    labels = args.labels if args.labels else None
    if labels and len(labels) != len(args.summaries):
        print("error (parse): --labels must match the summary files",
              file=sys.stderr)
        return EXIT_PARSE
    try:
        print(summary_table(args.summaries, labels=labels))
    except (OSError, ValueError) as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return EXIT_PARSE
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("system", help="system JSON file")
    p.add_argument("--scenario", help="scenario JSON file")
    p.add_argument("--gap", type=float, default=None,
                   help="relative MIP gap (default: solver's)")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent day solves")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxgrid",
        description="Plan the smallest carbon tax meeting an emissions target.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="one commitment solve at a fixed tax")
    _add_common(p)
    p.add_argument("--tax", type=float, default=0.0, help="$/ton")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("find-tax",
                       help="smallest tax meeting an emissions target")
    _add_common(p)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--target-tons", type=float,
                        help="expected tons per day")
    target.add_argument("--target-reduction", type=float,
                        help="percent below the zero-tax baseline")
    p.add_argument("--certainty", type=float, default=None,
                   help="required probability of annual attainment")
    p.add_argument("--bracket", type=_pair, default=(0.0, 100.0),
                   metavar="LO,HI")
    p.add_argument("--tolerance", type=float, default=0.01, help="$/ton")
    p.set_defaults(func=cmd_find_tax)

    p = sub.add_parser("pareto", help="sample the cost/emissions frontier")
    _add_common(p)
    p.add_argument("--mode", choices=("cap", "tax"), required=True)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--tax", type=_floats, default=None, metavar="T1,T2,...",
                   help="explicit tax list (mode tax)")
    p.add_argument("--bounds", type=_pair, default=None, metavar="LO,HI",
                   help="cap range (mode cap; default: achievable range)")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("cluster",
                       help="representative days from a year CSV")
    p.add_argument("year_csv", help="hourly year data")
    p.add_argument("--k", type=int, default=5, help="number of days")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("report", help="tabulate summary CSVs side by side")
    p.add_argument("summaries", nargs="+", help="summary.csv files")
    p.add_argument("--labels", type=lambda s: s.split(","), default=None,
                   help="comma-separated column labels")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        kind = error_kind(exc)
        if kind is None:
            raise
        print(f"error ({kind}): {exc}", file=sys.stderr)
        return _EXIT_BY_KIND[kind]


if __name__ == "__main__":
    sys.exit(main())
