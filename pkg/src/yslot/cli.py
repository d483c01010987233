"""Command-line interface: enumerate, solve, optimize, simulate, report.

Exit codes: 0 ok, 1 infeasible allocation or failed checks, 2 usage or
config error.  Output files are byte-stable for identical inputs: CSV and
JSON carry the same full-precision values (metadata like the RNG seed is
part of the report data, never wall-clock timestamps).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .allocate import PatternSolution, optimize, solution_timeline, solve_pattern
from .pathmodel import enumerate_path_models, find_model, patterns_for
from .simulate import compare, simulate
from .topology import Topology, TopologyError, load_config, validate_topology

CONFIG_DIR_ENV = "YSLOT_CONFIG_DIR"


@dataclass
class RunConfig:
    command: str
    topology_path: str
    no_sep_branch: int | None = None
    model: str | None = None
    pattern: int | None = None
    cycle_slots: int | None = None
    trials: int = 100000
    seed: int = 0
    reuse: bool = False
    output: str | None = None
    fmt: str = "csv"
    emit_timeline: str | None = None
    digits: int = 4


def _resolve_topology_path(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    base = os.environ.get(CONFIG_DIR_ENV)
    if base and (Path(base) / path).exists():
        return Path(base) / path
    return p


def _load(cfg: RunConfig) -> Topology:
    raw = load_config(_resolve_topology_path(cfg.topology_path))
    topology = validate_topology(raw)
    if cfg.cycle_slots is not None and cfg.cycle_slots < 1:
        raise TopologyError("cycle_slots override must be >= 1")
    return topology


def _emit(rows: list[dict], fieldnames: list[str], cfg: RunConfig) -> None:
    if cfg.fmt == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def _solution_row(sol: PatternSolution) -> dict:
    return {
        "model": sol.model.name,
        "no_sep_branch": sol.model.no_sep_branch,
        "pattern": sol.pattern.pattern_id,
        "case": sol.case_label,
        "tub": sol.tub_product,
        "com": sol.com_product,
        "window": sol.window,
        "feasible": sol.feasible,
    }


SUMMARY_FIELDS = ["model", "no_sep_branch", "pattern", "case", "tub", "com",
                  "window", "feasible"]


def _slot_table_rows(sol: PatternSolution) -> tuple[list[dict], list[str]]:
    names = sorted(sol.tub_entries, key=_entry_sort_key)
    head = {"model": sol.model.name, "pattern": sol.pattern.pattern_id,
            "case": sol.case_label}
    tub_row = {"row": "TUB", **head, "product": sol.tub_product,
               **{n: sol.tub_entries[n] for n in names}}
    com_row = {"row": "COM", **head, "product": sol.com_product,
               **{n: sol.com_entries.get(n, 0) for n in names}}
    return [tub_row, com_row], ["row", "model", "pattern", "case", "product"] + names


def _entry_sort_key(name: str):
    early = name.startswith("s'")
    inner = name[name.index("[") + 1:-1]
    parts = [int(x) for x in inner.split(",")]
    node, link = parts[0], parts[1]
    k = parts[2] if len(parts) > 2 else 1
    return (node, link, k, early)


def run(cfg: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status."""
    topology = _load(cfg)

    if cfg.command == "enumerate":
        rows = []
        for m in enumerate_path_models(topology, cfg.no_sep_branch):
            rows.append({
                "model": m.name,
                "type": m.model_type,
                "no_sep_branch": m.no_sep_branch,
                "sep_link_a": m.sep_link_a,
                "sep_link_b": m.sep_link_b,
                "group_x": " ".join(map(str, m.group("X"))),
                "group_y": " ".join(map(str, m.group("Y"))),
                "group_z": " ".join(map(str, m.group("Z"))),
                "patterns": len(patterns_for(m)),
            })
        _emit(rows, ["model", "type", "no_sep_branch", "sep_link_a", "sep_link_b",
                     "group_x", "group_y", "group_z", "patterns"], cfg)
        return 0

    if cfg.command == "optimize":
        solutions = optimize(topology, cfg.cycle_slots, cfg.no_sep_branch)
        _emit([_solution_row(s) for s in solutions], SUMMARY_FIELDS, cfg)
        return 0 if any(s.feasible for s in solutions) else 1

    if cfg.command in ("solve", "report", "simulate"):
        if cfg.command == "report" and cfg.model is None:
            solutions = optimize(topology, cfg.cycle_slots, cfg.no_sep_branch)
            _emit([_solution_row(s) for s in solutions], SUMMARY_FIELDS, cfg)
            return 0 if any(s.feasible for s in solutions) else 1
        if cfg.model is None:
            raise TopologyError(f"{cfg.command} requires --model")
        model = find_model(topology, cfg.model, cfg.no_sep_branch)
        sol = solve_pattern(model, cfg.pattern, cfg.cycle_slots)

        if cfg.command == "simulate":
            timeline = solution_timeline(sol)
            report = simulate(timeline, topology, cfg.trials, cfg.seed,
                              reuse=cfg.reuse)
            meta = {"trials": report.trials, "seed": report.seed,
                    "algorithm": report.algorithm, "reuse": report.reuse}
            # analytic COM follows the dedicated-slot model: compare only
            # when slot reuse is off
            checks = compare(report, sol.allocation.per_node) if not cfg.reuse else []
            if checks:
                rows = [{"node": c.node, "empirical": c.empirical,
                         "analytic": c.analytic, "sigma": c.sigma, "z": c.z,
                         "ok": c.ok, **meta} for c in checks]
                com = sol.com_product
                sigma = (com * (1.0 - com) / report.trials) ** 0.5
                z = (report.all_rate - com) / sigma if sigma else 0.0
                rows.append({"node": "all", "empirical": report.all_rate,
                             "analytic": com, "sigma": sigma, "z": z,
                             "ok": abs(z) <= 3.0, **meta})
            else:
                rows = [{"node": n, "empirical": r, "analytic": "", "sigma": "",
                         "z": "", "ok": "", **meta}
                        for n, r in sorted(report.per_node.items())]
                rows.append({"node": "all", "empirical": report.all_rate,
                             "analytic": "", "sigma": "", "z": "", "ok": "",
                             **meta})
            _emit(rows, ["node", "empirical", "analytic", "sigma", "z", "ok",
                         "trials", "seed", "algorithm", "reuse"], cfg)
            return 0 if (not checks or all(c.ok for c in checks)) else 1

        rows, fields = _slot_table_rows(sol)
        if cfg.command == "report":
            fmt = f"{{:.{cfg.digits}f}}"
            cols = ["row", "product"] + [f for f in fields if f.startswith("s")]
            width = max(len(n) for n in cols)
            sys.stderr.write(" ".join(n.rjust(width) for n in cols) + "\n")
            for row in rows:
                cells = [str(row["row"]).rjust(width)]
                cells += [fmt.format(float(row[n])).rjust(width) for n in cols[1:]]
                sys.stderr.write(" ".join(cells) + "\n")
        _emit(rows, fields, cfg)
        if cfg.emit_timeline:
            timeline = solution_timeline(sol)
            Path(cfg.emit_timeline).write_text("\n".join(timeline.to_lines()) + "\n")
        return 0 if sol.feasible else 1

    raise TopologyError(f"unknown command {cfg.command}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="yslot",
        description="TDMA slot allocation for Y-shaped 3-gateway sensor backbones")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--topology", "-c", required=True,
                       help=f"topology config (JSON); also searched in ${CONFIG_DIR_ENV}")
        p.add_argument("--no-sep-branch", type=int, default=None,
                       help="gateway id of the branch without a separation link")
        p.add_argument("--t-slots", type=int, default=None, dest="cycle_slots",
                       help="override the config's cycle_slots")
        p.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
        p.add_argument("--output", "-o", default=None)

    p_enum = sub.add_parser("enumerate", help="list all path models")
    common(p_enum)

    p_solve = sub.add_parser("solve", help="solve one model/pattern")
    common(p_solve)
    p_solve.add_argument("--model", required=True, help="l-r-d model name")
    p_solve.add_argument("--pattern", type=int, default=None)
    p_solve.add_argument("--emit-timeline", default=None,
                         help="write the slot grid to this path")

    p_opt = sub.add_parser("optimize", help="rank all (model, pattern) solutions")
    common(p_opt)

    p_sim = sub.add_parser("simulate", help="Monte Carlo check of one solution")
    common(p_sim)
    p_sim.add_argument("--model", required=True)
    p_sim.add_argument("--pattern", type=int, default=None)
    p_sim.add_argument("--trials", type=int, default=100000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--reuse", action="store_true",
                       help="reassign slots of lost packets to the next pending packet")

    p_rep = sub.add_parser("report", help="slot table for a model, or ranked summary")
    common(p_rep)
    p_rep.add_argument("--model", default=None)
    p_rep.add_argument("--pattern", type=int, default=None)
    p_rep.add_argument("--digits", type=int, default=4)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    cfg = RunConfig(
        command=args.command,
        topology_path=args.topology,
        no_sep_branch=args.no_sep_branch,
        model=getattr(args, "model", None),
        pattern=getattr(args, "pattern", None),
        cycle_slots=args.cycle_slots,
        trials=getattr(args, "trials", 100000),
        seed=getattr(args, "seed", 0),
        reuse=getattr(args, "reuse", False),
        output=args.output,
        fmt=args.fmt,
        emit_timeline=getattr(args, "emit_timeline", None),
        digits=getattr(args, "digits", 4),
    )
    try:
        return run(cfg)
    except TopologyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
