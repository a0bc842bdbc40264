"""Command-line front end: analyze, synthesize, simulate, check.

All commands are non-interactive.  Exit codes: 0 success, 1 infeasible or
bound violation, 2 input error.  Every artifact written to disk embeds the
run manifest (command, arguments, tool version), and identical invocations
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__
from .analysis import Mode, analyze_chain, evaluate_constraint
from .model import (
    ConfigError,
    PipetimeError,
    as_number,
    load_config_file,
    number_str,
)
from .simulator import SimulationError, events_csv, measure, run, trace_csv
from .synthesis import InfeasibleError, compute_budgets, response_time_check, rms_bound_check, solve_periods

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2


@dataclass
class RunManifest:
    command: str
    config: str
    flags: dict
    seed: object = None
    outputs: list = field(default_factory=list)
    tool: str = "pipetime"
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "flags": self.flags,
            "seed": self.seed,
            "outputs": self.outputs,
        }

    def header_line(self) -> str:
        return "manifest: " + json.dumps(self.to_dict(), sort_keys=True)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _parse_offsets(text: str) -> dict[str, Fraction]:
    offsets = {}
    for part in text.split(","):
        if not part:
            continue
        name, _, value = part.partition("=")
        if not value:
            raise ConfigError(f"bad offset {part!r}; expected pipe=value")
        offsets[name.strip()] = as_number(value.strip(), f"offset of {name}")
    return offsets


def cmd_analyze(args) -> int:
    graph, _ = load_config_file(args.config)
    chain = [c.strip() for c in args.chain.split(",") if c.strip()]
    result = analyze_chain(graph, chain, args.metric, Mode(args.mode))
    manifest = RunManifest(
        command="analyze",
        config=args.config,
        flags={"chain": ",".join(chain), "metric": args.metric, "mode": args.mode},
        outputs=[args.out] if args.out else [],
    )
    lines = [
        f"chain: {' | '.join(result.chain)}",
        f"metric: {result.metric}   mode: {result.mode.value}",
        f"worst-case bound: {number_str(result.value)} {graph.unit}",
        "per-pipe latency:",
    ]
    for pipe_id, latency in result.pipe_latencies:
        lines.append(f"  {pipe_id}: {number_str(latency)}")
    if result.boundaries:
        label = "per-boundary wait:" if result.metric == "reaction" else "per-boundary pair value:"
        lines.append(label)
        for b in result.boundaries:
            lines.append(f"  {b.producer} -> {b.consumer} [{b.case.value}]: {number_str(b.wait)}")
    for note in result.notes:
        lines.append(f"note: {note}")
    lines.append(manifest.header_line())
    report = "\n".join(lines) + "\n"
    print(report, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(report)
    return EXIT_OK


def cmd_synthesize(args) -> int:
    graph, constraints = load_config_file(args.config)
    graph = compute_budgets(graph, as_number(args.pad, "pad"))
    fixed = {}
    for item in args.fix or []:
        name, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"bad --fix {item!r}; expected pipe=period")
        fixed[name.strip()] = as_number(value.strip(), f"fixed period of {name}")
    try:
        result = solve_periods(
            graph,
            constraints,
            fixed=fixed,
            resolution=as_number(args.resolution, "resolution"),
            paper_compat=args.paper_compat,
        )
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        for attempt in exc.attempts:
            branches = ", ".join(f"{p}->{c}:{case.value}" for (p, c), case in attempt["branches"].items())
            blocking = f" blocking: {attempt['blocking']}" if attempt.get("blocking") else ""
            print(f"  tried [{branches}] -> {attempt['reason']}{blocking}", file=sys.stderr)
        return EXIT_VIOLATION
    manifest = RunManifest(
        command="synthesize",
        config=args.config,
        flags={"resolution": args.resolution, "pad": args.pad, "paper_compat": args.paper_compat, "fix": args.fix or []},
        outputs=[args.out] if args.out else [],
    )
    doc = {
        "manifest": manifest.to_dict(),
        "unit": graph.unit,
        "pipes": [
            {
                "id": pipe_id,
                "budget": number_str(result.budgets[pipe_id]),
                "period": number_str(result.periods[pipe_id]),
            }
            for pipe_id in result.periods
        ],
        "utilization": number_str(result.utilization),
        "ll_bound": result.ll_bound,
        "slack": {label: number_str(slack) for label, slack in result.slacks.items()},
        "branches": {f"{p}->{c}": case.value for (p, c), case in result.branches.items()},
        "response_times": {p: number_str(r) for p, r in result.response_times.items()},
        "assignments_tried": result.assignments_tried,
    }
    text = json.dumps(doc, indent=2) + "\n"
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    graph, constraints = load_config_file(args.config)
    offsets = _parse_offsets(args.offsets) if args.offsets else None
    tick = as_number(args.tick, "tick") if args.tick else None
    report = run(
        graph,
        horizon=as_number(args.horizon, "horizon"),
        offsets=offsets,
        tick=tick,
        seed=args.seed,
        collect_events=bool(args.events_out),
        background=args.background,
    )
    manifest = RunManifest(
        command="simulate",
        config=args.config,
        flags={
            "horizon": args.horizon,
            "offsets": args.offsets,
            "tick": args.tick,
            "background": args.background,
        },
        seed=args.seed,
        outputs=[p for p in (args.csv_out, args.events_out) if p],
    )
    print(f"simulated {number_str(report.horizon * report.tick)} {graph.unit} (tick {number_str(report.tick)})")
    print(f"note: {report.note}")
    print(f"inputs: {len(report.inputs)} minted, {report.reachable_count} reachable")
    violation = False
    rows = []
    for constraint in constraints:
        predicted, _ = evaluate_constraint(graph, constraint, Mode.GENERAL)
        reactions, freshness = measure(report, constraint.chain)
        series = reactions if constraint.kind == "reaction" else freshness
        observed = max(series) if series else None
        ok = observed is None or observed <= predicted
        violation = violation or not ok
        rows.append(
            (
                constraint.label,
                number_str(observed) if observed is not None else "n/a",
                number_str(predicted),
                "ok" if ok else "VIOLATION",
            )
        )
    if rows:
        width = max(len(r[0]) for r in rows)
        print(f"{'constraint'.ljust(width)}  observed-max  predicted  status")
        for label, observed, predicted, status in rows:
            print(f"{label.ljust(width)}  {observed:>12}  {predicted:>9}  {status}")
    if args.csv_out:
        chains = [c.chain for c in constraints]
        if len(set(chains)) == 1:
            targets = [(args.csv_out, chains[0])]
        elif chains:
            stem, dot, ext = args.csv_out.rpartition(".")
            base = stem if dot else args.csv_out
            suffix = f".{ext}" if dot else ""
            targets = []
            for chain in dict.fromkeys(chains):
                targets.append((f"{base}.{'-'.join(chain)}{suffix}", chain))
        else:
            targets = [(args.csv_out, None)]
        for path, chain in targets:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(trace_csv(report, chain, [manifest.header_line()]))
    if args.events_out:
        with open(args.events_out, "w", encoding="utf-8") as handle:
            handle.write(events_csv(report, [manifest.header_line()]))
    return EXIT_VIOLATION if violation else EXIT_OK


def cmd_check(args) -> int:
    graph, _ = load_config_file(args.config)
    if not graph.pipes:
        print("utilization 0, bound 1.0, pass; no pipes")
        return EXIT_OK
    ok, utilization, bound = rms_bound_check(graph)
    rta_ok, responses = response_time_check(graph)
    print(
        f"utilization {number_str(utilization)} ({float(utilization):.4f}), "
        f"rate-monotonic bound {bound:.4f}, {'pass' if ok else 'FAIL'}; "
        f"response-time analysis {'pass' if rta_ok else 'FAIL'}"
    )
    print("per-pipe worst-case response:")
    for pipe_id, response in responses.items():
        period = graph.pipe(pipe_id).terminal.period
        flag = "ok" if response <= period else "MISS"
        print(f"  {pipe_id}: {number_str(response)} / period {number_str(period)} [{flag}]")
    return EXIT_OK if (ok and rta_ok) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipetime", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pipetime {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="worst-case bound for one chain")
    p.add_argument("--config", required=True)
    p.add_argument("--chain", required=True, help="comma-separated pipe ids")
    p.add_argument("--metric", choices=["reaction", "freshness"], default="reaction")
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.GENERAL.value)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synthesize", help="derive budgets and periods from constraints")
    p.add_argument("--config", required=True)
    p.add_argument("--resolution", default="1")
    p.add_argument("--pad", default="0", help="budget slack added to each pipe's demand")
    p.add_argument("--paper-compat", action="store_true", help="drop channel costs on appended-pipe increments")
    p.add_argument("--fix", action="append", help="pipe=period, may repeat")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="run the scheduling simulator")
    p.add_argument("--config", required=True)
    p.add_argument("--horizon", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--offsets", help="pipe=offset,comma-separated")
    p.add_argument("--tick")
    p.add_argument("--csv-out")
    p.add_argument("--events-out")
    p.add_argument("--background", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="schedulability report")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        return _fail(str(exc), EXIT_VIOLATION)
    except FileNotFoundError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except PipetimeError as exc:
        return _fail(str(exc), EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
