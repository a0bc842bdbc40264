"""Deterministic discrete-event simulation of the pipeline scheduling model.

One processor runs the pipes' sporadic servers under preemptive
rate-monotonic priorities (shorter period wins, ties by pipe id).  Each pipe
releases a job periodically from its offset; a job executes read, process and
write stages in order, charging the server's budget.  Communication is
register-based and implicit: a job snapshots all its input registers at the
instant it first executes and works on the snapshot; it publishes to its
output registers at the instant its write stage completes.  Values
overwritten before any snapshot make their inputs unreachable.

Every source job mints a new input id; ids travel with the data (union over
fan-in), so per-input reaction (first influenced output) and freshness (last
influenced output) fall out of the trace.  Simulation time is integer ticks;
rational model values are quantized conservatively (stage costs round up).

The engine is single threaded and bit-deterministic for identical inputs.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .fourslot import FourSlotRegister
from .model import (
    PipetimeError,
    TaskGraph,
    number_str,
    pipe_read_cost,
    pipe_write_cost,
)

INTERPRETATION_NOTE = (
    "stage model: task processing time excludes communication; read and write "
    "stages are charged separately at the channel transfer cost"
)


class SimulationError(PipetimeError):
    pass


@dataclass
class ServerState:
    """Sporadic-server bookkeeping for one pipe (times in ticks)."""

    pipe: str
    capacity: int
    period: int
    remaining: int
    replenishments: list[tuple[int, int]] = field(default_factory=list)
    activation: Optional[int] = None
    priority: int = 0

    def outstanding(self) -> int:
        return sum(a for _, a in self.replenishments)


def sporadic_replenish(state: ServerState, consumed: int, at: int) -> ServerState:
    """Schedule the consumed budget to return one period after the activation
    that consumed it; conserves remaining + outstanding == capacity."""
    if consumed < 0 or consumed > state.capacity:
        raise SimulationError("consumed amount outside [0, capacity]")
    if consumed == 0:
        return state
    if state.activation is None:
        raise SimulationError("no activation in progress")
    queue = list(state.replenishments)
    entry = (state.activation + state.period, consumed)
    lo = 0
    while lo < len(queue) and queue[lo][0] <= entry[0]:
        lo += 1
    queue.insert(lo, entry)
    return replace(state, replenishments=queue)


@dataclass
class InputRecord:
    id: int
    source: str
    release: int  # tick of the minting snapshot


@dataclass
class SimReport:
    """Per-input lineage timing plus the raw publish tables, in ticks; the
    `tick` field converts back to model time units."""

    tick: Fraction
    horizon: int
    offsets: dict[str, int]
    seed: Optional[int]
    inputs: dict[int, InputRecord]
    publishes: dict[str, dict[int, tuple[int, int]]]
    sinks: list[str]
    output_counts: dict[str, int] = field(default_factory=dict)
    events: Optional[list[tuple[int, str, str]]] = None
    note: str = INTERPRETATION_NOTE

    def reachable(self, input_id: int) -> bool:
        return any(input_id in self.publishes.get(s, {}) for s in self.sinks)

    def sink_window(self, input_id: int) -> Optional[tuple[int, int]]:
        firsts = [self.publishes[s][input_id][0] for s in self.sinks if input_id in self.publishes.get(s, {})]
        lasts = [self.publishes[s][input_id][1] for s in self.sinks if input_id in self.publishes.get(s, {})]
        if not firsts:
            return None
        return min(firsts), max(lasts)

    @property
    def reachable_count(self) -> int:
        return sum(1 for i in self.inputs if self.reachable(i))


def measure(report: SimReport, chain: Sequence[str]) -> tuple[list[Fraction], list[Fraction]]:
    """Reaction and freshness series for inputs minted by the chain's head,
    measured at the chain's tail; unreachable inputs are excluded."""
    head, tail = chain[0], chain[-1]
    table = report.publishes.get(tail, {})
    reactions: list[Fraction] = []
    freshness: list[Fraction] = []
    for rec in report.inputs.values():
        if rec.source != head or rec.id not in table:
            continue
        first, last = table[rec.id]
        reactions.append((first - rec.release) * report.tick)
        freshness.append((last - rec.release) * report.tick)
    return reactions, freshness


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(math.gcd(a.numerator * b.denominator, b.numerator * a.denominator), a.denominator * b.denominator)


def auto_tick(graph: TaskGraph, offsets: Optional[Mapping[str, Fraction]] = None) -> Fraction:
    """Largest tick that exactly divides every period, budget, stage cost and
    offset in the configuration."""
    values: list[Fraction] = []
    for pipe in graph.pipes.values():
        values += [
            pipe.terminal.budget,
            pipe.terminal.period,
            pipe.task.p,
            pipe_read_cost(pipe),
            pipe_write_cost(pipe),
        ]
    if offsets:
        values += [Fraction(v) for v in offsets.values()]
    tick = Fraction(0)
    for v in values:
        if v:
            tick = _frac_gcd(tick, Fraction(v)) if tick else Fraction(v)
    return tick or Fraction(1)


def _ticks_exact(value, tick: Fraction, what: str) -> int:
    scaled = Fraction(value) / tick
    if scaled.denominator != 1:
        raise SimulationError(
            f"tick misalignment: {what} = {number_str(Fraction(value))} is not a multiple of the tick"
        )
    return scaled.numerator


def _ticks_ceil(value, tick: Fraction) -> int:
    scaled = Fraction(value) / tick
    return -((-scaled.numerator) // scaled.denominator)


class _Job:
    __slots__ = ("seq", "release", "phases", "started", "preempted", "lineage")

    def __init__(self, seq: int, release: int, phases: list[list]):
        self.seq = seq
        self.release = release
        self.phases = phases  # [[name, remaining], ...]
        self.started = False
        self.preempted = False
        self.lineage: frozenset = frozenset()


def run(
    graph: TaskGraph,
    horizon,
    offsets: Optional[Mapping[str, Fraction]] = None,
    tick=None,
    seed: Optional[int] = None,
    collect_events: bool = False,
    background: bool = False,
) -> SimReport:
    """Simulate the graph until `horizon` (model time units) and return the
    lineage report.

    `offsets` gives each pipe's first release; omitted pipes use 0.  When
    `offsets` is None and a seed is given, offsets are drawn uniformly from
    the tick grid in [0, period).  `tick=None` picks the coarsest exact grid.
    """
    pipes = list(graph.pipes.values())
    if not pipes:
        raise SimulationError("empty graph")
    for pipe in pipes:
        if not pipe.terminal.solved:
            raise SimulationError(f"pipe {pipe.id}: terminal is unsolved")

    horizon = Fraction(horizon)
    max_period = max(p.terminal.period for p in pipes)
    if horizon < 2 * max_period:
        raise SimulationError("horizon shorter than 2*max period")

    rng = random.Random(seed)
    if offsets is None:
        if seed is None:
            offsets = {p.id: Fraction(0) for p in pipes}
        else:
            grid = Fraction(tick) if tick else auto_tick(graph)
            offsets = {
                p.id: rng.randrange(max(int(p.terminal.period / grid), 1)) * grid for p in pipes
            }
    offsets = {p.id: Fraction(offsets.get(p.id, 0)) for p in pipes}

    tick_f = Fraction(tick) if tick else auto_tick(graph, offsets)
    horizon_t = _ticks_ceil(horizon, tick_f)
    if horizon_t > 5 * 10**8:
        raise SimulationError("tick too fine for this horizon; pass a coarser tick")

    order = sorted(pipes, key=lambda p: (p.terminal.period, p.id))
    ids = [p.id for p in order]
    servers: dict[str, ServerState] = {}
    jobs: dict[str, list[_Job]] = {}
    phase_cost: dict[str, tuple[int, int, int]] = {}
    next_release: dict[str, int] = {}
    seq_counter: dict[str, int] = {}
    for prio, pipe in enumerate(order):
        capacity = _ticks_exact(pipe.terminal.budget, tick_f, f"budget of {pipe.id}")
        servers[pipe.id] = ServerState(
            pipe=pipe.id,
            capacity=capacity,
            period=_ticks_exact(pipe.terminal.period, tick_f, f"period of {pipe.id}"),
            remaining=capacity,
            priority=prio,
        )
        jobs[pipe.id] = []
        phase_cost[pipe.id] = (
            _ticks_ceil(pipe_read_cost(pipe), tick_f),
            _ticks_ceil(pipe.task.p, tick_f),
            _ticks_ceil(pipe_write_cost(pipe), tick_f),
        )
        next_release[pipe.id] = _ticks_exact(offsets[pipe.id], tick_f, f"offset of {pipe.id}")
        seq_counter[pipe.id] = 0

    in_edges = {p.id: graph.in_edges(p.id) for p in pipes}
    out_edges = {p.id: graph.out_edges(p.id) for p in pipes}
    registers: dict[tuple[str, str], FourSlotRegister] = {
        (e.producer, e.consumer): FourSlotRegister() for e in graph.edges
    }

    inputs: dict[int, InputRecord] = {}
    publishes: dict[str, dict[int, tuple[int, int]]] = {p.id: {} for p in pipes}
    output_counts: dict[str, int] = {p.id: 0 for p in pipes}
    events: Optional[list[tuple[int, str, str]]] = [] if collect_events else None
    input_counter = 0

    def log(time: int, pipe_id: str, event: str) -> None:
        if events is not None:
            events.append((time, pipe_id, event))

    def capture(pipe_id: str, job: _Job, now: int) -> None:
        nonlocal input_counter
        if in_edges[pipe_id]:
            lineage: frozenset = frozenset()
            for edge in in_edges[pipe_id]:
                cell = registers[(edge.producer, edge.consumer)].read()
                if cell is not None:
                    lineage |= cell[1]
            job.lineage = lineage
        else:
            input_counter += 1
            inputs[input_counter] = InputRecord(id=input_counter, source=pipe_id, release=now)
            job.lineage = frozenset((input_counter,))

    def publish(pipe_id: str, job: _Job, now: int) -> None:
        for edge in out_edges[pipe_id]:
            registers[(edge.producer, edge.consumer)].write((pipe_id, job.seq), job.lineage)
        output_counts[pipe_id] += 1
        table = publishes[pipe_id]
        for input_id in job.lineage:
            first, _ = table.get(input_id, (now, now))
            table[input_id] = (first, now)

    def finish_ready_phases(pipe_id: str, job: _Job, at: int) -> None:
        while job.phases and job.phases[0][1] == 0:
            name = job.phases.pop(0)[0]
            if name == "read":
                log(at, pipe_id, "read_done")
            elif name == "write":
                publish(pipe_id, job, at)
                log(at, pipe_id, "write_done")

    now = 0
    running: Optional[str] = None  # pipe whose started job held the CPU last
    while now < horizon_t:
        for pid in ids:
            server = servers[pid]
            while server.replenishments and server.replenishments[0][0] <= now:
                when, amount = server.replenishments.pop(0)
                server.remaining += amount
                log(when, pid, "replenish")
            while next_release[pid] <= now:
                release_at = next_release[pid]
                r, p, w = phase_cost[pid]
                job = _Job(seq_counter[pid], release_at, [["read", r], ["process", p], ["write", w]])
                seq_counter[pid] += 1
                jobs[pid].append(job)
                log(release_at, pid, "release")
                next_release[pid] += server.period

        chosen: Optional[str] = None
        for pid in ids:  # rate-monotonic order
            if jobs[pid] and (servers[pid].remaining > 0 or _demandless(jobs[pid][0])):
                chosen = pid
                break

        if running is not None and running != chosen:
            old = jobs[running][0] if jobs[running] else None
            if old is not None and old.started and old.phases:
                old.preempted = True
                log(now, running, "preempt")
        running = None

        if chosen is None:
            nxt = horizon_t
            for pid in ids:
                nxt = min(nxt, next_release[pid])
                if servers[pid].replenishments:
                    nxt = min(nxt, servers[pid].replenishments[0][0])
            if background and events is not None:
                log(now, "background", "start")
                log(nxt, "background", "preempt")
            now = nxt
            continue

        server = servers[chosen]
        if server.activation is None or now >= server.activation + server.period:
            server.activation = now

        stop = min(horizon_t, now + max(server.remaining, 1), server.activation + server.period)
        for pid in ids:
            stop = min(stop, next_release[pid])
            if servers[pid].replenishments:
                stop = min(stop, servers[pid].replenishments[0][0])

        t = now
        budget_left = server.remaining
        while t < stop and jobs[chosen]:
            job = jobs[chosen][0]
            if not job.started:
                job.started = True
                log(t, chosen, "start")
                capture(chosen, job, t)
            elif job.preempted:
                job.preempted = False
                log(t, chosen, "resume")
            finish_ready_phases(chosen, job, t)
            if not job.phases:
                jobs[chosen].pop(0)
                continue
            if budget_left == 0:
                break
            step = min(stop - t, job.phases[0][1], budget_left)
            job.phases[0][1] -= step
            t += step
            budget_left -= step
            finish_ready_phases(chosen, job, t)
            if not job.phases:
                jobs[chosen].pop(0)

        consumed = server.remaining - budget_left
        if consumed:
            server.remaining = budget_left
            server.replenishments = sporadic_replenish(server, consumed, t).replenishments
        head_live = bool(jobs[chosen]) and jobs[chosen][0].started and bool(jobs[chosen][0].phases)
        if head_live and budget_left == 0 and t < horizon_t:
            log(t, chosen, "budget_exhausted")
        running = chosen if (head_live and budget_left > 0) else None
        now = t

    return SimReport(
        tick=tick_f,
        horizon=horizon_t,
        offsets={p: _ticks_exact(offsets[p], tick_f, "offset") for p in offsets},
        seed=seed,
        inputs=inputs,
        publishes=publishes,
        sinks=list(graph.sinks),
        output_counts=output_counts,
        events=events,
    )


def _demandless(job: _Job) -> bool:
    return all(rem == 0 for _, rem in job.phases)


def trace_csv(report: SimReport, chain: Optional[Sequence[str]] = None, header_lines: Iterable[str] = ()) -> str:
    """Per-input CSV: input_id,release,first_output,last_output,reaction,
    freshness,reachable.  With a chain, outputs are measured at the chain's
    tail for inputs minted by its head; otherwise at the graph sinks."""
    lines = [f"# {line}" for line in header_lines]
    lines.append("input_id,release,first_output,last_output,reaction,freshness,reachable")
    tick = report.tick
    for rec in sorted(report.inputs.values(), key=lambda r: r.id):
        if chain is not None and rec.source != chain[0]:
            continue
        if chain is not None:
            window = report.publishes.get(chain[-1], {}).get(rec.id)
        else:
            window = report.sink_window(rec.id)
        if window:
            first, last = window
            row = [
                str(rec.id),
                number_str(rec.release * tick),
                number_str(first * tick),
                number_str(last * tick),
                number_str((first - rec.release) * tick),
                number_str((last - rec.release) * tick),
                "true",
            ]
        else:
            row = [str(rec.id), number_str(rec.release * tick), "", "", "", "", "false"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def events_csv(report: SimReport, header_lines: Iterable[str] = ()) -> str:
    if report.events is None:
        raise SimulationError("event collection was disabled for this run")
    lines = [f"# {line}" for line in header_lines]
    lines.append("time,pipe,event")
    for time, pipe, event in report.events:
        lines.append(f"{number_str(time * report.tick)},{pipe},{event}")
    return "\n".join(lines) + "\n"
