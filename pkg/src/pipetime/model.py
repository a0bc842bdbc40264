"""Domain model for budget/period-scheduled task pipelines.

A pipeline is a set of *pipes*: each pipe wraps one task and consists of an
input end (interface to a communication channel), a scheduling terminal
(budget C per period T, served by a sporadic server under rate-monotonic
priorities) and an output end.  Pipes are connected by directed data edges
over channels; end-to-end timing constraints are stated over ordered pipe
chains.

All time values are exact rationals (`fractions.Fraction`); configuration
numbers may be given as decimal strings to avoid binary-float rounding.
Loaded graphs are treated as immutable and are safe to share between
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

Time = Fraction

SHARED_MEMORY = "shared-memory"
BUS = "bus"


class PipetimeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipetimeError):
    """Invalid configuration document or graph structure."""


def as_number(value, what: str = "value") -> Fraction:
    """Parse an exact non-negative rational from int, str or Fraction.

    Floats are rejected: they would silently introduce binary rounding
    into worst-case bounds.  Strings accept decimal ("0.25") and ratio
    ("1/3") notation.
    """
    if isinstance(value, bool):
        raise ConfigError(f"schema violation: {what} must be a number, got {value!r}")
    if isinstance(value, Fraction):
        result = value
    elif isinstance(value, int):
        result = Fraction(value)
    elif isinstance(value, str):
        try:
            result = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"schema violation: {what} is not a number: {value!r}") from exc
    elif isinstance(value, float):
        raise ConfigError(
            f"schema violation: {what} must be an int or decimal string for exactness, got float {value!r}"
        )
    else:
        raise ConfigError(f"schema violation: {what} must be a number, got {type(value).__name__}")
    if result < 0:
        raise ConfigError(f"schema violation: {what} must be non-negative, got {value!r}")
    return result


def number_str(value: Fraction) -> str:
    """Render a rational exactly: integer, terminating decimal, or 'n/d'."""
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value.numerator * 10**digits // value.denominator
    text = str(abs(scaled)).rjust(digits + 1, "0")
    sign = "-" if scaled < 0 else ""
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


@dataclass(frozen=True)
class ChannelSpec:
    """A communication channel: bandwidth in data-units per time-unit plus a
    constant protocol overhead.  `bandwidth=None` means infinite (pure
    shared-memory idealization: transfer cost is the overhead alone)."""

    id: str
    bandwidth: Optional[Fraction]
    overhead: Fraction
    kind: str = SHARED_MEMORY

    def __post_init__(self):
        if self.kind not in (SHARED_MEMORY, BUS):
            raise ConfigError(f"schema violation: channel kind must be shared-memory or bus, got {self.kind!r}")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ConfigError(f"channel {self.id}: bandwidth must be positive or infinite")


@dataclass(frozen=True)
class TaskSpec:
    """Per-task data sizes and uninterrupted processing time.

    `d_in` is the size of data read from the input channel by a task with no
    producers (a sensor reader); for tasks fed by edges the input size is
    aggregated from the edges instead.
    """

    id: str
    p: Fraction
    d_out: Fraction
    d_in: Fraction = Fraction(0)


@dataclass(frozen=True)
class Terminal:
    """Scheduling reservation of one pipe: budget per period.

    Either field may be None in configurations destined for synthesis;
    analysis operations reject unsolved terminals.
    """

    budget: Optional[Fraction] = None
    period: Optional[Fraction] = None
    period_fixed: bool = False

    def __post_init__(self):
        if self.budget is not None and self.budget <= 0:
            raise ConfigError("budget must be positive")
        if self.period is not None and self.period <= 0:
            raise ConfigError("period must be positive")
        if self.budget is not None and self.period is not None and self.budget >= self.period:
            raise ConfigError(
                f"C >= T: budget {number_str(self.budget)} must be less than period {number_str(self.period)}"
            )

    @property
    def solved(self) -> bool:
        return self.budget is not None and self.period is not None


@dataclass(frozen=True)
class Pipe:
    """One task's timing envelope: input end, terminal, output end.

    `in_size` is the task input aggregated over all in-edges (plus `d_in`
    for sensor readers); `out_size` is the effective output size after the
    fan-out rule: a single copy on shared memory, duplicated per consumer
    on non-shared channels.
    """

    id: str
    task: TaskSpec
    input_channel: ChannelSpec
    output_channel: ChannelSpec
    terminal: Terminal
    in_size: Fraction = Fraction(0)
    out_size: Fraction = Fraction(0)


@dataclass(frozen=True)
class Edge:
    producer: str
    consumer: str
    data_size: Fraction


@dataclass(frozen=True)
class TimingConstraint:
    """Reaction or freshness bound over an ordered pipe chain."""

    kind: str
    chain: tuple[str, ...]
    bound: Fraction

    def __post_init__(self):
        if self.kind not in ("reaction", "freshness"):
            raise ConfigError(f"schema violation: constraint kind must be reaction or freshness, got {self.kind!r}")
        if len(self.chain) < 1:
            raise ConfigError("schema violation: constraint chain must name at least one pipe")

    @property
    def label(self) -> str:
        metric = "E" if self.kind == "reaction" else "F"
        return f"{metric}({'|'.join(self.chain)})<={number_str(self.bound)}"


@dataclass(frozen=True)
class TaskGraph:
    """Pipes plus directed producer->consumer data edges."""

    pipes: Mapping[str, Pipe]
    edges: tuple[Edge, ...]
    unit: str = "time-units"

    def pipe(self, pipe_id: str) -> Pipe:
        try:
            return self.pipes[pipe_id]
        except KeyError:
            raise ConfigError(f"unknown reference: pipe {pipe_id!r}") from None

    def in_edges(self, pipe_id: str) -> list[Edge]:
        return [e for e in self.edges if e.consumer == pipe_id]

    def out_edges(self, pipe_id: str) -> list[Edge]:
        return [e for e in self.edges if e.producer == pipe_id]

    def edge_between(self, producer: str, consumer: str) -> Optional[Edge]:
        for e in self.edges:
            if e.producer == producer and e.consumer == consumer:
                return e
        return None

    @property
    def sources(self) -> list[str]:
        fed = {e.consumer for e in self.edges}
        return [p for p in self.pipes if p not in fed]

    @property
    def sinks(self) -> list[str]:
        feeding = {e.producer for e in self.edges}
        return [p for p in self.pipes if p not in feeding]

    def is_path(self, chain: Sequence[str]) -> bool:
        if not chain or any(p not in self.pipes for p in chain):
            return False
        if len(set(chain)) != len(chain):
            return False
        return all(self.edge_between(a, b) is not None for a, b in zip(chain, chain[1:]))

    def with_pipes(self, new_pipes: Iterable[Pipe]) -> "TaskGraph":
        updated = dict(self.pipes)
        for p in new_pipes:
            updated[p.id] = p
        return replace(self, pipes=updated)


def transfer_time(channel: ChannelSpec, size: Fraction) -> Fraction:
    """Cost of moving `size` data units across one pipe end: size/bandwidth
    plus the protocol overhead; the overhead alone for infinite bandwidth."""
    if channel.bandwidth is None:
        return channel.overhead
    return size / channel.bandwidth + channel.overhead


def pipe_read_cost(pipe: Pipe) -> Fraction:
    return transfer_time(pipe.input_channel, pipe.in_size)


def pipe_write_cost(pipe: Pipe) -> Fraction:
    return transfer_time(pipe.output_channel, pipe.out_size)


def pipe_demand(pipe: Pipe) -> Fraction:
    """One iteration's execution demand: read + process + write."""
    return pipe_read_cost(pipe) + pipe.task.p + pipe_write_cost(pipe)


def validate_provisioned(pipe: Pipe) -> bool:
    """True iff the budget covers one full read+process+write iteration,
    which is what the simplified (L = C) bounds assume."""
    if not pipe.terminal.solved:
        raise ConfigError(f"pipe {pipe.id}: terminal is unsolved")
    return pipe.terminal.budget >= pipe_demand(pipe)


def aggregate_io_sizes(graph: TaskGraph) -> TaskGraph:
    """Recompute every pipe's aggregated input size and effective output size.

    Input: the task's own d_in plus the sum over all in-edges.  Output: the
    task's d_out once for shared-memory fan-out (single copy), multiplied by
    the number of consumers on non-shared channels.
    """
    new_pipes = []
    for pipe in graph.pipes.values():
        in_size = pipe.task.d_in + sum((e.data_size for e in graph.in_edges(pipe.id)), Fraction(0))
        fan_out = len(graph.out_edges(pipe.id))
        if pipe.output_channel.kind == SHARED_MEMORY or fan_out <= 1:
            out_size = pipe.task.d_out
        else:
            out_size = pipe.task.d_out * fan_out
        new_pipes.append(replace(pipe, in_size=in_size, out_size=out_size))
    return graph.with_pipes(new_pipes)


def _check_acyclic(graph: TaskGraph) -> None:
    remaining = {p: 0 for p in graph.pipes}
    for e in graph.edges:
        remaining[e.consumer] += 1
    queue = [p for p, deg in remaining.items() if deg == 0]
    seen = 0
    while queue:
        node = queue.pop()
        seen += 1
        for e in graph.out_edges(node):
            remaining[e.consumer] -= 1
            if remaining[e.consumer] == 0:
                queue.append(e.consumer)
    if seen != len(graph.pipes):
        raise ConfigError("cyclic graph: data edges must form a DAG")


def _parse_bandwidth(value, what: str) -> Optional[Fraction]:
    if value in ("inf", "infinite", None):
        return None
    bw = as_number(value, what)
    if bw == 0:
        raise ConfigError(f"{what} must be positive or infinite")
    return bw


def load_config(text: str) -> tuple[TaskGraph, list[TimingConstraint]]:
    """Parse and fully validate a configuration document.

    Returns the task graph (with aggregated I/O sizes) and the timing
    constraints.  Raises ConfigError on schema violations, unknown
    references, cycles, non-path chains, or budgets >= periods.
    """
    try:
        doc = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schema violation: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("schema violation: top level must be an object")

    unknown = set(doc) - {"unit", "channels", "tasks", "pipes", "edges", "constraints"}
    if unknown:
        raise ConfigError(f"schema violation: unknown top-level keys {sorted(unknown)}")
    unit = doc.get("unit", "time-units")
    if not isinstance(unit, str):
        raise ConfigError("schema violation: unit must be a string")

    channels: dict[str, ChannelSpec] = {}
    for entry in doc.get("channels", []):
        cid = entry.get("id")
        if not isinstance(cid, str) or cid in channels:
            raise ConfigError(f"schema violation: bad or duplicate channel id {cid!r}")
        channels[cid] = ChannelSpec(
            id=cid,
            bandwidth=_parse_bandwidth(entry.get("bandwidth", "inf"), f"channel {cid} bandwidth"),
            overhead=as_number(entry.get("overhead", 0), f"channel {cid} overhead"),
            kind=entry.get("kind", SHARED_MEMORY),
        )

    tasks: dict[str, TaskSpec] = {}
    for entry in doc.get("tasks", []):
        tid = entry.get("id")
        if not isinstance(tid, str) or tid in tasks:
            raise ConfigError(f"schema violation: bad or duplicate task id {tid!r}")
        tasks[tid] = TaskSpec(
            id=tid,
            p=as_number(entry.get("p", 0), f"task {tid} p"),
            d_out=as_number(entry.get("d_out", 0), f"task {tid} d_out"),
            d_in=as_number(entry.get("d_in", 0), f"task {tid} d_in"),
        )

    pipes: dict[str, Pipe] = {}
    for entry in doc.get("pipes", []):
        pid = entry.get("id")
        if not isinstance(pid, str) or pid in pipes:
            raise ConfigError(f"schema violation: bad or duplicate pipe id {pid!r}")
        task_id = entry.get("task", pid)
        if task_id not in tasks:
            raise ConfigError(f"unknown reference: pipe {pid} names task {task_id!r}")
        for key in ("input_channel", "output_channel"):
            if entry.get(key) not in channels:
                raise ConfigError(f"unknown reference: pipe {pid} names channel {entry.get(key)!r}")
        budget = entry.get("budget")
        period = entry.get("period")
        pipes[pid] = Pipe(
            id=pid,
            task=tasks[task_id],
            input_channel=channels[entry["input_channel"]],
            output_channel=channels[entry["output_channel"]],
            terminal=Terminal(
                budget=None if budget is None else as_number(budget, f"pipe {pid} budget"),
                period=None if period is None else as_number(period, f"pipe {pid} period"),
                period_fixed=bool(entry.get("period_fixed", False)),
            ),
        )

    edges: list[Edge] = []
    for entry in doc.get("edges", []):
        src, dst = entry.get("from"), entry.get("to")
        for pid in (src, dst):
            if pid not in pipes:
                raise ConfigError(f"unknown reference: edge names pipe {pid!r}")
        producer, consumer = pipes[src], pipes[dst]
        if producer.output_channel.id != consumer.input_channel.id:
            raise ConfigError(
                f"edge {src}->{dst}: producer output channel {producer.output_channel.id!r} "
                f"differs from consumer input channel {consumer.input_channel.id!r}"
            )
        edges.append(Edge(src, dst, as_number(entry.get("data_size", 0), f"edge {src}->{dst} data_size")))

    graph = TaskGraph(pipes=pipes, edges=tuple(edges), unit=unit)
    _check_acyclic(graph)
    graph = aggregate_io_sizes(graph)

    constraints: list[TimingConstraint] = []
    for entry in doc.get("constraints", []):
        chain = tuple(entry.get("chain", ()))
        constraint = TimingConstraint(
            kind=entry.get("kind", ""),
            chain=chain,
            bound=as_number(entry.get("bound"), "constraint bound"),
        )
        if not graph.is_path(chain):
            raise ConfigError(f"chain is not a path: {list(chain)}")
        constraints.append(constraint)

    return graph, constraints


def load_config_file(path) -> tuple[TaskGraph, list[TimingConstraint]]:
    with open(path, "r", encoding="utf-8") as handle:
        return load_config(handle.read())


def _num_json(value: Fraction):
    return value.numerator if value.denominator == 1 else number_str(value)


def dump_config(graph: TaskGraph, constraints: Sequence[TimingConstraint] = ()) -> str:
    """Serialize a graph back to the configuration document format.

    Loading the result yields a field-by-field identical graph.
    """
    channels = {}
    for pipe in graph.pipes.values():
        for ch in (pipe.input_channel, pipe.output_channel):
            channels[ch.id] = ch
    doc = {
        "unit": graph.unit,
        "channels": [
            {
                "id": ch.id,
                "bandwidth": "inf" if ch.bandwidth is None else _num_json(ch.bandwidth),
                "overhead": _num_json(ch.overhead),
                "kind": ch.kind,
            }
            for ch in channels.values()
        ],
        "tasks": [
            {
                "id": pipe.task.id,
                "p": _num_json(pipe.task.p),
                "d_out": _num_json(pipe.task.d_out),
                **({"d_in": _num_json(pipe.task.d_in)} if pipe.task.d_in else {}),
            }
            for pipe in graph.pipes.values()
        ],
        "pipes": [
            {
                "id": pipe.id,
                "task": pipe.task.id,
                "input_channel": pipe.input_channel.id,
                "output_channel": pipe.output_channel.id,
                **({"budget": _num_json(pipe.terminal.budget)} if pipe.terminal.budget is not None else {}),
                **({"period": _num_json(pipe.terminal.period)} if pipe.terminal.period is not None else {}),
                **({"period_fixed": True} if pipe.terminal.period_fixed else {}),
            }
            for pipe in graph.pipes.values()
        ],
        "edges": [
            {"from": e.producer, "to": e.consumer, "data_size": _num_json(e.data_size)} for e in graph.edges
        ],
        "constraints": [
            {"kind": c.kind, "chain": list(c.chain), "bound": _num_json(c.bound)} for c in constraints
        ],
    }
    return json.dumps(doc, indent=2)
