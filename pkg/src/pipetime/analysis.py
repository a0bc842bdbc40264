"""Closed-form worst-case end-to-end reaction and freshness bounds.

Reaction time: input arrival to the *first* sink output it influences.
Freshness time: input arrival to the *last* sink output it influences.

Single-pipe latency is served-demand over the budget/period envelope; chains
add a per-boundary scheduling wait that depends on which side of the boundary
has the shorter period (rate-monotonic priority).  Provisioned pipes (budget
covers a whole read+process+write iteration) admit the simplified forms where
per-pipe latency collapses to the budget.

Modes:

* ``general``      - per-pipe latency (budget if provisioned, envelope formula
                     otherwise) plus boundary waits with channel costs, waits
                     clamped at zero.
* ``simplified``   - provisioned pipes only; the pairwise conditional form
                     with channel costs, composed by increments.
* ``zero-comm``    - simplified with all channel costs discarded.
* ``paper-compat`` - channel cost kept on the leading pair, discarded on the
                     appended-pipe increments; reproduces the published
                     constraint translations exactly.

All functions are pure and operate on immutable inputs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .model import (
    ChannelSpec,
    Pipe,
    PipetimeError,
    TaskGraph,
    TimingConstraint,
    pipe_demand,
    pipe_read_cost,
    pipe_write_cost,
    transfer_time,
    validate_provisioned,
)


class AnalysisError(PipetimeError):
    """Analysis precondition violated (unsolved terminal, bad chain, ...)."""


class Mode(str, enum.Enum):
    GENERAL = "general"
    SIMPLIFIED = "simplified"
    ZERO_COMM = "zero-comm"
    PAPER_COMPAT = "paper-compat"


class PriorityCase(str, enum.Enum):
    """Which boundary side runs at higher (rate-monotonic) priority."""

    CONSUMER_HIGHER = "consumer-higher-priority"
    PRODUCER_HIGHER = "producer-higher-priority"


@dataclass(frozen=True)
class BoundaryWait:
    """Worst-case wait between a producer publishing and its consumer next
    picking the value up, at one chain boundary."""

    producer: str
    consumer: str
    case: PriorityCase
    wait: Fraction


@dataclass(frozen=True)
class AnalysisResult:
    chain: tuple[str, ...]
    metric: str
    mode: Mode
    value: Fraction
    pipe_latencies: tuple[tuple[str, Fraction], ...]
    boundaries: tuple[BoundaryWait, ...]
    notes: tuple[str, ...] = ()


def _require_solved(pipe: Pipe) -> None:
    if not pipe.terminal.solved:
        raise AnalysisError(f"pipe {pipe.id}: terminal is unsolved")


def _require_provisioned(pipe: Pipe) -> None:
    _require_solved(pipe)
    if not validate_provisioned(pipe):
        raise AnalysisError(
            f"pipe {pipe.id}: not provisioned (demand exceeds budget); "
            "simplified and freshness bounds are undefined for it"
        )


def pipe_latency(pipe: Pipe) -> Fraction:
    """Worst-case time for one iteration under the budget/period envelope.

    demand = read + process + write; the value is
    floor(demand / C) * T + (demand mod C), evaluated exactly.
    """
    _require_solved(pipe)
    budget, period = pipe.terminal.budget, pipe.terminal.period
    if pipe_read_cost(pipe) + pipe_write_cost(pipe) > budget:
        raise AnalysisError(f"pipe {pipe.id}: read+write stages exceed one budget")
    demand = pipe_demand(pipe)
    return (demand // budget) * period + demand % budget


def provisioned_latency(pipe: Pipe) -> Fraction:
    """Single-iteration latency of a provisioned pipe: its budget."""
    _require_provisioned(pipe)
    return pipe.terminal.budget


def _chain_pipe_latency(pipe: Pipe) -> Fraction:
    # Within chains a provisioned pipe contributes its budget (the safe
    # envelope of a sub-budget iteration); anything else falls back to the
    # full envelope formula.
    _require_solved(pipe)
    if validate_provisioned(pipe):
        return pipe.terminal.budget
    return pipe_latency(pipe)


def _boundary_channel(producer: Pipe, consumer: Pipe) -> ChannelSpec:
    if producer.output_channel.id != consumer.input_channel.id:
        raise AnalysisError(
            f"pipes {producer.id} and {consumer.id} do not share a channel "
            f"({producer.output_channel.id!r} vs {consumer.input_channel.id!r})"
        )
    return producer.output_channel


def boundary_case(producer: Pipe, consumer: Pipe) -> PriorityCase:
    """Strictly shorter consumer period means consumer-higher priority;
    ties take the producer-higher branch (never smaller for equal periods)."""
    if consumer.terminal.period < producer.terminal.period:
        return PriorityCase.CONSUMER_HIGHER
    return PriorityCase.PRODUCER_HIGHER


def sched_latency(producer: Pipe, consumer: Pipe, data_size: Fraction) -> BoundaryWait:
    """Worst-case scheduling wait at a boundary, clamped at zero.

    Consumer-higher: T_c - C_c - transfer; producer-higher: T_p - C_p -
    transfer.  The transfer term is the boundary channel cost of the edge's
    data size.
    """
    _require_solved(producer)
    _require_solved(consumer)
    channel = _boundary_channel(producer, consumer)
    cost = transfer_time(channel, data_size)
    case = boundary_case(producer, consumer)
    if case is PriorityCase.CONSUMER_HIGHER:
        raw = consumer.terminal.period - consumer.terminal.budget - cost
    else:
        raw = producer.terminal.period - producer.terminal.budget - cost
    return BoundaryWait(producer.id, consumer.id, case, max(raw, Fraction(0)))


def pair_reaction(producer: Pipe, consumer: Pipe, data_size: Fraction, mode: Mode = Mode.GENERAL) -> Fraction:
    """Worst-case reaction time across one producer|consumer boundary."""
    mode = Mode(mode)
    if mode is Mode.GENERAL:
        wait = sched_latency(producer, consumer, data_size)
        return _chain_pipe_latency(producer) + wait.wait + _chain_pipe_latency(consumer)
    _require_provisioned(producer)
    _require_provisioned(consumer)
    channel = _boundary_channel(producer, consumer)
    cost = Fraction(0) if mode is Mode.ZERO_COMM else transfer_time(channel, data_size)
    if boundary_case(producer, consumer) is PriorityCase.CONSUMER_HIGHER:
        return consumer.terminal.period + producer.terminal.budget - cost
    return producer.terminal.period + consumer.terminal.budget - cost


def reaction_increment(tail: Pipe, appended: Pipe, data_size: Fraction, mode: Mode = Mode.GENERAL) -> Fraction:
    """Growth of a chain's worst-case reaction when `appended` joins `tail`.

    Zero-comm/paper-compat: T_new when the new pipe is faster, else
    T_tail - C_tail + C_new.  General and simplified keep the channel cost
    (the increment is the appended boundary wait plus the new pipe's
    latency).
    """
    mode = Mode(mode)
    if mode is Mode.GENERAL:
        wait = sched_latency(tail, appended, data_size)
        return wait.wait + _chain_pipe_latency(appended)
    _require_provisioned(tail)
    _require_provisioned(appended)
    channel = _boundary_channel(tail, appended)
    cost = Fraction(0) if mode in (Mode.ZERO_COMM, Mode.PAPER_COMPAT) else transfer_time(channel, data_size)
    if boundary_case(tail, appended) is PriorityCase.CONSUMER_HIGHER:
        return appended.terminal.period - cost
    return tail.terminal.period - tail.terminal.budget + appended.terminal.budget - cost


def pair_freshness(producer: Pipe, consumer: Pipe, data_size: Fraction, mode: Mode = Mode.GENERAL) -> Fraction:
    """Worst-case freshness time across one boundary (provisioned pipes only).

    Consumer-higher: twice the producer period less its write cost (the value
    survives until the producer's next publication).  Producer-higher: the
    value is read at most once, so this is the worst-case reaction.
    """
    mode = Mode(mode)
    _require_provisioned(producer)
    _require_provisioned(consumer)
    channel = _boundary_channel(producer, consumer)
    drop = mode in (Mode.ZERO_COMM, Mode.PAPER_COMPAT)
    cost = Fraction(0) if drop else transfer_time(channel, data_size)
    if boundary_case(producer, consumer) is PriorityCase.CONSUMER_HIGHER:
        return 2 * producer.terminal.period - cost
    return producer.terminal.period + consumer.terminal.budget - cost


def _resolve_chain(graph: TaskGraph, chain: Sequence[str]) -> list[Pipe]:
    if not graph.is_path(chain):
        raise AnalysisError(f"chain is not a path: {list(chain)}")
    return [graph.pipe(p) for p in chain]


def _boundary_sizes(graph: TaskGraph, chain: Sequence[str]) -> list[Fraction]:
    return [graph.edge_between(a, b).data_size for a, b in zip(chain, chain[1:])]


def chain_reaction(graph: TaskGraph, chain: Sequence[str], mode: Mode = Mode.GENERAL) -> AnalysisResult:
    """Worst-case reaction bound for an arbitrary-length pipe chain.

    A one-pipe chain is the single-pipe latency (both metrics coincide).
    Longer chains sum per-pipe latencies plus per-boundary waits; in the
    simplified family the same value is built pairwise plus per-appended-pipe
    increments.
    """
    mode = Mode(mode)
    pipes = _resolve_chain(graph, chain)
    sizes = _boundary_sizes(graph, chain)
    notes: list[str] = []

    if mode is Mode.GENERAL:
        lats = [(p.id, _chain_pipe_latency(p)) for p in pipes]
        waits = [sched_latency(p, c, d) for p, c, d in zip(pipes, pipes[1:], sizes)]
        value = sum((l for _, l in lats), Fraction(0)) + sum((w.wait for w in waits), Fraction(0))
        return AnalysisResult(tuple(chain), "reaction", mode, value, tuple(lats), tuple(waits), tuple(notes))

    for p in pipes:
        _require_provisioned(p)
    lats = [(p.id, p.terminal.budget) for p in pipes]
    if len(pipes) == 1:
        value = pipes[0].terminal.budget
        return AnalysisResult(tuple(chain), "reaction", mode, value, tuple(lats), (), tuple(notes))

    pair_mode = Mode.SIMPLIFIED if mode is Mode.PAPER_COMPAT else mode
    value = pair_reaction(pipes[0], pipes[1], sizes[0], pair_mode)
    for tail, appended, size in zip(pipes[1:], pipes[2:], sizes[1:]):
        value += reaction_increment(tail, appended, size, mode)
    # Reconstruct the boundary decomposition so value == sum(lats) + sum(waits).
    waits = []
    for p, c, d in zip(pipes, pipes[1:], sizes):
        case = boundary_case(p, c)
        cost = Fraction(0) if mode is Mode.ZERO_COMM else transfer_time(_boundary_channel(p, c), d)
        if mode is Mode.PAPER_COMPAT and (p.id, c.id) != (pipes[0].id, pipes[1].id):
            cost = Fraction(0)
        if case is PriorityCase.CONSUMER_HIGHER:
            share = c.terminal.period - c.terminal.budget - cost
        else:
            share = p.terminal.period - p.terminal.budget - cost
        waits.append(BoundaryWait(p.id, c.id, case, share))
    return AnalysisResult(tuple(chain), "reaction", mode, value, tuple(lats), tuple(waits), tuple(notes))


CHAIN_FRESHNESS_NOTE = (
    "freshness for chains longer than two pipes composes pairwise values by "
    "subtracting each intermediate pipe's budget; this composition extends "
    "the pairwise results and is validated against simulation"
)


def chain_freshness(graph: TaskGraph, chain: Sequence[str], mode: Mode = Mode.GENERAL) -> AnalysisResult:
    """Worst-case freshness bound for a pipe chain (provisioned pipes only)."""
    mode = Mode(mode)
    pipes = _resolve_chain(graph, chain)
    sizes = _boundary_sizes(graph, chain)
    for p in pipes:
        _require_provisioned(p)
    notes: list[str] = []
    lats = tuple((p.id, p.terminal.budget) for p in pipes)
    if len(pipes) == 1:
        value = pipes[0].terminal.budget
        return AnalysisResult(tuple(chain), "freshness", mode, value, lats, (), tuple(notes))
    value = pair_freshness(pipes[0], pipes[1], sizes[0], mode)
    for tail, appended, size in zip(pipes[1:], pipes[2:], sizes[1:]):
        value += pair_freshness(tail, appended, size, mode) - tail.terminal.budget
    if len(pipes) > 2:
        notes.append(CHAIN_FRESHNESS_NOTE)
    waits = []
    for p, c, d in zip(pipes, pipes[1:], sizes):
        waits.append(BoundaryWait(p.id, c.id, boundary_case(p, c), pair_freshness(p, c, d, mode)))
    return AnalysisResult(tuple(chain), "freshness", mode, value, lats, tuple(waits), tuple(notes))


def analyze_chain(graph: TaskGraph, chain: Sequence[str], metric: str, mode: Mode = Mode.GENERAL) -> AnalysisResult:
    if metric == "reaction":
        return chain_reaction(graph, chain, mode)
    if metric == "freshness":
        return chain_freshness(graph, chain, mode)
    raise AnalysisError(f"unknown metric {metric!r}")


def evaluate_constraint(graph: TaskGraph, constraint: TimingConstraint, mode: Mode = Mode.GENERAL):
    """Return (bound value, slack) for one constraint; negative slack means
    the constraint is violated."""
    result = analyze_chain(graph, constraint.chain, constraint.kind, mode)
    return result.value, constraint.bound - result.value
