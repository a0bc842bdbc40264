"""Budget and period synthesis from end-to-end timing constraints.

Three steps: (1) compute each budget so one read+process+write iteration
fits in a single allocation, (2) translate every reaction/freshness
constraint into a linear inequality over period variables under an assumed
per-boundary priority order, (3) maximize periods (a linear proxy for
minimizing utilization) with an exact rational simplex, floor the result to
the requested resolution and re-verify everything through the analysis
module.  Assignments of boundary priority orders are searched depth-first,
starting from the over-sampling heuristic (every consumer faster than its
producer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from . import lp
from .analysis import Mode, PriorityCase, boundary_case, evaluate_constraint
from .model import (
    Pipe,
    PipetimeError,
    TaskGraph,
    Terminal,
    TimingConstraint,
    number_str,
    pipe_demand,
    transfer_time,
)


class SynthesisError(PipetimeError):
    pass


class InfeasibleError(SynthesisError):
    """No branch assignment yielded a verified period set."""

    def __init__(self, message: str, attempts: list[dict]):
        super().__init__(message)
        self.attempts = attempts


Boundary = tuple[str, str]


@dataclass(frozen=True)
class LinearInequality:
    """sum(terms[j] * T_j) + constant <= bound  (strictly, if `strict`)."""

    terms: Mapping[str, Fraction]
    constant: Fraction
    bound: Fraction
    origin: str
    strict: bool = False

    def pretty(self) -> str:
        parts = []
        for var, coeff in self.terms.items():
            if coeff == 1:
                parts.append(f"T[{var}]")
            else:
                parts.append(f"{number_str(coeff)}*T[{var}]")
        if self.constant:
            parts.append(number_str(self.constant))
        op = "<" if self.strict else "<="
        lhs = " + ".join(parts).replace("+ -", "- ") if parts else "0"
        return f"{lhs} {op} {number_str(self.bound)}"


@dataclass(frozen=True)
class SynthesisResult:
    periods: dict[str, Fraction]
    budgets: dict[str, Fraction]
    utilization: Fraction
    ll_bound: float
    slacks: dict[str, Fraction]
    branches: dict[Boundary, PriorityCase]
    response_times: dict[str, Fraction]
    rta_ok: bool
    assignments_tried: int


def compute_budgets(graph: TaskGraph, pad: Fraction = Fraction(0)) -> TaskGraph:
    """Set every budget to read + process + write (+ pad), leaving periods
    untouched; the resulting pipes are provisioned by construction."""
    new_pipes = []
    for pipe in graph.pipes.values():
        budget = pipe_demand(pipe) + pad
        if budget <= 0:
            raise SynthesisError(f"pipe {pipe.id}: zero demand and zero pad leave no budget")
        period = pipe.terminal.period
        if period is not None and period <= budget:
            period = None  # stale period from an earlier solve; re-derive
        new_pipes.append(
            replace(pipe, terminal=Terminal(budget=budget, period=period, period_fixed=pipe.terminal.period_fixed))
        )
    return graph.with_pipes(new_pipes)


def chain_boundaries(constraints: Sequence[TimingConstraint]) -> list[Boundary]:
    seen: list[Boundary] = []
    for c in constraints:
        for pair in zip(c.chain, c.chain[1:]):
            if pair not in seen:
                seen.append(pair)
    return seen


def _budget(graph: TaskGraph, pipe_id: str) -> Fraction:
    budget = graph.pipe(pipe_id).terminal.budget
    if budget is None:
        raise SynthesisError(f"pipe {pipe_id}: budget not computed")
    return budget


def _boundary_cost(graph: TaskGraph, producer: str, consumer: str) -> Fraction:
    edge = graph.edge_between(producer, consumer)
    if edge is None:
        raise SynthesisError(f"chain is not a path: no edge {producer}->{consumer}")
    return transfer_time(graph.pipe(producer).output_channel, edge.data_size)


def derive_inequalities(
    graph: TaskGraph,
    constraints: Sequence[TimingConstraint],
    branches: Mapping[Boundary, PriorityCase],
    paper_compat: bool = False,
) -> list[LinearInequality]:
    """Expand constraints into linear inequalities over period variables.

    `paper_compat` drops the channel cost on appended-pipe increments (and on
    freshness pairs), matching the published translation; otherwise all
    channel costs are kept, which never loosens a bound.
    """
    rows: list[LinearInequality] = []
    for constraint in constraints:
        chain = constraint.chain
        terms: dict[str, Fraction] = {}
        constant = Fraction(0)

        def add(var: str, coeff: int) -> None:
            terms[var] = terms.get(var, Fraction(0)) + coeff

        if len(chain) == 1:
            constant += _budget(graph, chain[0])
        else:
            first = (chain[0], chain[1])
            case = branches[first]
            cost = _boundary_cost(graph, *first)
            if constraint.kind == "reaction":
                if case is PriorityCase.CONSUMER_HIGHER:
                    add(first[1], 1)
                    constant += _budget(graph, first[0]) - cost
                else:
                    add(first[0], 1)
                    constant += _budget(graph, first[1]) - cost
            else:
                fcost = Fraction(0) if paper_compat else cost
                if case is PriorityCase.CONSUMER_HIGHER:
                    add(first[0], 2)
                    constant -= fcost
                else:
                    add(first[0], 1)
                    constant += _budget(graph, first[1]) - fcost
            for tail, new in zip(chain[1:], chain[2:]):
                case = branches[(tail, new)]
                cost = Fraction(0) if paper_compat else _boundary_cost(graph, tail, new)
                if constraint.kind == "reaction":
                    if case is PriorityCase.CONSUMER_HIGHER:
                        add(new, 1)
                        constant -= cost
                    else:
                        add(tail, 1)
                        constant += _budget(graph, new) - _budget(graph, tail) - cost
                else:
                    if case is PriorityCase.CONSUMER_HIGHER:
                        add(tail, 2)
                        constant -= cost + _budget(graph, tail)
                    else:
                        add(tail, 1)
                        constant += _budget(graph, new) - cost - _budget(graph, tail)
        rows.append(
            LinearInequality(terms=terms, constant=constant, bound=constraint.bound, origin=constraint.label)
        )
    for pipe_id in graph.pipes:
        rows.append(
            LinearInequality(
                terms={pipe_id: Fraction(-1)},
                constant=Fraction(0),
                bound=-_budget(graph, pipe_id),
                origin=f"T[{pipe_id}] > C[{pipe_id}]",
                strict=True,
            )
        )
    return rows


def _branch_rows(branches: Mapping[Boundary, PriorityCase]) -> list[LinearInequality]:
    rows = []
    for (producer, consumer), case in branches.items():
        if case is PriorityCase.CONSUMER_HIGHER:
            rows.append(
                LinearInequality(
                    terms={consumer: Fraction(1), producer: Fraction(-1)},
                    constant=Fraction(0),
                    bound=Fraction(0),
                    origin=f"T[{consumer}] < T[{producer}]",
                    strict=True,
                )
            )
        else:
            rows.append(
                LinearInequality(
                    terms={producer: Fraction(1), consumer: Fraction(-1)},
                    constant=Fraction(0),
                    bound=Fraction(0),
                    origin=f"T[{producer}] <= T[{consumer}]",
                )
            )
    return rows


def rms_bound_check(graph: TaskGraph) -> tuple[bool, Fraction, float]:
    """Total utilization against the rate-monotonic bound n(2^(1/n) - 1)."""
    pipes = list(graph.pipes.values())
    utilization = Fraction(0)
    for pipe in pipes:
        if not pipe.terminal.solved:
            raise SynthesisError(f"pipe {pipe.id}: terminal is unsolved")
        utilization += pipe.terminal.budget / pipe.terminal.period
    n = len(pipes)
    bound = n * (2 ** (1 / n) - 1) if n else 1.0
    return float(utilization) <= bound + 1e-12, utilization, bound


def _priority_order(graph: TaskGraph) -> list[Pipe]:
    return sorted(graph.pipes.values(), key=lambda p: (p.terminal.period, p.id))


def response_time_check(graph: TaskGraph) -> tuple[bool, dict[str, Fraction]]:
    """Exact fixed-priority response times under rate-monotonic order.

    Interference counts every job released in the closed window [0, R]
    (floor(R/T) + 1 jobs), which is conservative at period multiples.
    Divergence beyond the pipe's own period means unschedulable.
    """
    ordered = _priority_order(graph)
    responses: dict[str, Fraction] = {}
    ok = True
    for idx, pipe in enumerate(ordered):
        higher = ordered[:idx]
        r = pipe.terminal.budget + sum((h.terminal.budget for h in higher), Fraction(0))
        while True:
            total = pipe.terminal.budget
            for h in higher:
                jobs = r // h.terminal.period + 1
                total += jobs * h.terminal.budget
            if total == r or total > pipe.terminal.period:
                r = total
                break
            r = total
        responses[pipe.id] = r
        if r > pipe.terminal.period:
            ok = False
    return ok, responses


def _apply_periods(graph: TaskGraph, periods: Mapping[str, Fraction]) -> TaskGraph:
    new_pipes = []
    for pipe in graph.pipes.values():
        terminal = Terminal(
            budget=pipe.terminal.budget,
            period=periods[pipe.id],
            period_fixed=pipe.terminal.period_fixed,
        )
        new_pipes.append(replace(pipe, terminal=terminal))
    return graph.with_pipes(new_pipes)


def _floor_to_grid(value: Fraction, resolution: Fraction) -> Fraction:
    return (value // resolution) * resolution


def _solve_assignment(
    graph: TaskGraph,
    rows: list[LinearInequality],
    free: list[str],
    fixed: Mapping[str, Fraction],
    resolution: Fraction,
    cap: Fraction,
    objective: Optional[Mapping[str, Fraction]] = None,
) -> Optional[dict[str, Fraction]]:
    """Maximize the (weighted) sum of free periods subject to rows; returns
    exact LP periods or None when infeasible."""
    lower = {j: (_budget(graph, j) // resolution + 1) * resolution for j in free}
    index = {j: k for k, j in enumerate(free)}
    lp_rows: list[list[Fraction]] = []
    lp_rhs: list[Fraction] = []
    for row in rows:
        if row.strict and len(row.terms) == 1 and next(iter(row.terms.values())) == -1:
            continue  # T > C rows are enforced exactly by the grid lower bounds
        coeffs = [Fraction(0)] * len(free)
        rhs = row.bound - row.constant
        if row.strict:
            rhs -= resolution
        skip = True
        for var, coeff in row.terms.items():
            if var in index:
                coeffs[index[var]] = coeff
                rhs -= coeff * lower[var]
                skip = False
            else:
                rhs -= coeff * fixed[var]
        if skip:
            if rhs < 0:
                return None  # constraint over fixed periods already violated
            continue
        lp_rows.append(coeffs)
        lp_rhs.append(rhs)
    for j in free:
        coeffs = [Fraction(0)] * len(free)
        coeffs[index[j]] = Fraction(1)
        lp_rows.append(coeffs)
        lp_rhs.append(cap - lower[j])
        if lp_rhs[-1] < 0:
            return None
    weights = [Fraction(1)] * len(free)
    if objective:
        weights = [objective.get(j, Fraction(1)) for j in free]
    result = lp.maximize(weights, lp_rows, lp_rhs)
    if result.status != lp.OPTIMAL:
        return None
    solution = dict(fixed)
    for j in free:
        solution[j] = lower[j] + result.x[index[j]]
    return solution


def _verify(
    graph: TaskGraph,
    constraints: Sequence[TimingConstraint],
    branches: Mapping[Boundary, PriorityCase],
    periods: Mapping[str, Fraction],
) -> tuple[bool, str, dict[str, Fraction], TaskGraph]:
    solved = _apply_periods(graph, periods)
    for pipe in solved.pipes.values():
        if pipe.terminal.period <= pipe.terminal.budget:
            return False, f"T <= C for pipe {pipe.id}", {}, solved
    for (producer, consumer), case in branches.items():
        actual = boundary_case(solved.pipe(producer), solved.pipe(consumer))
        if actual is not case:
            return False, f"branch inconsistency at {producer}->{consumer}", {}, solved
    slacks: dict[str, Fraction] = {}
    for constraint in constraints:
        _, slack = evaluate_constraint(solved, constraint, Mode.GENERAL)
        slacks[constraint.label] = slack
        if slack < 0:
            return False, f"re-verification failed for {constraint.label}", {}, solved
    ok, _, _ = rms_bound_check(solved)
    if not ok:
        return False, "utilization exceeds the rate-monotonic bound", {}, solved
    return True, "", slacks, solved


def _first_blocking_row(rows, free, fixed, graph, resolution, cap) -> str:
    for k in range(1, len(rows) + 1):
        if _solve_assignment(graph, rows[:k], free, fixed, resolution, cap) is None:
            return rows[k - 1].origin
    return "unknown"


def solve_periods(
    graph: TaskGraph,
    constraints: Sequence[TimingConstraint],
    fixed: Optional[Mapping[str, Fraction]] = None,
    resolution: Fraction = Fraction(1),
    cap_units: int = 10**6,
    paper_compat: bool = False,
    max_assignments: int = 4096,
) -> SynthesisResult:
    """Find maximal periods meeting all constraints, schedulably.

    Depth-first over per-boundary priority assignments (consumer-faster
    first); per assignment an exact LP maximizes the period sum, the result
    is floored to `resolution` and re-verified end to end (constraints via
    the analysis module, branch consistency, utilization bound).  The first
    verified assignment wins.  Raises InfeasibleError with the attempts log
    when nothing verifies.
    """
    if resolution <= 0:
        raise SynthesisError("resolution must be positive")
    fixed_periods: dict[str, Fraction] = {}
    for pipe in graph.pipes.values():
        if pipe.terminal.budget is None:
            raise SynthesisError(f"pipe {pipe.id}: budget not computed (run compute_budgets first)")
        if pipe.terminal.period_fixed:
            if pipe.terminal.period is None:
                raise SynthesisError(f"pipe {pipe.id}: period_fixed without a period")
            fixed_periods[pipe.id] = pipe.terminal.period
    for pipe_id, period in (fixed or {}).items():
        fixed_periods[pipe_id] = Fraction(period)
    for pipe_id, period in fixed_periods.items():
        if period <= _budget(graph, pipe_id):
            raise SynthesisError(f"pipe {pipe_id}: fixed period {number_str(period)} does not exceed its budget")
    free = [p for p in graph.pipes if p not in fixed_periods]
    cap = cap_units * resolution

    boundaries = chain_boundaries(constraints)
    choices: list[list[PriorityCase]] = []
    for producer, consumer in boundaries:
        if producer in fixed_periods and consumer in fixed_periods:
            forced = (
                PriorityCase.CONSUMER_HIGHER
                if fixed_periods[consumer] < fixed_periods[producer]
                else PriorityCase.PRODUCER_HIGHER
            )
            choices.append([forced])
        else:
            choices.append([PriorityCase.CONSUMER_HIGHER, PriorityCase.PRODUCER_HIGHER])

    attempts: list[dict] = []

    def assignments():
        def rec(i, current):
            if i == len(boundaries):
                yield dict(current)
                return
            for case in choices[i]:
                current[boundaries[i]] = case
                yield from rec(i + 1, current)
            current.pop(boundaries[i], None)

        yield from rec(0, {})

    tried = 0
    for branches in assignments():
        if tried >= max_assignments:
            break
        tried += 1
        rows = derive_inequalities(graph, constraints, branches, paper_compat) + _branch_rows(branches)
        exact = _solve_assignment(graph, rows, free, fixed_periods, resolution, cap)
        if exact is None:
            attempts.append(
                {
                    "branches": dict(branches),
                    "reason": "linear program infeasible",
                    "blocking": _first_blocking_row(rows, free, fixed_periods, graph, resolution, cap),
                }
            )
            continue
        periods = {j: (exact[j] if j in fixed_periods else _floor_to_grid(exact[j], resolution)) for j in exact}
        ok, reason, slacks, solved = _verify(graph, constraints, branches, periods)
        if not ok:
            # One reweighted retry: steer the objective toward utilization
            # descent at the current vertex before abandoning the branch.
            weights = {j: _budget(graph, j) / (exact[j] * exact[j]) for j in free}
            retry = _solve_assignment(graph, rows, free, fixed_periods, resolution, cap, objective=weights)
            if retry is not None:
                periods = {
                    j: (retry[j] if j in fixed_periods else _floor_to_grid(retry[j], resolution)) for j in retry
                }
                ok, reason, slacks, solved = _verify(graph, constraints, branches, periods)
        if not ok:
            attempts.append({"branches": dict(branches), "reason": reason, "blocking": None})
            continue
        rta_ok, responses = response_time_check(solved)
        _, utilization, ll = rms_bound_check(solved)
        return SynthesisResult(
            periods={p: solved.pipe(p).terminal.period for p in solved.pipes},
            budgets={p: solved.pipe(p).terminal.budget for p in solved.pipes},
            utilization=utilization,
            ll_bound=ll,
            slacks=slacks,
            branches=dict(branches),
            response_times=responses,
            rta_ok=rta_ok,
            assignments_tried=tried,
        )
    raise InfeasibleError(
        f"no feasible period assignment found after {tried} branch assignment(s)",
        attempts,
    )
