import json
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from pipetime import load_config, dump_config, validate_provisioned
from pipetime.model import (
    ChannelSpec,
    ConfigError,
    Pipe,
    TaskSpec,
    Terminal,
    as_number,
    number_str,
    transfer_time,
)
from conftest import make_config


def test_six_task_structure(six_task):
    graph, constraints = six_task
    assert graph.sources == ["t1", "t2", "t3"]
    assert graph.sinks == ["t4", "t6"]
    assert len(constraints) == 8
    assert graph.is_path(["t2", "t5", "t6"])
    assert not graph.is_path(["t1", "t6"])


def test_fan_in_aggregation(six_task):
    graph, _ = six_task
    assert graph.pipe("t4").in_size == F(6)
    assert graph.pipe("t6").in_size == F(6)
    assert graph.pipe("t5").in_size == F(3)


def test_shared_memory_fan_out_single_copy(six_task):
    graph, _ = six_task
    # t2 feeds both t4 and t5 over shared memory: one copy
    assert graph.pipe("t2").out_size == F(3)


def test_bus_fan_out_duplicates():
    text = make_config(
        channels=[
            {"id": "in", "bandwidth": "inf", "overhead": 0, "kind": "bus"},
            {"id": "bus", "bandwidth": 20, "overhead": "0.1", "kind": "bus"},
            {"id": "out", "bandwidth": "inf", "overhead": 0, "kind": "bus"},
        ],
        tasks=[{"id": "src", "p": 1, "d_out": 3}, {"id": "a", "p": 1, "d_out": 1}, {"id": "b", "p": 1, "d_out": 1}],
        pipes=[
            {"id": "src", "task": "src", "input_channel": "in", "output_channel": "bus"},
            {"id": "a", "task": "a", "input_channel": "bus", "output_channel": "out"},
            {"id": "b", "task": "b", "input_channel": "bus", "output_channel": "out"},
        ],
        edges=[{"from": "src", "to": "a", "data_size": 3}, {"from": "src", "to": "b", "data_size": 3}],
    )
    graph, _ = load_config(text)
    assert graph.pipe("src").out_size == F(6)


def test_aggregation_is_additive():
    def build(with_second_edge):
        edges = [{"from": "s1", "to": "sink", "data_size": 3}]
        if with_second_edge:
            edges.append({"from": "s2", "to": "sink", "data_size": 5})
        return make_config(
            channels=[
                {"id": "in", "bandwidth": "inf", "overhead": 0, "kind": "bus"},
                {"id": "mem", "bandwidth": "inf", "overhead": 0, "kind": "shared-memory"},
                {"id": "out", "bandwidth": "inf", "overhead": 0, "kind": "bus"},
            ],
            tasks=[
                {"id": "s1", "p": 1, "d_out": 3},
                {"id": "s2", "p": 1, "d_out": 5},
                {"id": "sink", "p": 1, "d_out": 0},
            ],
            pipes=[
                {"id": "s1", "task": "s1", "input_channel": "in", "output_channel": "mem"},
                {"id": "s2", "task": "s2", "input_channel": "in", "output_channel": "mem"},
                {"id": "sink", "task": "sink", "input_channel": "mem", "output_channel": "out"},
            ],
            edges=edges,
        )

    both, _ = load_config(build(True))
    one, _ = load_config(build(False))
    assert both.pipe("sink").in_size - one.pipe("sink").in_size == F(5)


def test_round_trip(six_task, flight_controller):
    for graph, constraints in (six_task, flight_controller):
        text = dump_config(graph, constraints)
        graph2, constraints2 = load_config(text)
        assert graph2 == graph
        assert constraints2 == constraints


def test_edge_channels_agree(six_task):
    graph, _ = six_task
    for edge in graph.edges:
        assert graph.pipe(edge.producer).output_channel.id == graph.pipe(edge.consumer).input_channel.id


def test_empty_config_is_valid():
    graph, constraints = load_config('{"channels": [], "tasks": [], "pipes": [], "edges": []}')
    assert not graph.pipes and not constraints


@pytest.mark.parametrize(
    "mangle,message",
    [
        (lambda d: d["edges"].append({"from": "t1", "to": "zz", "data_size": 1}), "unknown reference"),
        (lambda d: d["pipes"].__setitem__(0, {**d["pipes"][0], "input_channel": "zz"}), "unknown reference"),
        (lambda d: d["constraints"].append({"kind": "reaction", "chain": ["t1", "t6"], "bound": 1}), "not a path"),
        (lambda d: d["constraints"].append({"kind": "reaction", "chain": ["t4", "t1"], "bound": 1}), "not a path"),
        (lambda d: d["pipes"].__setitem__(0, {**d["pipes"][0], "budget": 9, "period": 9}), "C >= T"),
    ],
)
def test_validation_errors(mangle, message):
    from pipetime.scenarios import six_task_config

    doc = six_task_config()
    mangle(doc)
    with pytest.raises(ConfigError, match=message):
        load_config(json.dumps(doc))


def test_cycle_rejected():
    text = make_config(
        channels=[{"id": "mem", "bandwidth": "inf", "overhead": 0, "kind": "shared-memory"}],
        tasks=[{"id": "a", "p": 1, "d_out": 1}, {"id": "b", "p": 1, "d_out": 1}],
        pipes=[
            {"id": "a", "task": "a", "input_channel": "mem", "output_channel": "mem"},
            {"id": "b", "task": "b", "input_channel": "mem", "output_channel": "mem"},
        ],
        edges=[{"from": "a", "to": "b", "data_size": 1}, {"from": "b", "to": "a", "data_size": 1}],
    )
    with pytest.raises(ConfigError, match="cyclic"):
        load_config(text)


def test_floats_rejected():
    with pytest.raises(ConfigError, match="float"):
        as_number(0.1)


def test_decimal_strings_are_exact():
    assert as_number("0.1") == F(1, 10)
    assert as_number("0.25") == F(1, 4)
    assert as_number("1/3") == F(1, 3)


def _pipe(budget, demand_read, p, demand_write):
    channel_in = ChannelSpec("i", None, F(demand_read))
    channel_out = ChannelSpec("o", None, F(demand_write))
    return Pipe(
        id="x",
        task=TaskSpec("x", F(p), F(0)),
        input_channel=channel_in,
        output_channel=channel_out,
        terminal=Terminal(budget=F(budget), period=F(budget) * 100),
    )


def test_validate_provisioned():
    assert validate_provisioned(_pipe(1, "0.25", "0.5", "0.25"))
    assert not validate_provisioned(_pipe("0.9", "0.25", "0.5", "0.25"))
    assert validate_provisioned(_pipe("0.01", 0, 0, 0))


def test_transfer_time():
    assert transfer_time(ChannelSpec("c", F(20), F(1, 10)), F(3)) == F(1, 4)
    assert transfer_time(ChannelSpec("c", F(20), F(1, 10)), F(6)) == F(2, 5)
    assert transfer_time(ChannelSpec("c", F(20), F(0)), F(0)) == 0
    assert transfer_time(ChannelSpec("c", None, F(1, 10)), F(10**9)) == F(1, 10)


@given(
    st.fractions(min_value=0, max_value=10**6).filter(
        lambda f: all(p in (2, 5) for p in _prime_factors(f.denominator))
    )
)
def test_number_str_decimal_round_trip(value):
    assert as_number(number_str(value)) == value


def _prime_factors(n):
    factors = set()
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors.add(d)
            n //= d
        d += 1
    if n > 1:
        factors.add(n)
    return factors


@given(st.fractions(min_value=0, max_value=10**6))
def test_number_str_any_rational_round_trip(value):
    assert as_number(number_str(value)) == value
