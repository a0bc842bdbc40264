"""Canonical example configurations used by the docs, CLI demos and tests.

Three families: a six-task sensor/actuator graph with fan-in and fan-out used
to exercise synthesis; a three-stage prime-pipeline in two period orderings
used to validate bounds by simulation; and a six-thread drone flight
controller with published budgets and periods.
"""

from __future__ import annotations

import json


def six_task_config() -> dict:
    """Three sensor readers feeding two actuator writers through one
    intermediary; budgets and periods are left to synthesis."""
    return {
        "unit": "time-units",
        "channels": [
            {"id": "sense", "bandwidth": 20, "overhead": "0.1", "kind": "bus"},
            {"id": "mem", "bandwidth": 20, "overhead": "0.1", "kind": "shared-memory"},
            {"id": "act", "bandwidth": 20, "overhead": "0.1", "kind": "bus"},
        ],
        "tasks": [
            {"id": "t1", "p": "0.5", "d_out": 3, "d_in": 3},
            {"id": "t2", "p": "0.5", "d_out": 3, "d_in": 3},
            {"id": "t3", "p": "0.5", "d_out": 3, "d_in": 3},
            {"id": "t4", "p": "0.5", "d_out": 3},
            {"id": "t5", "p": "0.5", "d_out": 3},
            {"id": "t6", "p": "0.5", "d_out": 3},
        ],
        "pipes": [
            {"id": "t1", "task": "t1", "input_channel": "sense", "output_channel": "mem"},
            {"id": "t2", "task": "t2", "input_channel": "sense", "output_channel": "mem"},
            {"id": "t3", "task": "t3", "input_channel": "sense", "output_channel": "mem"},
            {"id": "t4", "task": "t4", "input_channel": "mem", "output_channel": "act"},
            {"id": "t5", "task": "t5", "input_channel": "mem", "output_channel": "mem"},
            {"id": "t6", "task": "t6", "input_channel": "mem", "output_channel": "act"},
        ],
        "edges": [
            {"from": "t1", "to": "t4", "data_size": 3},
            {"from": "t2", "to": "t4", "data_size": 3},
            {"from": "t2", "to": "t5", "data_size": 3},
            {"from": "t5", "to": "t6", "data_size": 3},
            {"from": "t3", "to": "t6", "data_size": 3},
        ],
        "constraints": [
            {"kind": "reaction", "chain": ["t1", "t4"], "bound": 10},
            {"kind": "reaction", "chain": ["t2", "t4"], "bound": 15},
            {"kind": "reaction", "chain": ["t2", "t5", "t6"], "bound": 25},
            {"kind": "reaction", "chain": ["t3", "t6"], "bound": 15},
            {"kind": "freshness", "chain": ["t1", "t4"], "bound": 20},
            {"kind": "freshness", "chain": ["t2", "t4"], "bound": 30},
            {"kind": "freshness", "chain": ["t2", "t5", "t6"], "bound": 50},
            {"kind": "freshness", "chain": ["t3", "t6"], "bound": 20},
        ],
    }


def _three_stage(params) -> dict:
    pipes = []
    tasks = []
    for pid, (budget, period, p) in params.items():
        tasks.append({"id": pid, "p": p, "d_out": 0})
        pipes.append(
            {
                "id": pid,
                "task": pid,
                "input_channel": "null" if pid == "t1" else "mem",
                "output_channel": "null" if pid == "t3" else "mem",
                "budget": budget,
                "period": period,
            }
        )
    return {
        "unit": "ms",
        "channels": [
            {"id": "null", "bandwidth": "inf", "overhead": 0, "kind": "bus"},
            {"id": "mem", "bandwidth": "inf", "overhead": 1, "kind": "shared-memory"},
        ],
        "tasks": tasks,
        "pipes": pipes,
        "edges": [
            {"from": "t1", "to": "t2", "data_size": 0},
            {"from": "t2", "to": "t3", "data_size": 0},
        ],
        "constraints": [],
    }


def three_stage_case1_config() -> dict:
    """Slow middle stage: the first boundary is producer-faster, the second
    consumer-faster.  Per-stage demands are 9.5, 9.5 and 4.5 including the
    1-unit channel cost on each boundary."""
    return _three_stage({"t1": (10, 50, "8.5"), "t2": (10, 150, "7.5"), "t3": (5, 100, "3.5")})


def three_stage_case2_config() -> dict:
    """Fast middle stage: the first boundary is consumer-faster, the second
    producer-faster."""
    return _three_stage({"t1": (5, 100, "3.5"), "t2": (10, 50, "7.5"), "t3": (10, 150, "8.5")})


def flight_controller_config() -> dict:
    """Six-thread drone flight controller: gyro and accelerometer fused into
    an attitude estimate, combined with radio set-points by the control task,
    written out as motor commands.  Shared-memory communication with
    negligible transfer cost; budgets and periods as deployed."""
    table = {
        "gyro": (200, 1000, 174),
        "ahrs": (100, 5000, 10),
        "pid": (100, 2000, 2),
        "pwm": (1000, 5000, 970),
        "accl": (200, 1000, 167),
        "radio": (100, 10000, 12),
    }
    sources = {"gyro", "accl", "radio"}
    pipes = []
    tasks = []
    for pid, (budget, period, p) in table.items():
        tasks.append({"id": pid, "p": p, "d_out": 0})
        pipes.append(
            {
                "id": pid,
                "task": pid,
                "input_channel": "io" if pid in sources else "mem",
                "output_channel": "io" if pid == "pwm" else "mem",
                "budget": budget,
                "period": period,
            }
        )
    return {
        "unit": "us",
        "channels": [
            {"id": "io", "bandwidth": "inf", "overhead": 0, "kind": "bus"},
            {"id": "mem", "bandwidth": "inf", "overhead": 0, "kind": "shared-memory"},
        ],
        "tasks": tasks,
        "pipes": pipes,
        "edges": [
            {"from": "gyro", "to": "ahrs", "data_size": 0},
            {"from": "accl", "to": "ahrs", "data_size": 0},
            {"from": "ahrs", "to": "pid", "data_size": 0},
            {"from": "radio", "to": "pid", "data_size": 0},
            {"from": "pid", "to": "pwm", "data_size": 0},
        ],
        "constraints": [
            {"kind": "reaction", "chain": ["gyro", "ahrs", "pid", "pwm"], "bound": 10000},
            {"kind": "freshness", "chain": ["gyro", "ahrs", "pid", "pwm"], "bound": 23000},
            {"kind": "reaction", "chain": ["accl", "ahrs", "pid", "pwm"], "bound": 10000},
            {"kind": "freshness", "chain": ["accl", "ahrs", "pid", "pwm"], "bound": 23000},
            {"kind": "reaction", "chain": ["radio", "pid", "pwm"], "bound": 20000},
            {"kind": "freshness", "chain": ["radio", "pid", "pwm"], "bound": 44000},
        ],
    }


ALL = {
    "six_task": six_task_config,
    "three_stage_case1": three_stage_case1_config,
    "three_stage_case2": three_stage_case2_config,
    "flight_controller": flight_controller_config,
}


def config_text(name: str) -> str:
    return json.dumps(ALL[name](), indent=2) + "\n"
