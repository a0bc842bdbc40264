import json

import pytest

from pipetime import load_config
from pipetime.scenarios import config_text


@pytest.fixture(scope="session")
def six_task():
    return load_config(config_text("six_task"))


@pytest.fixture(scope="session")
def three_stage_case1():
    return load_config(config_text("three_stage_case1"))


@pytest.fixture(scope="session")
def three_stage_case2():
    return load_config(config_text("three_stage_case2"))


@pytest.fixture(scope="session")
def flight_controller():
    return load_config(config_text("flight_controller"))


def make_config(channels, tasks, pipes, edges, constraints=(), unit="u"):
    return json.dumps(
        {
            "unit": unit,
            "channels": channels,
            "tasks": tasks,
            "pipes": pipes,
            "edges": edges,
            "constraints": list(constraints),
        }
    )


@pytest.fixture
def single_pipe_config():
    return make_config(
        channels=[{"id": "io", "bandwidth": "inf", "overhead": "0.5", "kind": "bus"}],
        tasks=[{"id": "a", "p": 2, "d_out": 1}],
        pipes=[{"id": "a", "task": "a", "input_channel": "io", "output_channel": "io", "budget": 4, "period": 10}],
        edges=[],
    )
