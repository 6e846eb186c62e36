import numpy as np
import pytest

from manisac import build_scenario, build_channels
from manisac.config import DEFAULT_CONFIG, load_config
import copy


def desk_config(**overrides):
    """Small-instance config for fast tests: 4+4 antennas, defaults otherwise."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    cfg["n_transmit"] = 4
    cfg["n_receive"] = 4
    for key, value in overrides.items():
        node = cfg
        parts = key.split("__")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    return cfg


def desk_scenario(seed=0, **overrides):
    return build_scenario(desk_config(**overrides), seed)


@pytest.fixture
def scenario():
    return desk_scenario(seed=0)


@pytest.fixture
def channels(scenario):
    return build_channels(scenario)
