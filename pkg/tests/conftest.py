import os

import numpy as np
import pytest

from radiallf.grid import RadialNetwork, load_matpower
from radiallf.settings import cases_dir

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

# Exact 2-bus solution of l = (0.1 + 0.1 l)^2 + (0.05 + 0.1 l)^2
TWO_BUS_L = 0.0128900
TWO_BUS_V = 0.9697422


def make_two_bus(**overrides) -> RadialNetwork:
    fields = dict(parent=[0], r=[0.1], x=[0.1], tap=[1.0], g=[0.0], b=[0.0], p=[-0.1], q=[-0.05],
                  v0=1.0, name="two-bus")
    fields.update(overrides)
    return RadialNetwork(**fields)


@pytest.fixture
def two_bus() -> RadialNetwork:
    return make_two_bus()


@pytest.fixture
def path4() -> RadialNetwork:
    """Slack plus three nodes in a line, with shunts and one off-nominal tap"""
    return RadialNetwork(
        parent=[0, 1, 2],
        r=[0.02, 0.03, 0.04],
        x=[0.04, 0.05, 0.03],
        tap=[1.0, 0.98, 1.0],
        g=[0.0, 0.01, 0.0],
        b=[0.02, 0.0, 0.01],
        p=[-0.3, -0.2, -0.25],
        q=[-0.1, -0.08, -0.1],
        v0=1.0,
        name="path4",
    )


@pytest.fixture
def branched() -> RadialNetwork:
    """Slack with two feeders, one of which forks"""
    return RadialNetwork(
        parent=[0, 1, 1, 0, 4],
        r=[0.01, 0.02, 0.03, 0.015, 0.02],
        x=[0.02, 0.03, 0.02, 0.01, 0.025],
        tap=np.ones(5),
        g=np.zeros(5),
        b=np.zeros(5),
        p=[-0.1, -0.2, -0.15, -0.05, -0.1],
        q=[-0.05, -0.1, -0.05, -0.02, -0.06],
        v0=1.0,
        name="branched",
    )


@pytest.fixture
def case33_path() -> str:
    return os.path.join(DATA_DIR, "case33bw.m")


@pytest.fixture
def case33(case33_path) -> RadialNetwork:
    return load_matpower(case33_path)


def optional_case(name: str) -> str:
    """Path of a public MATPOWER case under RADIALLF_CASES, or skip"""
    directory = cases_dir()
    if not directory:
        pytest.skip("RADIALLF_CASES is not set")
    path = os.path.join(directory, f"{name}.m")
    if not os.path.isfile(path):
        pytest.skip(f"{path} not found")
    return path
