import numpy as np
import pytest

from radiallf.baselines import recover_angles, solution_compare
from radiallf.errors import DimensionMismatch, NonPositiveVoltage
from radiallf.manifold import Manifold, lindistflow_solve
from radiallf.solvers import solve_pan

from conftest import make_two_bus


def test_zero_load_angles_vanish():
    net = make_two_bus(p=[0.0], q=[0.0])
    np.testing.assert_allclose(recover_angles(net, [0.0, 0.0, 0.0, 1.0]), [0.0, 0.0])


def test_reactive_line_lags():
    net = make_two_bus(r=[0.0])
    theta = recover_angles(net, solve_pan(Manifold.QE, net).point)
    assert theta[0] == 0.0
    assert theta[1] < 0.0


def test_angles_need_positive_voltage(two_bus):
    with pytest.raises(NonPositiveVoltage):
        recover_angles(two_bus, [0.1, 0.05, 0.0, -1.0])


def test_compare_identical():
    metrics = solution_compare([0.9, 0.95], [0.9, 0.95])
    np.testing.assert_array_equal(metrics.errors, [0.0, 0.0])
    assert metrics.within(0.0)


def test_compare_magnitudes():
    metrics = solution_compare([0.81, 1.0], [0.64, 1.0])
    np.testing.assert_allclose(metrics.errors, [0.1, 0.0])
    assert metrics.max == pytest.approx(0.1)
    assert metrics.mean == pytest.approx(0.05)


def test_compare_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        solution_compare([1.0], [1.0, 1.0])


def test_lindistflow_error_band(case33):
    _, _, v = lindistflow_solve(case33)
    exact = solve_pan(Manifold.QE, case33)
    mean = solution_compare(v, exact.v).mean
    assert 1e-4 <= mean <= 1e-2
