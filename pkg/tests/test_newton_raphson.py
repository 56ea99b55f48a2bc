import numpy as np
import pytest

from radiallf.baselines import branch_quantities, newton_raphson, recover_angles, ybus_build
from radiallf.manifold import Manifold, qe_residual
from radiallf.solvers import InitKind, SolverConfig, solve_pan

from conftest import TWO_BUS_L, TWO_BUS_V, make_two_bus


def test_ybus_two_bus(two_bus):
    y = 1.0 / (0.1 + 0.1j)
    np.testing.assert_allclose(ybus_build(two_bus).toarray(), [[y, -y], [-y, y]])


def test_ybus_tap_and_shunt():
    net = make_two_bus(tap=[0.95], g=[0.01], b=[0.02])
    y = 1.0 / (0.1 + 0.1j)
    expected = [[y / 0.95 ** 2, -y / 0.95], [-y / 0.95, y + 0.01 + 0.02j]]
    np.testing.assert_allclose(ybus_build(net).toarray(), expected)


def test_two_bus(two_bus):
    report = newton_raphson(two_bus)
    assert report.converged, report.failure_reason
    polar = report.extra["polar"]
    assert polar.v[0] == pytest.approx(TWO_BUS_V, abs=1e-6)
    assert polar.l[0] == pytest.approx(TWO_BUS_L, abs=1e-6)
    assert polar.vm[0] == pytest.approx(1.0)
    assert polar.va[0] == 0.0


def test_branch_quantities_lie_on_cone(path4):
    report = newton_raphson(path4)
    np.testing.assert_allclose(qe_residual(path4, report.point), 0.0, atol=1e-12)
    polar = report.extra["polar"]
    P, Q, l = branch_quantities(path4, polar.vm * np.exp(1j * polar.va))
    np.testing.assert_allclose(l, polar.l)


def test_agrees_with_pan_under_taps_and_shunts(path4):
    nr = newton_raphson(path4)
    pan = solve_pan(Manifold.QE, path4)
    np.testing.assert_allclose(np.sqrt(nr.v), np.sqrt(pan.v), atol=1e-6)
    np.testing.assert_allclose(nr.point.P, pan.point.P, atol=1e-6)


def test_case33(case33):
    report = newton_raphson(case33)
    assert report.converged
    vm = report.extra["polar"].vm
    assert vm.min() == pytest.approx(0.9131, abs=2e-4)
    assert int(np.argmin(vm)) == 17  # bus 18, slack first


@pytest.mark.parametrize("init", list(InitKind))
def test_iteration_parity_with_pan(init, case33):
    cfg = SolverConfig.for_method("pan-qe", init=init)
    pan = solve_pan(Manifold.QE, case33, cfg)
    nr = newton_raphson(case33, init, SolverConfig.for_method("nr", init=init))
    assert abs(nr.iterations - pan.iterations) <= 1


def test_angles_match_nr(two_bus, path4):
    for net in (two_bus, path4):
        nr = newton_raphson(net)
        pan = solve_pan(Manifold.QE, net)
        np.testing.assert_allclose(recover_angles(net, pan.point), nr.extra["polar"].va, atol=1e-6)


def test_warm_start_converges(case33):
    report = newton_raphson(case33, InitKind.WARM)
    assert report.converged
    assert report.iterations <= 4


def test_iteration_limit(case33):
    report = newton_raphson(case33, cfg=SolverConfig.for_method("nr", max_iter=1))
    assert not report.converged
    assert report.failure is not None
