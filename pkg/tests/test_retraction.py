import numpy as np
import pytest

from radiallf.errors import ConfigError, DegenerateCone, DimensionMismatch, NonPositiveVoltage
from radiallf.grid import RadialNetwork
from radiallf.manifold import (
    Manifold,
    RetractionKind,
    bfm_projection,
    bfm_residual,
    check_retraction,
    qe_projection,
    qe_residual,
    retract,
    retract_bfm,
    retract_qe_current,
    retract_qe_sphere,
    retraction_for,
)
from radiallf.solvers import init_warm


def _tangents(ctx, count, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        xi = ctx.project(rng.normal(size=ctx.dimension))
        yield xi / np.linalg.norm(xi)


class TestKinds:
    def test_parse(self):
        assert RetractionKind.parse("qe1") is RetractionKind.QE_SPHERE
        assert RetractionKind.parse("QE2") is RetractionKind.QE_CURRENT
        assert RetractionKind.parse("bfm_sweep") is RetractionKind.BFM_SWEEP
        with pytest.raises(ConfigError):
            RetractionKind.parse("qe3")

    def test_defaults_and_compatibility(self):
        assert retraction_for(Manifold.BFM) is RetractionKind.BFM_SWEEP
        assert retraction_for(Manifold.QE) is RetractionKind.QE_CURRENT
        assert retraction_for(Manifold.QE, RetractionKind.QE_SPHERE) is RetractionKind.QE_SPHERE
        with pytest.raises(ConfigError):
            retraction_for(Manifold.QE, RetractionKind.BFM_SWEEP)


class TestBfmSweep:
    def test_two_bus_warm(self, two_bus):
        x = retract_bfm(two_bus, two_bus.order, [0.1, 0.05, 0.0, 0.97, 0.0, 0.0])
        assert x.l[0] == pytest.approx(0.0125)
        assert x.v[0] == pytest.approx(0.97025)
        assert x.p[0] == pytest.approx(-0.09875)
        assert x.q[0] == pytest.approx(-0.04875)

    def test_lands_on_manifold(self, path4):
        rng = np.random.default_rng(2)
        x = retract_bfm(path4, path4.order, rng.normal(scale=0.1, size=18))
        np.testing.assert_allclose(bfm_residual(path4, x), 0.0, atol=1e-12)

    def test_leaf_perturbation_stays_local(self, branched):
        x = init_warm(branched, Manifold.BFM).data
        n = branched.node_count
        moved = x.copy()
        moved[2] += 1e-3  # P of leaf line 3
        y = retract_bfm(branched, branched.order, moved)
        changed = np.flatnonzero(np.abs(y.v - x[3 * n:4 * n]) > 0)
        assert changed.tolist() == [2]

    def test_non_positive_voltage(self):
        # P = r / |z|^2, Q = x / |z|^2 drives the first node exactly to zero
        net = RadialNetwork(parent=[0, 1], r=[0.5, 0.1], x=[0.5, 0.1], tap=[1, 1], g=[0, 0], b=[0, 0],
                            p=[0, 0], q=[0, 0])
        target = np.array([1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        with pytest.raises(NonPositiveVoltage) as info:
            retract_bfm(net, net.order, target)
        assert info.value.line == 2

    def test_size_check(self, two_bus):
        with pytest.raises(DimensionMismatch):
            retract_bfm(two_bus, two_bus.order, np.zeros(4))


class TestQe:
    def test_current_retraction(self, two_bus):
        u = retract_qe_current(two_bus, [0.1, 0.05, 0.3, 0.97])
        np.testing.assert_allclose(u.data, [0.1, 0.05, 0.0125, 0.97])

    def test_sphere_retraction_lands_on_cone(self, path4):
        rng = np.random.default_rng(4)
        u = init_warm(path4).data + rng.normal(scale=0.05, size=12)
        np.testing.assert_allclose(qe_residual(path4, retract_qe_sphere(path4, u)), 0.0, atol=1e-14)

    def test_sphere_keeps_voltages(self, path4):
        u = init_warm(path4).data + 0.01
        np.testing.assert_array_equal(retract_qe_sphere(path4, u).v, u[9:])

    def test_sphere_apex(self, path4):
        u = init_warm(path4).data.copy()
        u[9] = 0.0  # upstream voltage of line 2
        u[1] = u[4] = 0.0
        u[7] = 0.0
        with pytest.raises(DegenerateCone) as info:
            retract_qe_sphere(path4, u)
        assert info.value.line == 2

    def test_current_needs_positive_voltage(self, path4):
        u = init_warm(path4).data.copy()
        u[10] = -0.1
        with pytest.raises(NonPositiveVoltage) as info:
            retract_qe_current(path4, u)
        assert info.value.line == 3


class TestAxioms:
    @pytest.mark.parametrize("kind", list(RetractionKind))
    def test_centering_and_rigidity(self, kind, path4):
        x = init_warm(path4, kind.manifold)
        ctx = bfm_projection(path4, x) if kind.manifold is Manifold.BFM else qe_projection(path4, x)
        for xi in _tangents(ctx, 20):
            check = check_retraction(kind, path4, x, xi)
            assert check.centering_error <= 1e-12
            assert check.defect_at(1e-4) <= 1e-3 * check.direction_norm
            assert check.shrinks_linearly()

    @pytest.mark.parametrize("kind", list(RetractionKind))
    def test_rigidity_on_case33(self, kind, case33):
        x = init_warm(case33, kind.manifold)
        ctx = bfm_projection(case33, x) if kind.manifold is Manifold.BFM else qe_projection(case33, x)
        for xi in _tangents(ctx, 5, seed=8):
            check = check_retraction(kind, case33, x, xi, steps=(1e-4,))
            assert check.centering_error <= 1e-12
            assert check.defect_at(1e-4) <= 1e-3 * check.direction_norm

    def test_retract_dispatch(self, two_bus):
        u = retract(RetractionKind.QE_CURRENT, two_bus, [0.1, 0.05, 0.0, 0.97])
        assert u.l[0] == pytest.approx(0.0125)
