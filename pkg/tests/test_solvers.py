import numpy as np
import pytest

from radiallf.errors import ConfigError, LineSearchFailed, MaxIterExceeded
from radiallf.manifold import (
    Manifold,
    RetractionKind,
    as_vector,
    grad_bfm,
    grad_qe,
    hess_qe_apply,
    linear_part,
    qe_differential,
    qe_projection,
    retract,
)
from radiallf.solvers import (
    ArmijoConfig,
    InitKind,
    Objective,
    SolverConfig,
    armijo,
    init_flat,
    init_warm,
    initial_point,
    newton_direction_qe,
    pan_direction_bfm,
    pan_direction_qe,
    pan_first_iteration,
    solve_gd,
    solve_newton_qe,
    solve_pan,
    stop_check,
)
from radiallf.solvers import newton as newton_module

from conftest import TWO_BUS_V, make_two_bus


class TestConfig:
    def test_method_defaults(self):
        assert SolverConfig.for_method("gd-bfm").armijo.alpha_bar == 4.5
        assert SolverConfig.for_method("gd-qe").armijo.alpha_bar == 1.0
        assert SolverConfig.for_method("pan-qe").retraction is RetractionKind.QE_CURRENT
        assert SolverConfig.for_method("pan-bfm").retraction is RetractionKind.BFM_SWEEP
        assert SolverConfig.for_method("nr").retraction is None
        cfg = SolverConfig()
        assert (cfg.eps_grad, cfg.eps_volt, cfg.max_iter) == (1e-6, 1e-6, 100000)
        assert (cfg.armijo.beta, cfg.armijo.sigma) == (0.3, 0.05)
        assert cfg.init is InitKind.WARM

    def test_overrides(self):
        cfg = SolverConfig.for_method("pan-qe", beta=0.5, max_iter=7, init="flat", retraction="qe1")
        assert cfg.armijo.beta == 0.5
        assert cfg.max_iter == 7
        assert cfg.init is InitKind.FLAT
        assert cfg.retraction is RetractionKind.QE_SPHERE
        assert cfg.with_overrides(sigma=None).armijo.sigma == 0.05

    @pytest.mark.parametrize("kwargs", [
        {"beta": 1.0}, {"sigma": 0.0}, {"alpha_bar": -1.0}, {"eps_grad": 0.0},
        {"max_iter": 0}, {"init": "hot"}, {"retraction": "qe9"}, {"unknown": 1},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SolverConfig.for_method("pan-qe", **kwargs)

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            SolverConfig.for_method("simplex")

    def test_retraction_must_match_method(self):
        cfg = SolverConfig.for_method("pan-bfm", retraction="qe2")
        with pytest.raises(ConfigError):
            cfg.check_method("pan-bfm")
        with pytest.raises(ConfigError):
            solve_pan(Manifold.BFM, make_two_bus(), cfg)


class TestInitialization:
    def test_flat(self, two_bus):
        np.testing.assert_allclose(init_flat(two_bus).data, [0.0, 0.0, 0.0, 1.0])
        x = init_flat(two_bus, Manifold.BFM)
        np.testing.assert_allclose(x.data, [0.0, 0.0, 0.0, 1.0, 0.0, 0.0])

    def test_warm(self, two_bus):
        np.testing.assert_allclose(init_warm(two_bus).data, [0.1, 0.05, 0.0125, 0.97])
        x = init_warm(two_bus, Manifold.BFM)
        np.testing.assert_allclose(x.data, [0.1, 0.05, 0.0125, 0.97025, -0.09875, -0.04875])

    def test_warm_is_above_exact_voltages(self, case33):
        exact = solve_pan(Manifold.QE, case33)
        assert np.all(init_warm(case33).v >= exact.v - 1e-12)

    def test_initial_point(self, two_bus):
        assert initial_point(two_bus, Manifold.QE, InitKind.FLAT).v[0] == 1.0


class TestLineSearch:
    def test_accepts_descent(self, two_bus):
        objective = Objective(two_bus, Manifold.QE)
        u = init_flat(two_bus)
        grad = objective.gradient(u)
        step = armijo(objective.value, lambda t: retract(RetractionKind.QE_CURRENT, two_bus, t),
                      u, -grad, grad, ArmijoConfig())
        assert step.value < objective.value(u)
        assert step.step == pytest.approx(0.3 ** step.m)

    def test_ascent_fails(self, two_bus, caplog):
        objective = Objective(two_bus, Manifold.QE)
        u = init_flat(two_bus)
        grad = objective.gradient(u)
        with pytest.raises(LineSearchFailed):
            armijo(objective.value, lambda t: retract(RetractionKind.QE_CURRENT, two_bus, t),
                   u, grad, grad, ArmijoConfig(max_backtracks=3))
        assert "non-descent" in caplog.text

    def test_oversized_step_backtracks(self, two_bus):
        objective = Objective(two_bus, Manifold.QE)
        u = init_flat(two_bus)
        grad = objective.gradient(u)
        step = armijo(objective.value, lambda t: retract(RetractionKind.QE_CURRENT, two_bus, t),
                      u, -1e6 * grad.data, grad, ArmijoConfig())
        assert step.m > 0
        assert step.value < objective.value(u)

    def test_tiny_step_is_accepted(self, two_bus):
        objective = Objective(two_bus, Manifold.QE)
        u = init_flat(two_bus)
        grad = objective.gradient(u)
        step = armijo(objective.value, lambda t: retract(RetractionKind.QE_CURRENT, two_bus, t),
                      u, -1e-8 * grad.data, grad, ArmijoConfig(sigma=1e-6))
        assert step.m == 0

    @pytest.mark.parametrize("network", ["path4", "case33"])
    def test_full_approximate_newton_step_near_solution(self, network, request):
        net = request.getfixturevalue(network)
        objective = Objective(net, Manifold.QE)
        u = init_warm(net)
        zeta = pan_direction_qe(net, objective.sys, u)
        step = armijo(objective.value, lambda t: retract(RetractionKind.QE_CURRENT, net, t),
                      u, zeta, objective.gradient(u), ArmijoConfig())
        assert step.m == 0
        assert step.step == 1.0


class TestStopping:
    def test_stop_check(self, two_bus):
        cfg = SolverConfig()
        u = init_warm(two_bus)
        tiny = np.full(4, 1e-9)
        assert stop_check(u, u, tiny, cfg)
        moved = u.copy()
        moved.data[3] -= 0.01
        assert not stop_check(u, moved, tiny, cfg)
        assert not stop_check(u, u, np.full(4, 1e-6), cfg)


class TestDirections:
    def test_pan_qe_two_bus_flat(self, two_bus):
        zeta = pan_direction_qe(two_bus, linear_part(two_bus), init_flat(two_bus))
        np.testing.assert_allclose(zeta.data, [0.1, 0.05, 0.0, -0.03], atol=1e-15)

    def test_pan_bfm_two_bus_flat(self, two_bus):
        xi = pan_direction_bfm(two_bus, init_flat(two_bus, Manifold.BFM))
        np.testing.assert_allclose(xi.data, [0.1, 0.05, 0.0, -0.03, -0.1, -0.05], atol=1e-15)

    def test_first_flat_iterate_is_warm(self, path4, case33):
        for net in (path4, case33):
            first = pan_first_iteration(net, SolverConfig.for_method("pan-qe", init="flat"))
            np.testing.assert_allclose(first.data, init_warm(net).data, atol=1e-10, rtol=0)

    def test_newton_direction_solves_newton_equation(self, case33):
        sys = linear_part(case33)
        u = init_warm(case33).data
        ctx = qe_projection(case33, u)
        zeta = newton_direction_qe(case33, u, sys, ctx)
        grad = grad_qe(sys, case33, u, ctx).data
        residual = hess_qe_apply(sys, case33, u, zeta.data, ctx).data + grad
        assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(grad)
        np.testing.assert_allclose(qe_differential(case33, u) @ zeta.data, 0.0, atol=1e-12)

    def test_newton_iterative_matches_dense(self, path4, monkeypatch):
        u = init_warm(path4).data
        dense = newton_direction_qe(path4, u).data
        monkeypatch.setattr(newton_module, "DENSE_LIMIT", 0)
        iterative = newton_direction_qe(path4, u).data
        np.testing.assert_allclose(iterative, dense, rtol=1e-6, atol=1e-10)


def _descent_identities(net, manifold):
    cfg = SolverConfig.for_method(f"pan-{manifold.value}")
    objective = Objective(net, manifold)
    point = initial_point(net, manifold, cfg.init)
    for _ in range(4):
        grad = objective.gradient(point)
        if grad.norm() <= cfg.eps_grad:
            return
        if manifold is Manifold.QE:
            xi = pan_direction_qe(net, objective.sys, point)
            scale = 2 * np.sum((objective.sys.A @ xi.data) ** 2)
        else:
            xi = pan_direction_bfm(net, point)
            scale = 2 * np.sum(np.concatenate([xi.eta_p, xi.eta_q]) ** 2)
        assert abs(grad.inner(xi) + scale) <= 1e-10 * max(scale, 1e-300)
        point = retract(cfg.retraction, net, as_vector(point) + xi.data)


class TestSolvers:
    def test_pan_two_bus(self, two_bus):
        for manifold in Manifold:
            report = solve_pan(manifold, two_bus)
            assert report.converged, report.failure_reason
            assert report.v[0] == pytest.approx(TWO_BUS_V, abs=1e-6)

    def test_pan_improves_on_warm(self, two_bus):
        first = pan_first_iteration(two_bus)
        assert abs(first.v[0] - TWO_BUS_V) < abs(init_warm(two_bus).v[0] - TWO_BUS_V)

    def test_zero_load_needs_no_iterations(self):
        net = make_two_bus(p=[0.0], q=[0.0])
        for manifold in Manifold:
            report = solve_pan(manifold, net)
            assert report.converged
            assert report.iterations == 0

    @pytest.mark.parametrize("manifold", list(Manifold))
    def test_gd_two_bus(self, manifold, two_bus):
        report = solve_gd(manifold, two_bus, SolverConfig.for_method(f"gd-{manifold.value}", max_iter=20000))
        assert report.converged, report.failure_reason
        assert report.v[0] == pytest.approx(TWO_BUS_V, abs=1e-5)
        f = np.concatenate([[report.initial_f], report.f_values])
        assert np.all(np.diff(f) < 0)

    def test_pan_case33_counts(self, case33):
        warm = solve_pan(Manifold.QE, case33)
        flat = solve_pan(Manifold.QE, case33, SolverConfig.for_method("pan-qe", init="flat"))
        bfm = solve_pan(Manifold.BFM, case33)
        assert warm.converged and flat.converged and bfm.converged
        assert 2 <= warm.iterations <= 4
        assert flat.iterations == warm.iterations + 1
        assert abs(bfm.iterations - warm.iterations) <= 1
        assert np.sqrt(warm.v.min()) == pytest.approx(0.9131, abs=2e-4)
        assert int(np.argmin(warm.v)) == 16  # bus 18

    def test_pan_monotone(self, case33):
        for manifold in Manifold:
            report = solve_pan(manifold, case33)
            f = np.concatenate([[report.initial_f], report.f_values])
            assert np.all(np.diff(f) < 0)

    @pytest.mark.parametrize("manifold", list(Manifold))
    def test_descent_identities(self, manifold, case33, path4):
        _descent_identities(case33, manifold)
        _descent_identities(path4, manifold)

    def test_pan_with_sphere_retraction(self, path4):
        report = solve_pan(Manifold.QE, path4, SolverConfig.for_method("pan-qe", retraction="qe1"))
        reference = solve_pan(Manifold.QE, path4)
        assert report.converged
        np.testing.assert_allclose(report.v, reference.v, atol=1e-6)

    def test_newton_case33(self, case33):
        report = solve_newton_qe(case33)
        assert report.converged, report.failure_reason
        assert 2 <= report.iterations <= 4
        reference = solve_pan(Manifold.QE, case33)
        np.testing.assert_allclose(np.sqrt(report.v), np.sqrt(reference.v), atol=1e-5)

    @pytest.mark.parametrize("init", list(InitKind))
    @pytest.mark.parametrize("method", ["pan-qe", "newton-qe"])
    def test_superlinear_tail(self, method, init, case33, path4):
        for net in (case33, path4):
            cfg = SolverConfig.for_method(method, init=init)
            if method == "pan-qe":
                report = solve_pan(Manifold.QE, net, cfg)
            else:
                report = solve_newton_qe(net, cfg)
            assert report.converged, report.failure_reason
            f = np.concatenate([[report.initial_f], report.f_values])
            # pairs inside the local region and above the rounding floor
            tail = [(a, b) for a, b in zip(f, f[1:]) if 1e-16 < a <= 1e-4]
            assert tail
            for before, after in tail:
                assert after <= before ** 1.5

    def test_iteration_limit(self, case33):
        report = solve_pan(Manifold.QE, case33, SolverConfig.for_method("pan-qe", max_iter=1))
        assert not report.converged
        assert isinstance(report.failure, MaxIterExceeded)
        assert report.iterations == 1
        with pytest.raises(MaxIterExceeded):
            report.raise_for_failure()

    def test_bfm_gradient_at_solution(self, two_bus):
        report = solve_pan(Manifold.BFM, two_bus)
        assert grad_bfm(two_bus, report.point).norm() <= 1e-6
