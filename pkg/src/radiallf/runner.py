"""
Run specifications and method dispatch for radiallf
"""

import logging
import os
import time
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .baselines import bfs_solve, lindistflow_solve, newton_raphson, recover_angles, solution_compare
from .errors import ConfigError, RadialLFError
from .grid import RadialNetwork, load_matpower, parse_network_json, scale_loads, scenario_factor
from .manifold import Manifold, QePoint, as_vector, linear_part
from .solvers import (
    METHODS,
    InitKind,
    IterationRecord,
    SolveReport,
    SolverConfig,
    pan_first_iteration,
    solve_gd,
    solve_newton_qe,
    solve_pan,
)

logger = logging.getLogger("radiallf.runner")

AGREEMENT_TOLERANCE = 1e-5
NETWORK_FORMATS = ("matpower", "json")
OUTPUT_FORMATS = ("csv", "json")


def load_network(path: str, fmt: Optional[str] = None) -> RadialNetwork:
    """Read a network file, guessing the format from the suffix when not given"""
    if fmt is None:
        fmt = "json" if str(path).lower().endswith(".json") else "matpower"
    if fmt not in NETWORK_FORMATS:
        raise ConfigError(f"unknown network format '{fmt}', expected one of {list(NETWORK_FORMATS)}")
    if fmt == "matpower":
        return load_matpower(path)
    with open(path, "r", encoding="utf-8") as handle:
        net = parse_network_json(handle.read())
    if net.name == "network":
        stem = os.path.splitext(os.path.basename(str(path)))[0]
        net = replace(net, name=stem)
    return net


@dataclass
class RunSpec:
    """One solver invocation as requested on the command line"""
    network: str
    method: str = "pan-qe"
    format: Optional[str] = None
    init: str = "warm"
    retraction: Optional[str] = None
    load_scale: Optional[float] = None
    scenario: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    out_format: str = "csv"
    out: Optional[str] = None

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method '{self.method}', expected one of {list(METHODS)}")
        if self.out_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format '{self.out_format}', expected one of {list(OUTPUT_FORMATS)}")
        self.config().check_method(self.method)

    def config(self) -> SolverConfig:
        cfg = SolverConfig.for_method(self.method, init=InitKind.parse(self.init), **self.overrides)
        if self.retraction is not None:
            cfg = cfg.with_overrides(retraction=self.retraction)
        return cfg

    def load(self) -> RadialNetwork:
        net = load_network(self.network, self.format)
        factor = self.load_scale
        if factor is None and self.scenario is not None:
            factor = scenario_factor(net.name, self.scenario)
        if factor is not None and factor != 1.0:
            net = scale_loads(net, factor)
            logger.info(f"{net.name}: loads scaled by {factor:g}")
        return net


@dataclass
class SolutionTable:
    """Per-node magnitudes and angles plus per-line flows of a solution"""
    node_ids: List[Any]
    vm: np.ndarray
    va: np.ndarray
    line_ids: List[Any]
    P: np.ndarray
    Q: np.ndarray
    l: np.ndarray  # noqa: E741

    @classmethod
    def from_report(cls, net: RadialNetwork, report: SolveReport) -> "SolutionTable":
        n = net.node_count
        node_ids = [_plain(net.node_label(i)) for i in range(n + 1)]
        line_ids = node_ids[1:]
        polar = report.extra.get("polar")
        if polar is not None:
            return cls(node_ids, polar.vm, polar.va, line_ids, polar.P, polar.Q, polar.l)
        if report.point is None:
            if report.failure is not None:
                raise report.failure
            raise RadialLFError(f"{report.method} produced no solution point")
        u = as_vector(report.point)[:4 * n]
        v = u[3 * n:]
        vm = np.concatenate([[np.sqrt(net.v0)], np.sqrt(np.maximum(v, 0.0))])
        try:
            va = recover_angles(net, u)
        except RadialLFError as e:
            logger.warning(f"{net.name}: angles unavailable ({e})")
            va = np.full(n + 1, np.nan)
        return cls(node_ids, vm, va, line_ids, u[:n].copy(), u[n:2 * n].copy(), u[2 * n:3 * n].copy())

    def to_dict(self, report: SolveReport) -> Dict[str, Any]:
        return {
            "converged": bool(report.converged),
            "iterations": int(report.iterations),
            "nodes": [
                {"id": node, "vm": float(vm), "va": float(va)}
                for node, vm, va in zip(self.node_ids, self.vm, self.va)
            ],
            "lines": [
                {"id": line, "p": float(p), "q": float(q), "l": float(l)}
                for line, p, q, l in zip(self.line_ids, self.P, self.Q, self.l)
            ],
        }


def _plain(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


# Method registry

def _lindistflow(net: RadialNetwork, cfg: SolverConfig) -> SolveReport:
    report = SolveReport(method="lindistflow")
    try:
        P, Q, v = lindistflow_solve(net)
    except RadialLFError as e:
        report.failure = e
        return report
    u = QePoint.from_parts(P, Q, np.zeros_like(P), v)
    report.point = u
    report.initial_f = report.initial_grad_norm = float("nan")
    report.converged = True
    return report


def _approx1(net: RadialNetwork, cfg: SolverConfig) -> SolveReport:
    report = SolveReport(method="approx1")
    tick = time.perf_counter()
    try:
        u = pan_first_iteration(net, cfg)
    except RadialLFError as e:
        report.failure = e
        return report
    sys = linear_part(net)
    report.point = u
    report.record(IterationRecord(
        iteration=1,
        f=sys.objective(u),
        grad_norm=float("nan"),
        max_dv=float("nan"),
        step=1.0,
        time_ms=1e3 * (time.perf_counter() - tick),
    ))
    report.converged = True
    return report


METHOD_RUNNERS: Dict[str, Callable[[RadialNetwork, SolverConfig], SolveReport]] = {
    "gd-bfm": lambda net, cfg: solve_gd(Manifold.BFM, net, cfg),
    "gd-qe": lambda net, cfg: solve_gd(Manifold.QE, net, cfg),
    "newton-qe": solve_newton_qe,
    "pan-bfm": lambda net, cfg: solve_pan(Manifold.BFM, net, cfg),
    "pan-qe": lambda net, cfg: solve_pan(Manifold.QE, net, cfg),
    "nr": lambda net, cfg: newton_raphson(net, cfg.init, cfg),
    "bfs": lambda net, cfg: bfs_solve(net, net.order, cfg),
    "lindistflow": _lindistflow,
    "approx1": _approx1,
}


def run_method(method: str, net: RadialNetwork, cfg: Optional[SolverConfig] = None) -> SolveReport:
    """Run one registered method on a network"""
    if method not in METHOD_RUNNERS:
        raise ConfigError(f"unknown method '{method}', expected one of {list(METHODS)}")
    cfg = cfg or SolverConfig.for_method(method)
    cfg.check_method(method)
    return METHOD_RUNNERS[method](net, cfg)


# Comparison and approximant reports

@dataclass
class ComparisonRow:
    method: str
    converged: bool
    iterations: int
    max_diff: float
    failure: Optional[str] = None


@dataclass
class ComparisonResult:
    reference: str
    rows: List[ComparisonRow]
    max_pairwise: float

    @property
    def agree(self) -> bool:
        return all(row.converged for row in self.rows) and self.max_pairwise <= AGREEMENT_TOLERANCE


def compare_methods(
    net: RadialNetwork,
    methods: Sequence[str],
    reference: str = "pan-qe",
    configure: Optional[Callable[[str], SolverConfig]] = None,
    progress: Optional[Callable[[Sequence[str]], Sequence[str]]] = None,
) -> ComparisonResult:
    """Run every method (plus the reference) and measure voltage disagreement"""
    if not methods:
        raise ConfigError("no methods to compare")
    configure = configure or SolverConfig.for_method
    order = list(dict.fromkeys([reference, *methods]))
    reports: Dict[str, SolveReport] = {}
    for method in (progress(order) if progress else order):
        try:
            reports[method] = run_method(method, net, configure(method))
        except ConfigError:
            raise
        except RadialLFError as e:
            logger.error(f"{net.name}: {method} failed: {e}")
            reports[method] = SolveReport(method=method, failure=e)

    voltages = {m: r.v for m, r in reports.items() if r.point is not None and r.failure is None}
    ref_v = voltages.get(reference)
    rows = []
    for method in order:
        report = reports[method]
        diff = float("nan")
        if ref_v is not None and method in voltages:
            diff = solution_compare(voltages[method], ref_v).max
        rows.append(ComparisonRow(method, report.converged and report.failure is None,
                                  report.iterations, diff, report.failure_reason))
    names = list(voltages)
    pairwise = [solution_compare(voltages[a], voltages[b]).max
                for i, a in enumerate(names) for b in names[i + 1:]]
    if len(voltages) < len(order):
        max_pairwise = float("inf")
    else:
        max_pairwise = max(pairwise, default=0.0)
    return ComparisonResult(reference=reference, rows=rows, max_pairwise=max_pairwise)


@dataclass
class ApproxReport:
    """Node-wise voltage magnitude errors of two approximants against the exact solution"""
    node_ids: List[Any]
    lindistflow: np.ndarray
    first_iteration: np.ndarray

    @property
    def summary(self) -> Dict[str, float]:
        return {
            "lindistflow_mean": float(np.mean(self.lindistflow)),
            "lindistflow_max": float(np.max(self.lindistflow)),
            "approx1_mean": float(np.mean(self.first_iteration)),
            "approx1_max": float(np.max(self.first_iteration)),
        }


def approximant_errors(net: RadialNetwork, cfg: Optional[SolverConfig] = None) -> ApproxReport:
    """Errors of LinDistFlow and of the first approximate Newton iterate"""
    cfg = cfg or SolverConfig.for_method("pan-qe")
    exact = solve_pan(Manifold.QE, net, cfg)
    exact.raise_for_failure()
    _, _, v_lin = lindistflow_solve(net)
    v_first = pan_first_iteration(net, cfg.with_overrides(init=InitKind.WARM)).v
    return ApproxReport(
        node_ids=[_plain(net.node_label(i)) for i in range(1, net.node_count + 1)],
        lindistflow=solution_compare(v_lin, exact.v).errors,
        first_iteration=solution_compare(v_first, exact.v).errors,
    )

