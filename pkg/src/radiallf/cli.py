"""
Command-line entry point: lf solve | compare | approx
"""

import logging
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, NoReturn, Optional

import click
from rich.console import Console
from rich.logging import RichHandler
from tqdm import tqdm

from . import reporting
from .errors import ConfigError, NetworkError, RadialLFError
from .manifold import RetractionKind
from .runner import (
    METHOD_RUNNERS,
    RunSpec,
    SolutionTable,
    approximant_errors,
    compare_methods,
    run_method,
)
from .settings import load_environment, load_settings, merge, solver_overrides
from .solvers import SolverConfig, manifold_of_method

logger = logging.getLogger("radiallf.cli")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2


def setup_logging(verbosity: int):
    """Install a RichHandler on the package logger; repeated calls replace it"""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    root = logging.getLogger("radiallf")
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)


def _fail(message: str, code: int = EXIT_INPUT) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    raise click.exceptions.Exit(code)


def _network_options(func):
    options = [
        click.option("--network", "network", default=None, help="MATPOWER .m or JSON network file"),
        click.option("--format", "fmt", default=None, help="matpower or json (guessed from the suffix)"),
        click.option("--init", default=None, help="flat or warm"),
        click.option("--retraction", default=None, help="bfm, qe1 or qe2"),
        click.option("--load-scale", type=float, default=None, help="multiply all loads"),
        click.option("--scenario", default=None, help="base, medium or high loading of a known case"),
        click.option("--eps-grad", type=float, default=None),
        click.option("--eps-volt", type=float, default=None),
        click.option("--alpha-bar", type=float, default=None),
        click.option("--beta", type=float, default=None),
        click.option("--sigma", type=float, default=None),
        click.option("--max-iter", type=int, default=None),
        click.option("--out", default=None, help="output directory"),
        click.option("--out-format", default="csv", help="csv or json"),
        click.option("--config", "config_path", default=None, help="YAML settings file"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _settings(params: Dict[str, Any]) -> Dict[str, Any]:
    flags = {
        "init": params["init"],
        "retraction": params["retraction"],
        "load_scale": params["load_scale"],
        "eps_grad": params["eps_grad"],
        "eps_volt": params["eps_volt"],
        "alpha_bar": params["alpha_bar"],
        "beta": params["beta"],
        "sigma": params["sigma"],
        "max_iter": params["max_iter"],
    }
    return merge(load_settings(params["config_path"]), flags)


def _run_spec(method: str, params: Dict[str, Any], strict_retraction: bool = True) -> RunSpec:
    if not params["network"]:
        raise ConfigError("--network is required")
    settings = _settings(params)
    spec = RunSpec(
        network=params["network"],
        method=method,
        format=params["fmt"],
        init=str(settings.get("init", "warm")),
        retraction=settings.get("retraction"),
        load_scale=settings.get("load_scale"),
        scenario=params["scenario"],
        overrides=solver_overrides(settings),
        out_format=params["out_format"],
        out=params["out"],
    )
    if strict_retraction:
        spec.validate()
    else:
        replace(spec, retraction=None).validate()
        if spec.retraction is not None:
            RetractionKind.parse(spec.retraction)
    return spec


def _method_config(spec: RunSpec, method: str) -> SolverConfig:
    """Shared settings for one method of a comparison; a retraction only applies to its own manifold"""
    cfg = SolverConfig.for_method(method, init=spec.init, **spec.overrides)
    if spec.retraction is not None:
        kind = RetractionKind.parse(spec.retraction)
        if kind.manifold is manifold_of_method(method):
            cfg = cfg.with_overrides(retraction=kind)
    return cfg


def _output_path(spec: RunSpec, name: str) -> str:
    return os.path.join(spec.out, name)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging")
def lf(verbose: int):
    """Radial distribution load flow by Riemannian optimization"""
    setup_logging(verbose)


@lf.command()
@click.option("--method", default="pan-qe", help=", ".join(METHOD_RUNNERS))
@_network_options
@click.pass_context
def solve(ctx: click.Context, method: str, **params):
    """Solve one network with one method"""
    try:
        spec = _run_spec(method, params)
        net = spec.load()
        report = run_method(spec.method, net, spec.config())
        if report.point is None:
            message = f"{net.name}: {method} has no solution ({report.failure_reason})"
            logger.error(message)
            _fail(message, EXIT_NOT_CONVERGED)
        table = SolutionTable.from_report(net, report)
    except (ConfigError, NetworkError, OSError) as e:
        logger.error(f"{e}")
        _fail(str(e))
    except RadialLFError as e:
        logger.error(f"{e}")
        _fail(str(e), EXIT_NOT_CONVERGED)

    if spec.out:
        reporting.write_atomic(_output_path(spec, "trajectory.csv"), reporting.trajectory_csv(report))
        reporting.write_atomic(_output_path(spec, "solution.json"), reporting.solution_json(table, report))
    else:
        reporting.show(reporting.solve_table(report))

    if not report.converged:
        click.echo(f"{net.name}: {method} did not converge ({report.failure_reason})", err=True)
        ctx.exit(EXIT_NOT_CONVERGED)
    ctx.exit(EXIT_OK)


@lf.command()
@click.option("--method", "methods", multiple=True, help="method to run; repeat for several")
@click.option("--reference", default="pan-qe", help="method the others are compared to")
@_network_options
@click.pass_context
def compare(ctx: click.Context, methods: List[str], reference: str, **params):
    """Run several methods and report their voltage disagreement"""
    try:
        if not methods:
            raise ConfigError("no methods to compare")
        spec = _run_spec(reference, params, strict_retraction=False)
        for method in methods:
            RunSpec(network=spec.network, method=method).validate()
        net = spec.load()

        def progress(order):
            return tqdm(order, desc=f"{net.name}", file=sys.stderr, disable=not sys.stderr.isatty())

        result = compare_methods(
            net, list(methods), reference=reference,
            configure=lambda m: _method_config(spec, m), progress=progress,
        )
    except (ConfigError, NetworkError, OSError) as e:
        logger.error(f"{e}")
        _fail(str(e))

    rows = reporting.comparison_rows(result)
    if spec.out:
        name = f"compare.{spec.out_format}"
        text = reporting.records_text(rows, spec.out_format, {
            "reference": result.reference,
            "max_pairwise": result.max_pairwise,
        })
        reporting.write_atomic(_output_path(spec, name), text)
    else:
        reporting.show(reporting.comparison_table(result))

    if not result.agree:
        click.echo(f"{net.name}: methods disagree by {result.max_pairwise:.3e} p.u.", err=True)
        ctx.exit(EXIT_NOT_CONVERGED)
    ctx.exit(EXIT_OK)


@lf.command()
@_network_options
@click.pass_context
def approx(ctx: click.Context, **params):
    """Per-node errors of LinDistFlow and of the first approximate Newton iterate"""
    try:
        spec = _run_spec("pan-qe", params)
        net = spec.load()
        report = approximant_errors(net, spec.config())
    except (ConfigError, NetworkError, OSError) as e:
        logger.error(f"{e}")
        _fail(str(e))
    except RadialLFError as e:
        logger.error(f"{e}")
        _fail(str(e), EXIT_NOT_CONVERGED)

    rows = reporting.approx_rows(report)
    if spec.out:
        name = f"approx.{spec.out_format}"
        reporting.write_atomic(_output_path(spec, name),
                               reporting.records_text(rows, spec.out_format, {"summary": report.summary}))
    else:
        reporting.show(reporting.approx_table(report))
    ctx.exit(EXIT_OK)


def main(argv: Optional[List[str]] = None):
    """Console script: usage errors map to exit code 1"""
    load_environment()
    try:
        code = lf.main(args=argv, prog_name="lf", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        code = EXIT_INPUT
    except click.Abort:
        code = EXIT_INPUT
    sys.exit(code or 0)
