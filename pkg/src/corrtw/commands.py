import logging
import os
from typing import Any, Dict, Mapping, Optional

import click
import fsspec
import numpy as np
import pandas as pd
from click import Command, Group
from click.core import ParameterSource

from corrtw import config as run_config
from corrtw.config import ConfigError, RunConfig, parse_config
from corrtw.constants import REPLICAS_FILE_NAME, SUMMARY_FILE_NAME
from corrtw.experiments import (
    ExperimentFailed,
    run_delocalization,
    run_edge_experiment,
    run_green_comparison,
)
from corrtw.independence import run_independence_test
from corrtw.mp_law import LawParams, mp_cdf, mp_density, mp_params, nonasymptotic_params
from corrtw.storage import (
    DataFileError,
    build_provenance,
    csv_text,
    json_text,
    read_data_matrix,
    write_csv,
    write_json,
)
from corrtw.tracy_widom import load_or_solve
from corrtw.verification import failures, run_verification

logger = logging.getLogger(__name__)

_EXPLICIT = (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT)

config_option = click.option(
    "--config",
    "config_href",
    help="A key=value or JSON config file, or a JSON output to replay",
)
output_option = click.option("-o", "--output", help="Output file")
format_option = click.option(
    "--format", type=click.Choice(["csv", "json"]), help="Output format (csv)"
)
seed_option = click.option("--seed", type=int, help="Master seed (0)")
workers_option = click.option("--workers", type=int, help="Worker processes (1)")
replicas_option = click.option("--replicas", type=int, help="Replica count (100)")
dist_option = click.option(
    "--dist",
    help="Entry distribution: gaussian, rademacher, uniform_symmetric, laplace "
    "or truncated(<base>[,<cutoff>]) (gaussian)",
)


def table_options(function: Any) -> Any:
    function = click.option("--step", type=float, help="TW1 table step (0.001)")(
        function
    )
    function = click.option("--t-min", type=float, help="TW1 table left end (-10)")(
        function
    )
    function = click.option(
        "--t-plus", type=float, help="Painleve II anchor and table right end (8)"
    )(function)
    return function


def resolve(ctx: click.Context, subcommand: str) -> RunConfig:
    """Resolves the configuration from the config file and the given flags."""
    params = dict(ctx.params)
    config_href = params.pop("config_href", None)
    explicit = {
        name: value
        for name, value in params.items()
        if ctx.get_parameter_source(name) in _EXPLICIT
    }
    try:
        cfg = parse_config(subcommand, explicit, config_href)
    except ConfigError as error:
        raise click.UsageError(str(error), ctx=ctx)
    logger.debug(f"Resolved {subcommand} config: {cfg.to_dict()}")
    return cfg


def emit(
    cfg: RunConfig,
    frame: Optional[pd.DataFrame],
    payload: Mapping[str, Any],
    seed: Optional[int] = None,
) -> None:
    """Writes a result to the configured output, or prints it.

    CSV output writes ``frame``, JSON output writes ``payload``.
    """
    provenance = build_provenance(cfg.provenance_config(), seed)
    if cfg.format == "csv" and frame is not None:
        if cfg.output:
            write_csv(frame, cfg.output, provenance)
        else:
            click.echo(csv_text(frame, provenance), nl=False)
    else:
        if cfg.output:
            write_json(payload, cfg.output, provenance)
        else:
            click.echo(json_text(payload, provenance), nl=False)


def create_corrtw_command(cli: Group) -> Command:
    """Adds the correlation matrix subcommands to a group."""

    @cli.command("simulate", short_help="Simulate scaled extreme eigenvalues")
    @click.option("--p", type=int, help="Number of variables")
    @click.option("--n", type=int, help="Number of observations")
    @dist_option
    @click.option(
        "--form", help="The matrix: W_form, R_form or S_form (W_form)"
    )
    @click.option(
        "--edge",
        type=click.Choice(["largest", "smallest"]),
        help="The edge compared with TW1 (largest)",
    )
    @replicas_option
    @seed_option
    @workers_option
    @click.option(
        "--scaling",
        type=click.Choice(["n", "n_minus_1"]),
        help="Scale with n or n - 1 (n)",
    )
    @click.option(
        "--helmert/--no-helmert",
        default=False,
        help="Build R_form through the Helmert reduction",
    )
    @click.option("-o", "--output", help="Output directory")
    @table_options
    @config_option
    @click.pass_context
    def simulate_command(
        ctx: click.Context,
        p: Optional[int],
        n: Optional[int],
        dist: Optional[str],
        form: Optional[str],
        edge: Optional[str],
        replicas: Optional[int],
        seed: Optional[int],
        workers: Optional[int],
        scaling: Optional[str],
        helmert: bool,
        output: Optional[str],
        t_plus: Optional[float],
        t_min: Optional[float],
        step: Optional[float],
        config_href: Optional[str],
    ) -> None:
        """Simulates the extreme eigenvalues of sample correlation matrices.

        Writes replicas.csv, one row per replica with both extreme
        eigenvalues and their scaled statistics, and summary.json with the
        KS distances to TW1 and the empirical quantiles.

        \b
        Args:
            p (int): The number of variables, below n.
            n (int): The number of observations.
            dist (str): The entry distribution.
            form (str): W_form, R_form or S_form.
            edge (str): The edge compared with TW1 in the summary.
            replicas (int): The number of replicas.
            seed (int): The master seed. Overridden by CORRTW_SEED.
            workers (int): Worker processes. Results do not depend on it.
            output (str): The output directory.
        """
        cfg = resolve(ctx, run_config.SIMULATE)
        experiment = cfg.experiment_config()
        table = load_or_solve(cfg.painleve_config())
        try:
            result = run_edge_experiment(experiment)
        except ExperimentFailed as error:
            raise click.ClickException(str(error))
        assert cfg.output is not None
        fs, path = fsspec.core.url_to_fs(cfg.output)
        fs.makedirs(path, exist_ok=True)
        provenance = build_provenance(cfg.provenance_config(), cfg.seed)
        replicas = write_csv(
            result.frame(), os.path.join(cfg.output, REPLICAS_FILE_NAME), provenance
        )
        summary = result.summary(table)
        summary["replicas_checksum"] = replicas.checksum
        write_json(summary, os.path.join(cfg.output, SUMMARY_FILE_NAME), provenance)

    @cli.command("tw-table", short_help="Tabulate the TW1 distribution function")
    @click.option("-o", "--output", help="Output CSV file")
    @table_options
    @config_option
    @click.pass_context
    def tw_table_command(
        ctx: click.Context,
        output: Optional[str],
        t_plus: Optional[float],
        t_min: Optional[float],
        step: Optional[float],
        config_href: Optional[str],
    ) -> None:
        """Solves Painleve II and writes the TW1 table with columns t, q and F1.

        \b
        Args:
            output (str): The output CSV file.
            t_plus (float): The right anchor of the solve.
            t_min (float): The left end of the table.
            step (float): The table step.
        """
        cfg = resolve(ctx, run_config.TW_TABLE)
        assert cfg.output is not None
        load_or_solve(cfg.painleve_config()).to_csv(cfg.output)

    @cli.command("mp-density", short_help="Tabulate the Marchenko-Pastur law")
    @click.option("--y", type=float, help="Aspect ratio in (0, 1)")
    @click.option("--p", type=int, help="Number of variables, with --n")
    @click.option("--n", type=int, help="Number of observations, with --p")
    @click.option("--points", type=int, help="Grid points (201)")
    @output_option
    @format_option
    @config_option
    @click.pass_context
    def mp_density_command(
        ctx: click.Context,
        y: Optional[float],
        p: Optional[int],
        n: Optional[int],
        points: Optional[int],
        output: Optional[str],
        format: Optional[str],
        config_href: Optional[str],
    ) -> None:
        """Writes x, density and cdf of the law over [a/2, 2b].

        Give either the aspect ratio y or the dimensions p and n.
        """
        cfg = resolve(ctx, run_config.MP_DENSITY)
        params: LawParams
        if cfg.y is not None:
            params = mp_params(cfg.y)
        else:
            assert cfg.p is not None and cfg.n is not None
            params = nonasymptotic_params(cfg.p, cfg.n)
        x = np.linspace(params.lower / 2.0, 2.0 * params.upper, cfg.points)
        frame = pd.DataFrame(
            {"x": x, "density": mp_density(x, params), "cdf": mp_cdf(x, params)}
        )
        payload = {
            "y": params.y,
            "lower": params.lower,
            "upper": params.upper,
            "x": x,
            "density": frame["density"].to_numpy(),
            "cdf": frame["cdf"].to_numpy(),
        }
        emit(cfg, frame, payload)

    @cli.command("verify", short_help="Run the identity suites")
    @seed_option
    @click.option("--instances", type=int, help="Random instances per suite (100)")
    @config_option
    @click.pass_context
    def verify_command(
        ctx: click.Context,
        seed: Optional[int],
        instances: Optional[int],
        config_href: Optional[str],
    ) -> None:
        """Checks the exact identities on random instances.

        Exits with status 1 naming every failed suite.
        """
        cfg = resolve(ctx, run_config.VERIFY)
        results = run_verification(cfg.seed, cfg.instances)
        for result in results:
            click.echo(result.line())
        failed = failures(results)
        if failed:
            raise click.ClickException(f"Failed suites: {', '.join(failed)}")

    @cli.command(
        "test-independence", short_help="Test the variables of a data file"
    )
    @click.option("--data", help="CSV data file")
    @click.option(
        "--orientation",
        type=click.Choice(["rows_are_variables", "columns_are_variables"]),
        help="Layout of the data file (rows_are_variables)",
    )
    @click.option(
        "--mean",
        type=click.Choice(["known_zero", "unknown"]),
        help="Whether the population mean is known to be zero (known_zero)",
    )
    @click.option(
        "--edge",
        type=click.Choice(["largest", "smallest"]),
        help="The extreme eigenvalue tested (largest)",
    )
    @click.option(
        "--scaling",
        type=click.Choice(["n", "n_minus_1"]),
        help="Scale with n or n - 1 (n)",
    )
    @output_option
    @format_option
    @table_options
    @config_option
    @click.pass_context
    def test_independence_command(
        ctx: click.Context,
        data: Optional[str],
        orientation: Optional[str],
        mean: Optional[str],
        edge: Optional[str],
        scaling: Optional[str],
        output: Optional[str],
        format: Optional[str],
        t_plus: Optional[float],
        t_min: Optional[float],
        step: Optional[float],
        config_href: Optional[str],
    ) -> None:
        """Tests whether the variables of a data file are independent.

        The p-value is one-sided: large statistics reject for the largest
        edge and small statistics for the smallest.

        \b
        Args:
            data (str): The CSV file, without or with a header.
            orientation (str): rows_are_variables or columns_are_variables.
            mean (str): known_zero uses W, unknown uses the centered R.
            edge (str): largest or smallest.
            scaling (str): n or n_minus_1.
        """
        cfg = resolve(ctx, run_config.TEST_INDEPENDENCE)
        assert cfg.data is not None
        try:
            data = read_data_matrix(cfg.data, cfg.orientation)
            report = run_independence_test(
                data,
                mean=cfg.mean,
                edge=cfg.edge,
                scaling=cfg.scaling,
                table=load_or_solve(cfg.painleve_config()),
            )
        except DataFileError as error:
            raise click.ClickException(str(error))
        except ValueError as error:
            raise click.ClickException(f"{type(error).__name__}: {error}")
        emit(cfg, pd.DataFrame([report.to_dict()]), report.to_dict())

    @cli.command("green-compare", short_help="Compare two entry distributions")
    @click.option("--p", type=int, help="Number of variables")
    @click.option("--n", type=int, help="Number of observations")
    @dist_option
    @click.option("--dist-w", help="The second entry distribution (gaussian)")
    @replicas_option
    @seed_option
    @workers_option
    @click.option("--energy", type=float, help="The energy E (the upper edge)")
    @click.option("--epsilon", type=float, help="The scale exponent epsilon (0.05)")
    @click.option(
        "--coefficients",
        help="Test polynomial coefficients, lowest degree first (0,1)",
    )
    @click.option(
        "--statistic",
        type=click.Choice(["point", "integrated"]),
        help="Point or integrated Stieltjes statistic (point)",
    )
    @click.option(
        "--paired/--no-paired",
        default=False,
        help="Draw both distributions from the same streams",
    )
    @output_option
    @format_option
    @config_option
    @click.pass_context
    def green_compare_command(
        ctx: click.Context,
        p: Optional[int],
        n: Optional[int],
        dist: Optional[str],
        dist_w: Optional[str],
        replicas: Optional[int],
        seed: Optional[int],
        workers: Optional[int],
        energy: Optional[float],
        epsilon: Optional[float],
        coefficients: Optional[str],
        statistic: Optional[str],
        paired: bool,
        output: Optional[str],
        format: Optional[str],
        config_href: Optional[str],
    ) -> None:
        """Compares the mean edge statistic under two entry distributions.

        CSV output has one row per replica, JSON output has the means, the
        pooled standard error and the per-replica values.
        """
        cfg = resolve(ctx, run_config.GREEN_COMPARE)
        green = cfg.green_config()
        result = run_green_comparison(green)
        frame = pd.DataFrame(
            {
                "replica": np.arange(result.values_v.size),
                "value_v": result.values_v,
                "value_w": result.values_w,
            }
        )
        payload: Dict[str, Any] = {
            "mean_v": result.mean_v,
            "mean_w": result.mean_w,
            "pooled_se": result.pooled_se,
            "diff": result.diff,
            "energy": green.E,
            "eta": green.eta,
            "values_v": result.values_v,
            "values_w": result.values_w,
        }
        logger.info(
            f"mean_v={result.mean_v:.6g} mean_w={result.mean_w:.6g} "
            f"diff={result.diff:.3g} pooled_se={result.pooled_se:.3g}"
        )
        emit(cfg, frame, payload, cfg.seed)

    @cli.command("delocalize", short_help="Largest singular vector components")
    @click.option("--p", type=int, help="Number of variables")
    @click.option("--n", type=int, help="Number of observations")
    @dist_option
    @click.option("--form", help="The matrix: W_form, R_form or S_form (W_form)")
    @replicas_option
    @seed_option
    @workers_option
    @output_option
    @format_option
    @config_option
    @click.pass_context
    def delocalize_command(
        ctx: click.Context,
        p: Optional[int],
        n: Optional[int],
        dist: Optional[str],
        form: Optional[str],
        replicas: Optional[int],
        seed: Optional[int],
        workers: Optional[int],
        output: Optional[str],
        format: Optional[str],
        config_href: Optional[str],
    ) -> None:
        """Measures the largest singular vector component of every replica."""
        cfg = resolve(ctx, run_config.DELOCALIZE)
        try:
            result = run_delocalization(cfg.experiment_config())
        except ValueError as error:
            raise click.ClickException(str(error))
        frame = pd.DataFrame(
            {
                "replica": np.arange(result.per_replica.size),
                "sup_norm": result.per_replica,
            }
        )
        payload = {
            "max_sup": result.max_sup,
            "bound": result.bound,
            "per_replica": result.per_replica,
        }
        emit(cfg, frame, payload, cfg.seed)

    return cli
