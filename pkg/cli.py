#!/usr/bin/env python3
from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import click
import numpy as np
import yaml
from rich.console import Console

from blocktri import dual_entries, entries_recursive, oracle_entries
from construct import build_w0, build_w1
from export import (
    OVERLAP_HEADER,
    basis_payload,
    blocks_payload,
    matrix_payload,
    orthogonality_payload,
    overlap_rows,
    overlaps_payload,
    write_csv,
    write_json,
)
from overlaps import check_qdiff, check_recurrence, n2_closed_form, overlap_F, weights_and_orthogonality
from params import (
    DimensionError,
    GenericityError,
    GenericityTolerances,
    ModelParams,
    ParameterError,
    encode_complex,
    parse_complex,
    require_valid,
)
from report import build_summary, generate_final_report, generate_rich_report, generate_value_table
from spectral import KINDS, eigenbasis, norm_coeffs, tilde_vectors
from verify import CHECKS, CheckTolerances, breached, run_suites, tolerances_dict, tolerances_for

EXIT_OK = 0
EXIT_BREACH = 1
EXIT_INVALID = 3
MODEL_KEYS = ("N", "alpha", "alpha_star", "phi", "theta")
TILDE_KINDS = ("psi_tilde", "phi_tilde")


class ComplexParam(click.ParamType):
    """Complex flag values: "RE+IMi", "IMi", "RE"."""
    name = "complex"

    def convert(self, value: Any, param: click.Parameter | None, ctx: click.Context | None) -> complex:
        if isinstance(value, complex):
            return value
        try:
            return parse_complex(value)
        except ParameterError as e:
            self.fail(str(e), param, ctx)


COMPLEX = ComplexParam()


@dataclass
class RunConfig:
    command: str
    model: dict[str, Any]
    profile: str | None = None
    overrides: dict[str, float] = field(default_factory=dict)
    guard: float | None = None
    dimension_cap: int | None = None
    out: str | None = None
    output_format: str = "json"
    verbose: bool = False
    options: dict[str, Any] = field(default_factory=dict)

    def params(self) -> ModelParams:
        return ModelParams.from_dict(self.model)

    def genericity(self) -> GenericityTolerances:
        defaults = GenericityTolerances()
        return GenericityTolerances(
            guard=defaults.guard if self.guard is None else float(self.guard),
            dimension_cap=defaults.dimension_cap if self.dimension_cap is None else int(self.dimension_cap),
        )

    def tolerances(self) -> CheckTolerances:
        return tolerances_for(self.profile, self.overrides)


def load_config(config_file: str | None) -> dict[str, Any]:
    config = {}
    if config_file and os.path.exists(config_file):
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
                config = data if isinstance(data, dict) else {}
        except Exception as e:
            click.echo(f"Error loading config file {config_file}: {e}", err=True)
    return config


def save_json(payload: Any, json_path: str) -> bool:
    try:
        write_json(payload, json_path)
        click.echo(f"JSON output saved to {json_path}")
        return True
    except Exception as e:
        click.echo(f"Error saving JSON output: {e}", err=True)
        return False


def save_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], csv_path: str) -> bool:
    try:
        write_csv(header, rows, csv_path)
        click.echo(f"CSV output saved to {csv_path}")
        return True
    except Exception as e:
        click.echo(f"Error saving CSV output: {e}", err=True)
        return False


def emit_json(payload: Any, out: str | None) -> bool:
    if out:
        return save_json(payload, out)
    click.echo(json.dumps(payload, indent=2))
    return True


def emit_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], out: str | None) -> bool:
    if out:
        return save_csv(header, rows, out)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    click.echo(buffer.getvalue(), nl=False)
    return True


def make_run_config(command: str, config_file: str | None, flags: dict[str, Any], profile: str | None = None,
                    out: str | None = None, output_format: str | None = None, verbose: bool = False,
                    default_format: str = "json", **options: Any) -> RunConfig:
    """Flags win over the config file; the tolerance profile falls back to the environment last."""
    config = load_config(config_file)
    model = dict(config.get("model") or {})
    for key in MODEL_KEYS:
        if flags.get(key) is not None:
            model[key] = flags[key]
    tolerances = config.get("tolerances") or {}
    output = config.get("output") or {}
    return RunConfig(
        command=command,
        model=model,
        profile=profile or tolerances.get("profile"),
        overrides=dict(tolerances.get("overrides") or {}),
        guard=tolerances.get("guard"),
        dimension_cap=tolerances.get("dimension_cap"),
        out=out,
        output_format=output_format or output.get("format") or default_format,
        verbose=verbose or bool(output.get("verbose", False)),
        options=options,
    )


Handler = Callable[[RunConfig, ModelParams, GenericityTolerances], int]


def _build(config: RunConfig, params: ModelParams, gen: GenericityTolerances) -> int:
    w = config.options.get("w", 0)
    matrix = build_w0(params, gen) if w == 0 else build_w1(params, gen)
    logging.info(f"Built W{w} for N = {params.N} (dimension {matrix.shape[0]})")
    return EXIT_OK if emit_json(matrix_payload(matrix, params), config.out) else EXIT_BREACH


def _basis(config: RunConfig, params: ModelParams, gen: GenericityTolerances) -> int:
    kind = config.options.get("kind", "psi")
    as_bra = config.options.get("as_bra", True)
    if kind in TILDE_KINDS:
        basis = tilde_vectors(params, kind, as_bra, gen)
    else:
        basis = eigenbasis(params, kind, as_bra, gen)
    payload = {"kind": basis.kind, "as_bra": basis.as_bra, "params": params.to_dict(),
               "vectors": basis_payload(basis)}
    return EXIT_OK if emit_json(payload, config.out) else EXIT_BREACH


def _blocks(config: RunConfig, params: ModelParams, gen: GenericityTolerances) -> int:
    which = config.options.get("which", "direct")
    method = config.options.get("method", "recursive")
    if which == "dual":
        blocks = dual_entries(params, "substitution" if method == "recursive" else "basis_change", gen)
    elif method == "recursive":
        blocks = entries_recursive(params, gen)
    else:
        blocks = oracle_entries(params, gen)
    return EXIT_OK if emit_json(blocks_payload(blocks), config.out) else EXIT_BREACH


def _closed_form_rows(params: ModelParams, gen: GenericityTolerances) -> list[tuple[Any, ...]]:
    if params.N != 2:
        raise DimensionError(f"closed-form overlaps exist for N = 2 only, got N = {params.N}")
    rows = []
    for s in range(3):
        closed = n2_closed_form(params, s, gen)
        rows.append((s, closed.lam, closed.f11, closed.f12, closed.f21))
    return rows


def _overlaps(config: RunConfig, params: ModelParams, gen: GenericityTolerances) -> int:
    table = overlap_F(params, gen)
    # the artifact owns stdout when there is no --out
    to_stderr = not config.out
    console = Console(stderr=to_stderr)
    status = EXIT_OK
    if config.output_format == "csv":
        written = emit_csv(OVERLAP_HEADER, overlap_rows(table), config.out)
    else:
        written = emit_json(overlaps_payload(table), config.out)
    if not written:
        status = EXIT_BREACH

    report_payload = {}
    if config.options.get("closed_form"):
        rows = _closed_form_rows(params, gen)
        generate_value_table("Closed-form overlaps (N = 2)", ["s", "lambda~", "F1[1]", "F1[2]", "F2[1]"],
                             [(s, *(f"{complex(z):.6g}" for z in values)) for s, *values in rows], console)
        report_payload["closed_form"] = [
            {"s": s, "lambda_tilde": encode_complex(lam), "F1_1": encode_complex(f11),
             "F1_2": encode_complex(f12), "F2_1": encode_complex(f21)}
            for s, lam, f11, f12, f21 in rows
        ]

    check = config.options.get("check")
    if check:
        tol = config.tolerances()
        if check == "recurrence":
            result = check_recurrence(params, table, entries_recursive(params, gen))
            value, limit = result.max_relative, tol.recurrence
            report_payload["recurrence"] = {"max_residual": result.max_residual, "max_relative": value}
        elif check == "qdiff":
            result = check_qdiff(params, table, dual_entries(params, "substitution", gen))
            value, limit = result.max_relative, tol.qdiff
            report_payload["qdiff"] = {"max_residual": result.max_residual, "max_relative": value}
        else:
            norms = norm_coeffs(params, tol=gen)
            result = weights_and_orthogonality(params, table, norms)
            value, limit = result.deviation, tol.orthogonality
            report_payload["orthogonality"] = orthogonality_payload(result)
            diagonal = np.diag(result.gram) * norms.flat()
            generate_value_table("Gram diagonal (scaled by N_n[i])", ["position", "value"],
                                 [(i, f"{complex(z):.6g}") for i, z in enumerate(diagonal)], console)
        click.echo(f"{check}: {value:.3e} (tolerance {limit:.1e})", err=to_stderr)
        if value > limit:
            click.echo(f"{check} residual exceeds its tolerance.", err=True)
            status = EXIT_BREACH

    report_out = config.options.get("report_out")
    if report_payload and report_out and not save_json(report_payload, report_out):
        status = EXIT_BREACH
    return status


def _verify(config: RunConfig, params: ModelParams, gen: GenericityTolerances) -> int:
    tol = config.tolerances()
    findings = run_suites(params, config.options.get("checks") or None, tol, gen,
                          sweep=config.options.get("sweep", False), verbose=config.verbose)
    generate_rich_report(findings)
    click.echo(generate_final_report(findings, params))
    if config.out and not save_json(build_summary(findings, params, tolerances_dict(tol)), config.out):
        return EXIT_BREACH
    return EXIT_BREACH if breached(findings) else EXIT_OK


def _report(config: RunConfig, params: ModelParams, gen: GenericityTolerances) -> int:
    tol = config.tolerances()
    findings = run_suites(params, None, tol, gen, verbose=config.verbose)
    summary = build_summary(findings, params, tolerances_dict(tol))
    return EXIT_OK if emit_json(summary, config.out) else EXIT_BREACH


COMMANDS: dict[str, Handler] = {
    "build": _build,
    "basis": _basis,
    "blocks": _blocks,
    "overlaps": _overlaps,
    "verify": _verify,
    "report": _report,
}


def run(config: RunConfig) -> int:
    """Runs one command and returns its exit status: 0 ok, 1 tolerance breach, 3 invalid parameters."""
    if config.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    try:
        params = config.params()
        gen = config.genericity()
        require_valid(params, gen)
        return COMMANDS[config.command](config, params, gen)
    except (ParameterError, DimensionError, GenericityError) as e:
        click.echo(f"Invalid parameters: {e}", err=True)
        return EXIT_INVALID
    except ValueError as e:
        # unknown profile, check name or tolerance override
        click.echo(f"Invalid configuration: {e}", err=True)
        return EXIT_INVALID


def model_options(f: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--n", "n", type=int, default=None, help="Number of tensor factors (dimension 2^N)"),
        click.option("--alpha", type=COMPLEX, default=None, help="alpha, e.g. 1.3i or 0.2+1.3i"),
        click.option("--alpha-star", "alpha_star", type=COMPLEX, default=None, help="alpha*"),
        click.option("--phi", type=COMPLEX, default=None, help="phi (q = exp(phi))"),
        click.option("--theta", type=float, default=None, help="Real phase theta"),
        click.option("--config-file", default="config.yml", help="Path to config file (YAML or JSON)"),
        click.option("--profile", type=click.Choice(["default", "strict", "loose"]), default=None,
                     help="Tolerance profile"),
        click.option("--out", default=None, help="Artifact path; stdout when omitted"),
        click.option("--verbose", is_flag=True, help="Debug logging and progress bars"),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _run_command(ctx: click.Context, command: str, flags: dict[str, Any], output_format: str | None = None,
                 default_format: str = "json", **options: Any) -> None:
    model = {"N": flags["n"], "alpha": flags["alpha"], "alpha_star": flags["alpha_star"], "phi": flags["phi"],
             "theta": flags["theta"]}
    config = make_run_config(command, flags["config_file"], model, flags["profile"], flags["out"], output_format,
                             flags["verbose"], default_format, **options)
    ctx.exit(run(config))


@click.group()
def cli() -> None:
    """Tridiagonal pair toolkit: W0, W1 on (C^2)^N, eigenbases, block entries and overlaps."""
    pass


@cli.command(name="configure")
def configure() -> None:
    """Generate a configuration file interactively."""
    N = click.prompt("Number of tensor factors N", default=2, type=int)
    alpha = click.prompt("alpha", default="1.3i", type=COMPLEX)
    alpha_star = click.prompt("alpha*", default="2.1i", type=COMPLEX)
    phi = click.prompt("phi", default="0.17i", type=COMPLEX)
    theta = click.prompt("theta", default=0.4, type=float)
    profile = click.prompt("Tolerance profile", default="default",
                           type=click.Choice(["default", "strict", "loose"]))
    output_format = click.prompt("Overlap table format", default="csv", type=click.Choice(["csv", "json"]))
    verbose = click.confirm("Enable verbose mode?", default=False)

    config_data = {
        "model": ModelParams(N=N, alpha=alpha, alpha_star=alpha_star, phi=phi, theta=theta).to_dict(),
        "tolerances": {"profile": profile, "guard": GenericityTolerances().guard,
                       "dimension_cap": GenericityTolerances().dimension_cap, "overrides": {}},
        "output": {"format": output_format, "verbose": verbose},
    }
    filename = click.prompt("Enter the config file name to save", default="config.yml")
    try:
        with open(filename, "w", encoding="utf-8") as f:
            yaml.safe_dump(config_data, f, sort_keys=False)
        click.echo(f"Configuration saved to {filename}")
    except Exception as e:
        click.echo(f"Error saving configuration: {e}", err=True)


@cli.command(name="build")
@click.option("--w", "w", type=click.IntRange(0, 1), default=0, help="Which operator: 0 for W0, 1 for W1")
@model_options
@click.pass_context
def build(ctx: click.Context, w: int, **flags: Any) -> None:
    """Construct W0 or W1 as a dense 2^N x 2^N matrix."""
    _run_command(ctx, "build", flags, w=w)


@cli.command(name="basis")
@click.option("--kind", type=click.Choice(list(KINDS)), default="psi", help="Eigenbasis family")
@click.option("--ket", is_flag=True, help="Tilde kinds: return kets instead of the paired bras")
@model_options
@click.pass_context
def basis(ctx: click.Context, kind: str, ket: bool, **flags: Any) -> None:
    """Closed-form eigenvectors in canonical (level, rank) order."""
    _run_command(ctx, "basis", flags, kind=kind, as_bra=not ket)


@cli.command(name="blocks")
@click.option("--which", type=click.Choice(["direct", "dual"]), default="direct",
              help="W1 in the psi basis (direct) or W0 in the phi basis (dual)")
@click.option("--method", type=click.Choice(["recursive", "oracle"]), default="recursive",
              help="Recursive closed forms or basis change")
@model_options
@click.pass_context
def blocks(ctx: click.Context, which: str, method: str, **flags: Any) -> None:
    """Block-tridiagonal entries A_n, B_n, C_n."""
    _run_command(ctx, "blocks", flags, which=which, method=method)


@cli.command(name="overlaps")
@click.option("--closed-form", is_flag=True, help="Also tabulate the N = 2 closed forms")
@click.option("--check", type=click.Choice(["recurrence", "qdiff", "orthogonality"]), default=None,
              help="Residual check to run on the table")
@click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default=None,
              help="Overlap table format")
@click.option("--report-out", default=None, help="Path for the JSON check / closed-form report")
@model_options
@click.pass_context
def overlaps(ctx: click.Context, closed_form: bool, check: str | None, output_format: str | None,
             report_out: str | None, **flags: Any) -> None:
    """Overlap functions F_n[i](k, s), with optional checks."""
    _run_command(ctx, "overlaps", flags, output_format, "csv", closed_form=closed_form, check=check,
                 report_out=report_out)


@cli.command(name="verify")
@click.option("--check", "checks", type=click.Choice(list(CHECKS)), multiple=True,
              help="Check to run (repeatable); all checks by default")
@click.option("--sweep", is_flag=True, help="Run size-dependent checks for every N = 1..N")
@model_options
@click.pass_context
def verify(ctx: click.Context, checks: tuple[str, ...], sweep: bool, **flags: Any) -> None:
    """Run residual suites; exits 1 when any check breaches its tolerance."""
    _run_command(ctx, "verify", flags, checks=list(checks), sweep=sweep)


@cli.command(name="report")
@model_options
@click.pass_context
def report(ctx: click.Context, **flags: Any) -> None:
    """Run every check and emit one JSON summary."""
    _run_command(ctx, "report", flags)


if __name__ == '__main__':
    cli()
