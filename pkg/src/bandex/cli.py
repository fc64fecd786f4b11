"""Command-line interface.

Subcommands: ``synth`` (generate and save the truth and its measurements),
``run`` (execute the configured experiment), ``eigen`` (per-region spectra
and contraction-constant table), ``oracle`` (direct solves plus comparison
report) and ``report`` (summarize a metrics CSV).

Exit codes: 0 success, 2 configuration error, 3 numerical divergence,
4 I/O error.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import io as sig_io
from .config import ExperimentConfig, parse_config
from .engine import least_squares_oracle, run_extrapolation, tikhonov_oracle
from .errors import (
    BandexError,
    ConfigError,
    DivergenceError,
    FormatError,
    ParameterError,
    SynthesisError,
    UndefinedMetricError,
)
from .grid import MeasuredSignal, Signal, validate_weighted_regions
from .spectral import eigen_spectrum, lipschitz_regularized, lipschitz_unregularized, suggest_weights, tau_upper_bound
from .synthesis import add_out_of_band_noise, nmse, random_bandlimited

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ParameterError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except DivergenceError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DIVERGED)
        except (FormatError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)
        except (SynthesisError, UndefinedMetricError, BandexError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="Path to the JSON experiment configuration.")
@click.option("--seed", type=int, default=None, help="Override the synthesis seed.")
@click.option("--quiet", is_flag=True, default=False, help="Suppress progress output.")
@click.pass_context
def main(ctx, config_path, seed, quiet):
    """Bandlimited extrapolation experiments on N-dimensional grids."""
    ctx.obj = {"config_path": config_path, "seed": seed, "quiet": quiet}


def _load_config(ctx) -> ExperimentConfig:
    path = ctx.obj["config_path"]
    if path is None:
        raise ConfigError([("", "--config is required for this command")])
    text = Path(path).read_text(encoding="utf-8")
    config = parse_config(text)
    if ctx.obj["seed"] is not None:
        if ctx.obj["seed"] < 0:
            raise ConfigError([("", "--seed must be a nonnegative integer")])
        config = dataclasses.replace(
            config,
            synthesis=dataclasses.replace(config.synthesis, seed=ctx.obj["seed"]),
        )
    return config


def _echo(ctx, message: str) -> None:
    if not ctx.obj["quiet"]:
        click.echo(message)


def _synthesize_truth(config: ExperimentConfig):
    truth = random_bandlimited(config.synthesis)
    if config.noise is not None:
        noise_seed = config.noise.seed
        if noise_seed is None:
            noise_seed = config.synthesis.seed + 1
        truth = add_out_of_band_noise(
            truth,
            config.support,
            config.noise.target_snr_db,
            noise_seed,
            bumps=config.noise.bumps,
            width_range=config.noise.width_range,
            mode=config.noise.mode,
        )
    return truth


def _resolve_weights(config: ExperimentConfig):
    m = len(config.regions)
    if config.weights.mode == "uniform":
        weights = [1.0 / m] * m
    elif config.weights.mode == "explicit":
        weights = list(config.weights.values)
    else:
        order = config.weights.order
        spectra = [
            eigen_spectrum(region, config.support, order + 1,
                           region_index=i, compute_vectors=False)
            for i, region in enumerate(config.regions)
        ]
        weights = suggest_weights(spectra, order, config.weights.mu)
    return validate_weighted_regions(config.regions, weights)


def _prepare(ctx):
    config = _load_config(ctx)
    truth = _synthesize_truth(config)
    region_set = _resolve_weights(config)
    meas = MeasuredSignal.from_signal(region_set, truth)
    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    return config, truth, meas, out_dir


@main.command()
@click.pass_context
@_guard
def synth(ctx):
    """Generate the truth signal and its measurements, and save both."""
    config, truth, meas, out_dir = _prepare(ctx)
    sig_io.write_signal(truth, out_dir / "h.ndsig")
    measured = Signal(truth.shape, meas.samples)
    sig_io.write_signal(measured, out_dir / "measured.ndsig")
    if config.output.save_pgm and config.grid.ndim == 2:
        sig_io.export_pgm(truth, out_dir / "h.pgm")
        sig_io.export_pgm(measured, out_dir / "measured.pgm")
    _echo(ctx, f"wrote {out_dir / 'h.ndsig'} and {out_dir / 'measured.ndsig'}")


@main.command()
@click.pass_context
@_guard
def run(ctx):
    """Run the configured extrapolation and save the result and metrics."""
    config, truth, meas, out_dir = _prepare(ctx)
    sig_io.write_signal(truth, out_dir / "h.ndsig")
    sig_io.write_signal(Signal(truth.shape, meas.samples), out_dir / "measured.ndsig")
    try:
        report = run_extrapolation(meas, config.support, config.run, truth=truth)
    except DivergenceError as exc:
        if exc.report is not None and exc.report.records:
            sig_io.write_signal(exc.report.final, out_dir / "f_e.ndsig")
            sig_io.write_metrics_csv(exc.report, out_dir / "metrics.csv")
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DIVERGED)
    sig_io.write_signal(report.final, out_dir / "f_e.ndsig")
    sig_io.write_metrics_csv(report, out_dir / "metrics.csv")
    if config.output.save_pgm and config.grid.ndim == 2:
        sig_io.export_pgm(truth, out_dir / "h.pgm")
        sig_io.export_pgm(report.final, out_dir / "f_e.pgm")
    final_nmse = report.final_nmse_db
    _echo(ctx, f"stopped after {report.records[-1].iteration} iterations "
               f"({report.stop_reason}), final NMSE {final_nmse} dB")


@main.command()
@click.option("--count", type=int, default=None,
              help="Eigenpairs per region (default: min(8, subspace dimension)).")
@click.option("--tol", type=float, default=1e-9, show_default=True,
              help="Residual tolerance of the eigensolver.")
@click.pass_context
@_guard
def eigen(ctx, count, tol):
    """Per-region concentration spectra and contraction-constant table."""
    config = _load_config(ctx)
    out_dir = Path(config.output.directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    dim = config.support.bin_count
    if count is None:
        count = min(8, dim)
    params = config.run.params
    spectra_lines = ["region,n,eigenvalue,residual"]
    lipschitz_lines = [
        "region,lambda_0,lambda_N,lipschitz_unregularized,tau_upper_bound,lipschitz_regularized"
    ]
    for i, region in enumerate(config.regions):
        spectrum = eigen_spectrum(region, config.support, count, tol,
                                  region_index=i, compute_vectors=False)
        for n, (lam, res) in enumerate(zip(spectrum.eigenvalues, spectrum.residuals)):
            spectra_lines.append(f"{i},{n},{lam:.12e},{res:.12e}")
        order = count - 1
        unreg = lipschitz_unregularized(spectrum, order)
        mu = params.mu if params is not None else 0.0
        bound = tau_upper_bound(spectrum, order, mu)
        reg = ""
        if params is not None and params.tau <= bound:
            reg = f"{lipschitz_regularized(spectrum, order, params):.12e}"
        lipschitz_lines.append(
            f"{i},{spectrum.eigenvalues[0]:.12e},{spectrum.eigenvalues[order]:.12e},"
            f"{unreg:.12e},{bound:.12e},{reg}"
        )
    (out_dir / "spectra.csv").write_text("\n".join(spectra_lines) + "\n", encoding="ascii")
    (out_dir / "lipschitz.csv").write_text("\n".join(lipschitz_lines) + "\n", encoding="ascii")
    _echo(ctx, f"wrote {out_dir / 'spectra.csv'} and {out_dir / 'lipschitz.csv'}")


@main.command()
@click.pass_context
@_guard
def oracle(ctx):
    """Direct least-squares/Tikhonov solves plus a comparison report."""
    config, truth, meas, out_dir = _prepare(ctx)
    ls = least_squares_oracle(meas, config.support)
    sig_io.write_signal(ls.signal, out_dir / "oracle_ls.ndsig")
    comparison = {
        "condition_number": ls.condition_number,
        "ill_posed": ls.ill_posed,
        "nmse_ls_vs_truth_db": nmse(truth, ls.signal),
    }
    try:
        report = run_extrapolation(meas, config.support, config.run, truth=truth)
        rel = _relative_difference(report.final.values, ls.signal.values)
        comparison["nmse_iteration_vs_truth_db"] = report.final_nmse_db
        comparison["rel_diff_iteration_vs_ls"] = rel
    except DivergenceError:
        comparison["nmse_iteration_vs_truth_db"] = None
        comparison["rel_diff_iteration_vs_ls"] = None
        comparison["iteration_diverged"] = True
    if config.run.params is not None:
        tik = tikhonov_oracle(meas, config.support, config.run.params.mu)
        sig_io.write_signal(tik, out_dir / "oracle_tikhonov.ndsig")
        comparison["nmse_tikhonov_vs_truth_db"] = nmse(truth, tik)
    (out_dir / "comparison.json").write_text(
        json.dumps(comparison, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )
    _echo(ctx, f"wrote {out_dir / 'comparison.json'} "
               f"(condition number {ls.condition_number:.6g})")


def _relative_difference(a, b):
    denom = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / denom


@main.command()
@click.argument("metrics_csv", type=click.Path(path_type=Path, exists=False))
@click.option("--thresholds", default="-10,-20,-30,-40", show_default=True,
              help="Comma-separated NMSE thresholds (dB) to report first-hit iterations for.")
@click.pass_context
@_guard
def report(ctx, metrics_csv, thresholds):
    """Summarize a metrics CSV: final NMSE and iterations to thresholds."""
    rows = sig_io.read_metrics_csv(metrics_csv)
    try:
        levels = [float(t) for t in thresholds.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError([("--thresholds", str(exc))]) from exc
    final_nmse = None
    for row in reversed(rows):
        if row["nmse_db"] is not None:
            final_nmse = row["nmse_db"]
            break
    click.echo(f"records: {len(rows)} (iterations {rows[0]['iteration']}..{rows[-1]['iteration']})")
    click.echo(f"final NMSE: {'n/a' if final_nmse is None else f'{final_nmse:.6g} dB'}")
    for level in levels:
        hit = next(
            (row["iteration"] for row in rows
             if row["nmse_db"] is not None and row["nmse_db"] <= level),
            None,
        )
        click.echo(f"first iteration at or below {level:g} dB: "
                   f"{'never' if hit is None else hit}")


if __name__ == "__main__":
    main()
