"""Experiment orchestration: Monte Carlo replication, aggregation, CSV
and SVG emission, and the theory report.

Runs are parallelized across replications only (never within a run) and
collected by run index, so outputs are byte-identical for identical
(config, seed) regardless of worker count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, estimator
from .config import ExperimentConfig, config_hash, config_to_toml
from .graph import laplacian
from .metrics import RunMetrics
from .observation import check_excitation
from .svgplot import Series, emit_plot
from . import theory

logger = logging.getLogger(__name__)

WORKERS_ENV = "SC_DESTIM_WORKERS"


def resolve_workers(requested: int | None, n_runs: int) -> int:
    if requested is None:
        env = os.environ.get(WORKERS_ENV)
        requested = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(requested, n_runs))


def _run_one(args) -> RunMetrics:
    cfg, run_index, validate = args
    return estimator.run(
        cfg.estimator_config(),
        horizon=cfg.horizon,
        seed=cfg.seed,
        run_index=run_index,
        checkpoint_ratio=cfg.checkpoint_ratio,
        validate=validate,
    )


@dataclass
class ExperimentResult:
    """Per-run metrics plus their arithmetic means per checkpoint."""

    config: ExperimentConfig
    runs: list[RunMetrics]
    checkpoints: np.ndarray
    mse_mean: np.ndarray
    sqerr_mean: np.ndarray
    bits_mean: np.ndarray
    local_rates_mean: np.ndarray
    global_rate_mean: np.ndarray

    @property
    def directed_edges(self):
        return self.runs[0].directed_edges


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | None = None,
    workers: int | None = None,
    validate: bool = True,
) -> ExperimentResult:
    """Run n_runs independent replications and aggregate by arithmetic mean.

    Replication r draws from streams keyed by (seed, run_index=r); the
    aggregate is a plain per-checkpoint mean of MSE, bits and rates.
    """
    if validate:
        failures = estimator.validate_config(config.estimator_config())
        if failures:
            raise estimator.ValidationError("; ".join(failures))
    else:
        logger.warning("validators overridden for this experiment")
    jobs = [(config, r, False) for r in range(config.n_runs)]
    n_workers = resolve_workers(workers, config.n_runs)
    if n_workers == 1:
        runs = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            runs = list(pool.map(_run_one, jobs, chunksize=1))

    result = ExperimentResult(
        config=config,
        runs=runs,
        checkpoints=runs[0].checkpoints,
        mse_mean=np.mean([r.mse for r in runs], axis=0),
        sqerr_mean=np.mean([r.per_sensor_sqerr for r in runs], axis=0),
        bits_mean=np.mean([r.bits for r in runs], axis=0),
        local_rates_mean=np.mean([r.local_rates for r in runs], axis=0),
        global_rate_mean=np.mean([r.global_rate for r in runs], axis=0),
    )
    if out_dir is not None:
        write_experiment_outputs(result, out_dir)
    return result


def sweep_experiment(
    config: ExperimentConfig,
    nu_values: Sequence[float],
    out_dir: str | None = None,
    workers: int | None = None,
) -> dict[float, ExperimentResult]:
    """Run the trade-off sweep: per nu, gamma = 1 - nu on every edge.

    Replication r reuses the same streams across nu values (common
    random numbers), so the comparison is paired.
    """
    results: dict[float, ExperimentResult] = {}
    for nu in nu_values:
        if not 0.0 <= nu < 0.5:
            raise ValueError(f"sweep nu must lie in [0, 1/2), got {nu}")
    for nu in nu_values:
        cfg_nu = config.with_uniform_nu(nu)
        sub = None if out_dir is None else str(Path(out_dir) / f"nu_{_nu_tag(nu)}")
        results[nu] = run_experiment(cfg_nu, out_dir=sub, workers=workers)
    if out_dir is not None:
        write_sweep_outputs(results, out_dir)
    return results


def fit_loglog_slope(ks, values, window: tuple[float, float]) -> float:
    """Least-squares slope of ln(value) against ln(k) inside the window."""
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (ks >= lo) & (ks <= hi) & (ks > 0)
    if np.any(values[mask] <= 0):
        raise ValueError("log-log fit needs positive values in the window")
    if mask.sum() < 5:
        raise ValueError(f"log-log fit needs at least 5 checkpoints, got {int(mask.sum())}")
    lx = np.log(ks[mask])
    ly = np.log(values[mask])
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())


def _fmt17(x) -> str:
    return format(float(x), ".17g")


def _nu_tag(nu: float) -> str:
    return f"{nu:.4f}".replace(".", "p")


def _csv_header(result: ExperimentResult, run_index: int | None) -> list[str]:
    cfg = result.config
    lines = [
        f"# seed = {cfg.seed}",
        f"# config_hash = {config_hash(cfg)}",
        f"# version = {__version__}",
    ]
    if run_index is not None:
        lines.append(f"# run_index = {run_index}")
    return lines


def _metric_rows(result: ExperimentResult, run: RunMetrics | None):
    """Column layout shared by per-run and aggregate CSVs."""
    n = result.config.topology.n_sensors
    cols = (
        ["k", "mse_mean"]
        + [f"mse_sensor_{i}" for i in range(1, n + 1)]
        + ["bits_total", "B_global"]
        + [f"B_edge_{i}_to_{j}" for i, j in result.directed_edges]
    )
    if run is None:
        mse, sqerr = result.mse_mean, result.sqerr_mean
        bits, grate, lrates = (
            result.bits_mean,
            result.global_rate_mean,
            result.local_rates_mean,
        )
    else:
        mse, sqerr = run.mse, run.per_sensor_sqerr
        bits, grate, lrates = run.bits, run.global_rate, run.local_rates
    rows = []
    for c, k in enumerate(result.checkpoints):
        rows.append(
            [str(int(k)), _fmt17(mse[c])]
            + [_fmt17(v) for v in sqerr[c]]
            + [_fmt17(bits[c].sum()), _fmt17(grate[c])]
            + [_fmt17(v) for v in lrates[c]]
        )
    return cols, rows


def _write_csv(path: Path, header_lines: list[str], cols: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_experiment_outputs(result: ExperimentResult, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r, run in enumerate(result.runs):
        cols, rows = _metric_rows(result, run)
        _write_csv(out / f"run_{r}.csv", _csv_header(result, r), cols, rows)
    cols, rows = _metric_rows(result, None)
    _write_csv(out / "aggregate.csv", _csv_header(result, None), cols, rows)
    (out / "config.toml").write_text(config_to_toml(result.config), encoding="utf-8")

    mask = result.checkpoints > 0
    emit_plot(
        [Series("mean squared error", result.checkpoints[mask], result.mse_mean[mask])],
        str(out / "plot_mse.svg"),
        title="Network mean squared estimation error",
        xlabel="k",
        ylabel="(1/N) sum of squared errors",
        loglog=True,
    )
    emit_plot(
        [Series("global rate", result.checkpoints[mask], np.maximum(result.global_rate_mean[mask], 1e-12))],
        str(out / "plot_rates.svg"),
        title="Global average data rate",
        xlabel="k",
        ylabel="B(k)",
        loglog=True,
    )
    (out / "report.txt").write_text(experiment_report(result), encoding="utf-8")


def write_sweep_outputs(results: dict[float, ExperimentResult], out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    nus = sorted(results)
    base = results[nus[0]]
    cols = (
        ["k"]
        + [f"mse_nu_{_nu_tag(nu)}" for nu in nus]
        + [f"B_nu_{_nu_tag(nu)}" for nu in nus]
    )
    rows = []
    for c, k in enumerate(base.checkpoints):
        rows.append(
            [str(int(k))]
            + [_fmt17(results[nu].mse_mean[c]) for nu in nus]
            + [_fmt17(results[nu].global_rate_mean[c]) for nu in nus]
        )
    header = [
        f"# seed = {base.config.seed}",
        f"# version = {__version__}",
        f"# nus = {','.join(f'{nu:.6f}' for nu in nus)}",
    ]
    _write_csv(out / "comparison.csv", header, cols, rows)

    mask = base.checkpoints > 0
    emit_plot(
        [
            Series(f"nu = {nu:.3f}", base.checkpoints[mask], results[nu].mse_mean[mask])
            for nu in nus
        ],
        str(out / "plot_sweep_mse.svg"),
        title="Convergence under different nu",
        xlabel="k",
        ylabel="mean squared error",
        loglog=True,
    )
    emit_plot(
        [
            Series(
                f"nu = {nu:.3f}",
                base.checkpoints[mask],
                np.maximum(results[nu].global_rate_mean[mask], 1e-12),
            )
            for nu in nus
        ],
        str(out / "plot_sweep_rates.svg"),
        title="Average data rates under different nu",
        xlabel="k",
        ylabel="B(k)",
        loglog=True,
    )


def theory_report(config: ExperimentConfig) -> str:
    """Human-readable validator results and closed-form predictions."""
    est_cfg = config.estimator_config()
    lap = laplacian(config.topology)
    exc = check_excitation(config.model, config.excitation_window)
    steps = theory.validate_stepsizes(config.channels, config.beta1, config.beta_gamma)
    lines = [
        "validators",
        f"  connectivity: lambda2 = {lap.lambda2:.6g} "
        f"({'connected' if lap.lambda2 > 1e-10 else 'NOT connected'})",
        f"  excitation:   delta = {exc.delta:.6g} over window p = {exc.p} "
        f"({'passed' if exc.passed else 'FAILED'})",
        f"  step sizes:   {'passed' if steps.passed else 'FAILED'}",
    ]
    for v in steps.violations:
        lines.append(f"    - {v}")
    if not steps.passed or not exc.passed or lap.lambda2 <= 1e-10:
        return "\n".join(lines) + "\n"

    theta_l1 = float(np.abs(config.model.theta_vec()).sum())
    h = theory.compute_h(config.channels)
    eprime = theory.eprime_edges(config.channels)
    a = theory.compute_a(
        delta=exc.delta,
        lambda2=lap.lambda2,
        beta1=config.beta1,
        channels=config.channels,
        theta_l1=theta_l1,
        n_sensors=config.topology.n_sensors,
        dim=config.model.dim,
        h_bar=config.model.h_bound(),
    )
    literal = theory.predict_rate(h, a)
    lines += [
        "",
        "error-rate prediction",
        f"  h = {h:.6g}   boundary edges (nu + gamma = 1): "
        f"{list(eprime) if eprime else 'none'}",
        f"  certified exponent a = {a:.6g}",
        f"  certified class: {literal.rate_class} "
        f"(MSE log-log slope {literal.error_slope_loglog:.4g})",
    ]
    nus = [config.channels[e].nu for e in sorted(config.channels)]
    gammas = [config.channels[e].gamma for e in sorted(config.channels)]
    if max(nus) < 0.5 and all(
        abs(g - (1 - nu)) <= 1e-12 for g, nu in zip(gammas, nus)
    ):
        ach = theory.achievable_rate(nus)
        lines += [
            f"  schedule family gamma = 1 - nu: achievable class {ach.rate_class} "
            f"with h = {ach.h:.6g} (MSE log-log slope {ach.error_slope_loglog:.4g}) "
            f"for large enough alpha1, beta1",
        ]
    lines += ["", "data-rate bounds at the horizon"]
    k_ref = max(config.horizon, 1)
    for edge in sorted(config.channels):
        p = config.channels[edge]
        raw = theory.predict_local_rate_bound(p.nu, p.b, theta_l1, h, k_ref)
        a_ok = a > h - 0.5
        note = "" if a_ok or p.nu == 0 else "  [constant unreliable: a <= h - 1/2, order only]"
        lines.append(
            f"  edge {edge}: B bound at k = {k_ref}: {min(raw, 1.0):.6g} "
            f"(raw {raw:.6g}, order k^-{p.nu:g}){note}"
        )
    return "\n".join(lines) + "\n"


def experiment_report(result: ExperimentResult) -> str:
    cfg = result.config
    lines = [
        f"sc-destim {__version__}",
        f"seed = {cfg.seed}   runs = {cfg.n_runs}   horizon = {cfg.horizon}",
        f"config_hash = {config_hash(cfg)}",
        "",
        theory_report(cfg),
    ]
    ks = result.checkpoints
    if cfg.horizon >= 1000:
        window = (max(1000.0, cfg.horizon / 100), float(cfg.horizon))
        try:
            mse_slope = fit_loglog_slope(ks, result.mse_mean, window)
            lines.append(
                f"fitted MSE log-log slope over [{window[0]:g}, {window[1]:g}]: {mse_slope:+.4f}"
            )
        except ValueError:
            pass
        try:
            rate_slope = fit_loglog_slope(ks, result.global_rate_mean, window)
            lines.append(
                f"fitted B(k) log-log slope over [{window[0]:g}, {window[1]:g}]: {rate_slope:+.4f}"
            )
        except ValueError:
            pass
    if len(ks) and ks[-1] >= 1:
        lines.append(f"final aggregate MSE at k = {int(ks[-1])}: {result.mse_mean[-1]:.6g}")
        lines.append(f"final global rate B(k): {result.global_rate_mean[-1]:.6g}")
    return "\n".join(lines) + "\n"
