"""Experiment orchestration, slope fitting, CSV/SVG emission."""

from pathlib import Path

import numpy as np
import pytest

from sc_destim.config import config_from_dict
from sc_destim.harness import (
    fit_loglog_slope,
    run_experiment,
    sweep_experiment,
    theory_report,
)
from sc_destim.metrics import checkpoint_ticks
from sc_destim.svgplot import Series, emit_plot
from test_config import BASIC, deep


def small_config(**overrides):
    raw = deep(BASIC)
    raw["experiment"].update({"horizon": 400, "n_runs": 2, "seed": 11, **overrides})
    return config_from_dict(raw)


def test_checkpoint_ticks_shape():
    ks = checkpoint_ticks(100_000)
    assert ks[0] == 0 and ks[-1] == 100_000
    assert 100 in ks and 1000 in ks and 10_000 in ks
    arr = np.array(ks)
    assert np.all(np.diff(arr) > 0)
    assert checkpoint_ticks(0) == [0]


def test_fit_slope_exact_power_law():
    ks = np.array(checkpoint_ticks(100_000)[1:])
    assert fit_loglog_slope(ks, 3.7 / ks, (10, 1e5)) == pytest.approx(-1.0, abs=1e-9)
    assert fit_loglog_slope(ks, np.full(len(ks), 2.5), (10, 1e5)) == pytest.approx(
        0.0, abs=1e-12
    )


def test_fit_slope_rejections():
    ks = np.array([1, 2, 3, 4, 5, 6])
    with pytest.raises(ValueError, match="at least 5"):
        fit_loglog_slope(ks[:4], np.ones(4), (1, 10))
    with pytest.raises(ValueError, match="positive"):
        fit_loglog_slope(ks, np.array([1, 1, 0, 1, 1, 1.0]), (1, 10))


def test_aggregate_is_mean_of_runs(tmp_path):
    result = run_experiment(small_config(), out_dir=str(tmp_path / "out"))
    stacked = np.stack([r.mse for r in result.runs])
    assert np.allclose(result.mse_mean, stacked.mean(axis=0), rtol=0, atol=0)
    out = tmp_path / "out"
    assert (out / "aggregate.csv").exists()
    assert (out / "run_0.csv").exists() and (out / "run_1.csv").exists()
    assert (out / "report.txt").exists()
    assert (out / "plot_mse.svg").exists()
    assert (out / "config.toml").exists()


def test_outputs_are_byte_identical_across_invocations(tmp_path):
    cfg = small_config()
    run_experiment(cfg, out_dir=str(tmp_path / "a"))
    run_experiment(cfg, out_dir=str(tmp_path / "b"))
    for name in ["aggregate.csv", "run_0.csv", "run_1.csv", "plot_mse.svg", "config.toml"]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_horizon_zero_experiment():
    result = run_experiment(small_config(horizon=0, n_runs=1))
    assert list(result.checkpoints) == [0]
    assert result.mse_mean[0] == pytest.approx(2.0)
    assert result.global_rate_mean[0] == 0.0


def test_single_nu_sweep_degenerates_to_run(tmp_path):
    cfg = small_config()
    swept = sweep_experiment(cfg, [0.25], out_dir=str(tmp_path / "s"))
    direct = run_experiment(cfg.with_uniform_nu(0.25))
    assert np.array_equal(swept[0.25].mse_mean, direct.mse_mean)
    assert (tmp_path / "s" / "comparison.csv").exists()
    assert (tmp_path / "s" / "plot_sweep_mse.svg").exists()
    assert (tmp_path / "s" / "nu_0p2500" / "aggregate.csv").exists()


def test_sweep_rejects_bad_nu():
    with pytest.raises(ValueError, match="nu"):
        sweep_experiment(small_config(), [0.5])


def test_workers_do_not_change_results(tmp_path):
    cfg = small_config(n_runs=3)
    serial = run_experiment(cfg, workers=1)
    parallel = run_experiment(cfg, workers=3)
    assert np.array_equal(serial.mse_mean, parallel.mse_mean)
    for a, b in zip(serial.runs, parallel.runs):
        assert np.array_equal(a.per_sensor_sqerr, b.per_sensor_sqerr)
        assert np.array_equal(a.bits, b.bits)


def test_theory_report_mentions_key_numbers():
    text = theory_report(small_config())
    assert "lambda2" in text and "delta" in text
    assert "h = 0.875" in text
    assert "achievable class sqrtlog_over" in text


def test_svg_single_series_two_points(tmp_path):
    path = tmp_path / "p.svg"
    emit_plot([Series("one", [1.0, 2.0], [3.0, 4.0])], str(path), title="t")
    text = path.read_text(encoding="utf-8")
    assert text.count("<polyline") == 1
    assert text.startswith("<svg")


def test_svg_deterministic_bytes(tmp_path):
    s = [Series("a", [1, 10, 100], [3.0, 2.0, 1.0]), Series("b", [1, 10, 100], [1, 4, 9])]
    emit_plot(s, str(tmp_path / "x.svg"), loglog=True)
    emit_plot(s, str(tmp_path / "y.svg"), loglog=True)
    assert (tmp_path / "x.svg").read_bytes() == (tmp_path / "y.svg").read_bytes()


def test_svg_rejections(tmp_path):
    with pytest.raises(ValueError, match="no series"):
        emit_plot([], str(tmp_path / "e.svg"))
    with pytest.raises(ValueError, match="empty"):
        emit_plot([Series("z", [], [])], str(tmp_path / "e.svg"))
    with pytest.raises(ValueError, match="nonpositive"):
        emit_plot([Series("z", [1, 2], [0.0, 1.0])], str(tmp_path / "e.svg"), loglog=True)
