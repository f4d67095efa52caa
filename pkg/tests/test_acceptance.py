"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The heavy fixtures are shared: the 8-sensor benchmark experiment
(20 runs at horizon 1e5) backs criteria 1, 2 and 4; the nu sweep
(5 values x 5 runs) backs criteria 3 and 5.  Everything is pinned to
the preset seed, so reruns are bit-identical.
"""

import math

import numpy as np
import pytest

from sc_destim import theory
from sc_destim.consensus import ConsensusConfig, run_consensus_batch
from sc_destim.estimator import validate_config
from sc_destim.graph import build_topology
from sc_destim.harness import fit_loglog_slope, run_experiment, sweep_experiment
from sc_destim.presets import DEFAULT_SEED, SWEEP_NUS, paper_sec7
from sc_destim.quantizer import (
    ChannelParams,
    channel_step_batch,
    fusion_g,
    trigger_probability,
)
from sc_destim.rng import SeedPlan

HORIZON = 100_000

# Regression constants from the first pinned-seed evaluation of this suite.
SEC7_SCALED_RATE_MAX = 4.9824352312396645  # max over edges, k >= 10 of B_ij * k^(1/4)
CONSENSUS_SEED0_FINAL_D = 0.0025525243928499197


def _report(criterion: str, ok: bool, detail: str) -> bool:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


@pytest.fixture(scope="module")
def sec7_result():
    cfg = paper_sec7(horizon=HORIZON, n_runs=20, seed=DEFAULT_SEED)
    return run_experiment(cfg)


@pytest.fixture(scope="module")
def sweep_results():
    cfg = paper_sec7(horizon=HORIZON, n_runs=5, seed=DEFAULT_SEED)
    return sweep_experiment(cfg, list(SWEEP_NUS))


def test_criterion_1_error_decay(sec7_result):
    ks = list(sec7_result.checkpoints)
    mse = sec7_result.mse_mean
    ratio = mse[ks.index(HORIZON)] / mse[ks.index(100)]
    ok = _report(
        "1 (decay)",
        ratio < 0.01,
        f"MSE(1e5)/MSE(1e2) = {ratio:.4g} (< 0.01 required)",
    )
    assert ok


def test_criterion_1_monotone_trend(sec7_result):
    tail = sec7_result.mse_mean[sec7_result.checkpoints >= 1000]
    ratios = tail[1:] / tail[:-1]
    violations = int(np.sum(ratios > 1.10))
    ok = _report(
        "1 (trend)",
        violations == 0,
        f"checkpoint-to-checkpoint increases above 10% after k=1e3: {violations} "
        f"(max ratio {ratios.max():.3f})",
    )
    assert ok


def test_criterion_2_rate_slope(sec7_result):
    cfg = sec7_result.config
    h = theory.compute_h(cfg.channels)
    predicted = theory.achievable_rate([p.nu for p in cfg.channels.values()])
    slope = fit_loglog_slope(sec7_result.checkpoints, sec7_result.mse_mean, (1e3, HORIZON))
    ok = _report(
        "2",
        h == 0.875
        and predicted.rate_class == theory.RATE_SQRTLOG
        and predicted.error_slope_loglog == -0.75
        and -1.0 <= slope <= -0.5,
        f"h = {h}, predicted class {predicted.rate_class} "
        f"(slope {predicted.error_slope_loglog}); fitted MSE slope {slope:+.4f} "
        f"in [-1.00, -0.50]",
    )
    assert ok


@pytest.mark.parametrize("nu", SWEEP_NUS, ids=lambda v: f"nu={v:.4f}")
def test_criterion_3_data_rate_decay(sweep_results, nu):
    result = sweep_results[nu]
    ks = result.checkpoints
    rates = result.global_rate_mean
    if nu == 0.0:
        exact = bool(np.all(rates[ks >= 1] == 1.0))
        slope = fit_loglog_slope(ks, np.maximum(rates, 1e-300), (1e3, HORIZON))
        ok = _report(
            "3",
            exact and abs(slope) <= 0.05,
            f"nu=0: B(k) == 1.0 exactly at every checkpoint: {exact}; slope {slope:+.4f}",
        )
        assert ok
        return
    slope = fit_loglog_slope(ks, rates, (1e3, HORIZON))
    ok = _report(
        "3",
        -nu - 0.05 <= slope <= -nu + 0.05,
        f"nu={nu:.4f}: fitted B(k) slope {slope:+.4f}, window "
        f"[{-nu - 0.05:+.4f}, {-nu + 0.05:+.4f}]",
    )
    assert ok


def test_criterion_4_local_rate_bound(sec7_result):
    bound = math.exp(4.0) / 0.75
    ks = sec7_result.checkpoints
    mask = ks >= 10
    scaled = sec7_result.local_rates_mean[mask] * (ks[mask, None].astype(float) ** 0.25)
    empirical = float(scaled.max())
    within = empirical <= bound
    regression = (
        SEC7_SCALED_RATE_MAX is None
        or abs(empirical - SEC7_SCALED_RATE_MAX) <= 1e-9 * SEC7_SCALED_RATE_MAX
    )
    ok = _report(
        "4",
        within and regression,
        f"max B_ij(k) * k^(1/4) = {empirical:.6f} <= {bound:.3f}; "
        f"regression constant match: {regression}",
    )
    assert ok


def test_criterion_5_rate_ordering(sweep_results):
    finals = [sweep_results[nu].global_rate_mean[-1] for nu in SWEEP_NUS]
    nonincreasing = all(b >= a - 1e-12 for a, b in zip(finals[1:], finals[:-1]))
    strict = finals[0] > finals[-1]
    ok = _report(
        "5 (rates)",
        nonincreasing and strict,
        "B(1e5) by nu: " + ", ".join(f"{v:.4g}" for v in finals),
    )
    assert ok


def test_criterion_5_mse_ordering(sweep_results):
    finals = [sweep_results[nu].mse_mean[-1] for nu in SWEEP_NUS]
    nondecreasing = all(b <= a + 1e-12 for a, b in zip(finals[1:], finals[:-1]))
    strict = finals[0] < finals[-1]
    ok = _report(
        "5 (errors)",
        nondecreasing and strict,
        "MSE(1e5) by nu: " + ", ".join(f"{v:.4g}" for v in finals),
    )
    assert ok


def test_criterion_6_channel_identities():
    n = 1_000_000
    cell = 0
    worst = 0.0
    for x in (-3.0, -1.0, 0.0, 1.0, 3.0):
        for b in (0.5, 1.0, 2.0):
            for nu in (0.0, 0.25):
                params = ChannelParams(nu=nu, b=b, alpha1=1.0, gamma=0.75)
                for k in (1, 10, 10_000):
                    dithers = SeedPlan(990_000 + cell).stream(0, 1, "dither").laplace(size=n)
                    cell += 1
                    _, trig, s_hat = channel_step_batch(x, params, k, dithers)
                    g = fusion_g(x, nu, b, k)
                    p = trigger_probability(x, nu, b, k)
                    tol_mean = 4 * math.sqrt(max(p - g * g, 0.0) / n) + 1e-9
                    tol_trig = 4 * math.sqrt(max(p * (1 - p), 0.0) / n) + 1e-9
                    err_mean = abs(float(s_hat.mean()) - g)
                    err_trig = abs(float(trig.mean()) - p)
                    worst = max(worst, err_mean / tol_mean, err_trig / tol_trig)
                    assert err_mean <= tol_mean, (x, b, nu, k, err_mean, tol_mean)
                    assert err_trig <= tol_trig, (x, b, nu, k, err_trig, tol_trig)
    _report("6", True, f"{cell} grid cells x 1e6 draws; worst error at {worst:.2f} of its 4-sigma budget")


def test_criterion_7_consensus():
    topo = build_topology(5, [(i, i % 5 + 1, 1.0) for i in range(1, 6)])
    cfg = ConsensusConfig(
        topology=topo,
        threshold_c=2.0,
        alpha1=1.0,
        gamma=1.0,
        initial_states=(0.0, 1.0, 2.0, 3.0, 4.0),
    )
    batch = run_consensus_batch(cfg, horizon=1_000_000, seeds=list(range(20)))
    cps = list(batch.checkpoints)
    sum_dev = float(np.abs(batch.final_states.sum(axis=1) - 10.0).max())
    med_early = float(np.median(batch.max_deviation[:, cps.index(1000)]))
    med_late = float(np.median(batch.max_deviation[:, cps.index(1_000_000)]))
    seed0_final = float(batch.max_deviation[0, -1])
    regression = (
        CONSENSUS_SEED0_FINAL_D is None
        or abs(seed0_final - CONSENSUS_SEED0_FINAL_D) <= 1e-9
    )
    ok = _report(
        "7",
        sum_dev < 1e-9 and med_late < med_early and seed0_final < 0.25 and regression,
        f"sum deviation {sum_dev:.2e} (< 1e-9); median D: {med_early:.4g} at 1e3 -> "
        f"{med_late:.4g} at 1e6; seed-0 final D = {seed0_final:.4g}",
    )
    assert ok


def test_criterion_8_validators():
    ok_presets = not validate_config(paper_sec7().estimator_config())
    for nu in SWEEP_NUS:
        cfg = paper_sec7().with_uniform_nu(nu)
        ok_presets = ok_presets and not validate_config(cfg.estimator_config())

    gamma_half = paper_sec7(gamma=0.5).estimator_config()
    f1 = validate_config(gamma_half)
    named_1 = any("condition i" in f and "gamma" in f for f in f1)

    over = paper_sec7(nu=0.2, gamma=0.9).estimator_config()
    f2 = validate_config(over)
    named_2 = any("condition iii" in f for f in f2)

    topo = build_topology(4, [(1, 2, 1.0), (3, 4, 1.0)])
    from sc_destim.estimator import EstimatorConfig
    from sc_destim.observation import constant_model

    disconnected = EstimatorConfig(
        topology=topo,
        channels={e: ChannelParams(nu=0.25, b=0.5, alpha1=5.0, gamma=0.75) for e in topo.edges},
        model=constant_model([1.0], [[[1.0]]] * 4, 0.1),
        beta1=(5.0,) * 4,
    )
    f3 = validate_config(disconnected)
    named_3 = any("connect" in f for f in f3)

    ok = _report(
        "8",
        ok_presets and named_1 and named_2 and named_3,
        f"presets pass: {ok_presets}; named failures: gamma=1/2 -> {named_1}, "
        f"gamma+nu>1 -> {named_2}, disconnected -> {named_3}",
    )
    assert ok


def test_criterion_9_determinism(tmp_path):
    cfg = paper_sec7(horizon=2000, n_runs=2, seed=DEFAULT_SEED)
    run_experiment(cfg, out_dir=str(tmp_path / "a"))
    run_experiment(cfg, out_dir=str(tmp_path / "b"))
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
        for n in names
    )
    ok = _report("9", same, f"{len(names)} output files byte-identical: {same}")
    assert ok
