"""Observation models and the cooperative excitation check."""

import numpy as np
import pytest

from sc_destim.observation import (
    ObservationModel,
    check_excitation,
    constant_model,
    observe,
    observe_all,
)
from sc_destim.rng import SeedPlan


def sec7_model(noise_std=0.1):
    h_rows = [[[1.0, 0.0]] if i % 2 == 1 else [[0.0, 1.0]] for i in range(1, 9)]
    return constant_model(theta=[1.0, -1.0], h_rows=h_rows, noise_std=noise_std)


def test_noiseless_observation_is_exact():
    model = sec7_model(noise_std=0.0)
    st = SeedPlan(0).stream(0, 1, "observation")
    assert observe(model, 1, 1, st) == pytest.approx([1.0])
    assert observe(model, 2, 1, st) == pytest.approx([-1.0])
    assert observe(model, 7, 3, st) == pytest.approx([1.0])


def test_observation_mean_matches_h_theta():
    model = sec7_model(noise_std=0.1)
    st = SeedPlan(31).stream(0, 3, "observation")
    draws = np.array([observe(model, 3, k, st)[0] for k in range(1, 100_001)])
    assert abs(draws.mean() - 1.0) < 4 * 0.1 / np.sqrt(100_000)


def test_excitation_benchmark_delta():
    # four odd sensors contribute diag(1, 0), four even diag(0, 1)
    report = check_excitation(sec7_model(), p=1)
    assert report.passed
    assert report.delta == pytest.approx(4.0, abs=1e-12)


def test_excitation_all_zero_h_fails():
    model = constant_model(theta=[1.0], h_rows=[[[0.0]], [[0.0]]], noise_std=0.1)
    report = check_excitation(model, p=1)
    assert report.delta == 0.0
    assert not report.passed


def test_excitation_alternating_rows_needs_full_window():
    model = ObservationModel(
        theta=(1.0, -1.0),
        h_kind="periodic",
        h_mats=((np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])),),
        noise_std=(0.1,),
    )
    report = check_excitation(model, p=2)
    assert report.delta == pytest.approx(0.5, abs=1e-12)
    single = check_excitation(model, p=1)
    assert not single.passed  # one tick only ever excites one coordinate


def test_excitation_invariant_under_sensor_permutation():
    base = sec7_model()
    perm = constant_model(
        theta=[1.0, -1.0],
        h_rows=[[[0.0, 1.0]], [[1.0, 0.0]]] * 4,
        noise_std=0.1,
    )
    assert check_excitation(base, p=1).delta == pytest.approx(
        check_excitation(perm, p=1).delta, abs=1e-12
    )


def test_excitation_constant_schedule_ignores_kmax():
    model = sec7_model()
    assert check_excitation(model, p=1, k_max=1).delta == pytest.approx(
        check_excitation(model, p=1, k_max=500).delta, abs=1e-12
    )


def test_table_schedule_bounds_enforced():
    model = ObservationModel(
        theta=(2.0,),
        h_kind="table",
        h_mats=((np.array([[1.0]]), np.array([[3.0]])),),
        noise_std=(0.0,),
    )
    assert np.array_equal(model.h(1, 2), [[3.0]])
    assert model.h_bound() == 3.0
    with pytest.raises(ValueError, match="table"):
        model.h(1, 3)


def test_correlated_noise_uses_factor():
    factor = np.array([[1.0, 0.0], [0.9, np.sqrt(1 - 0.81)]])
    model = constant_model(
        theta=[1.0], h_rows=[[[1.0]], [[1.0]]], noise_std=[1.0, 1.0], noise_factor=factor
    )
    st = SeedPlan(17).stream(0, 0, "observation")
    ys = np.array([np.concatenate(observe_all(model, 1, st)) for _ in range(50_000)])
    corr = np.corrcoef(ys[:, 0], ys[:, 1])[0, 1]
    assert corr == pytest.approx(0.9, abs=0.02)
    with pytest.raises(ValueError, match="correlated"):
        observe(model, 1, 1, st)


def test_model_validation():
    with pytest.raises(ValueError, match="noise std"):
        constant_model(theta=[1.0], h_rows=[[[1.0]]], noise_std=-0.1)
    with pytest.raises(ValueError, match="must be"):
        ObservationModel(
            theta=(1.0, 2.0),
            h_kind="constant",
            h_mats=((np.array([[1.0]]),),),
            noise_std=(0.1,),
        )
    with pytest.raises(ValueError, match="factor"):
        constant_model(
            theta=[1.0],
            h_rows=[[[1.0]], [[1.0]]],
            noise_std=0.1,
            noise_factor=np.eye(3),
        )
