"""Built-in experiment presets.

``paper-sec7`` is the 8-sensor benchmark: a ring 1-2-...-8-1 with the
four chords 1-7, 2-7, 3-6 and 4-6 (unit weights), scalar observations
picking coordinate 1 (odd sensors) or 2 (even sensors) of theta =
(1, -1) under N(0, 0.1^2) noise, and channels nu = 1/4, b = 1/2 with
steps 5/k^(3/4) and 5/k.  The chord set is one reading of the source
figure; it is kept as a named preset so it can be swapped without
touching code.  ``paper-sweep`` is the same network swept over nu with
gamma = 1 - nu.
"""

from __future__ import annotations

from fractions import Fraction

from .config import ExperimentConfig
from .graph import build_topology
from .observation import constant_model
from .quantizer import ChannelParams

SEC7_EDGES = [(i, i % 8 + 1, 1.0) for i in range(1, 9)] + [
    (1, 7, 1.0),
    (2, 7, 1.0),
    (3, 6, 1.0),
    (4, 6, 1.0),
]

SWEEP_NUS = tuple(float(Fraction(i, 9)) for i in (0, 1, 2, 3, 4))

DEFAULT_SEED = 20240501


def paper_sec7(
    horizon: int = 100_000,
    n_runs: int = 50,
    seed: int = DEFAULT_SEED,
    nu: float = 0.25,
    gamma: float = 0.75,
) -> ExperimentConfig:
    topology = build_topology(8, SEC7_EDGES)
    h_rows = [[[1.0, 0.0]] if i % 2 == 1 else [[0.0, 1.0]] for i in range(1, 9)]
    model = constant_model(theta=[1.0, -1.0], h_rows=h_rows, noise_std=0.1)
    params = ChannelParams(nu=nu, b=0.5, alpha1=5.0, gamma=gamma)
    return ExperimentConfig(
        topology=topology,
        model=model,
        channels={edge: params for edge in topology.edges},
        beta1=(5.0,) * 8,
        beta_gamma=1.0,
        horizon=horizon,
        n_runs=n_runs,
        seed=seed,
        checkpoint_ratio=1.2,
        excitation_window=1,
        initial_estimates=None,
    )


def paper_sweep_base(horizon: int = 100_000, n_runs: int = 50, seed: int = DEFAULT_SEED) -> ExperimentConfig:
    """Base config for the nu sweep; apply with_uniform_nu per sweep point."""
    return paper_sec7(horizon=horizon, n_runs=n_runs, seed=seed)


PRESETS = {
    "paper-sec7": paper_sec7,
    "paper-sweep": paper_sweep_base,
}
