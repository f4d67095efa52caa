"""The SC consensus protocol for scalar first-order agents.

Each agent encodes its state against a fixed threshold C using one
dithered comparison, s = 1{x + d < C}, and moves by the weighted sum of
sign differences with its neighbors.  The update to tick k consumes the
states and dithers of tick k-1, so the driver keeps the previous tick's
draws explicit.  The encoder alphabet here is {0, 1}; the estimation
channel uses {-1, +1} and the two are deliberately not unified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph import Topology, check_connected
from .rng import SeedPlan, laplace_from_uniform

DITHER_CHUNK = 8192


def laplace_ppf(u):
    """Inverse CDF of Lap(0,1); the default dither transform."""
    return laplace_from_uniform(u)


@dataclass(frozen=True)
class ConsensusConfig:
    """Inputs of the consensus protocol.

    The polynomial step family alpha1 / k**gamma needs 1/2 < gamma <= 1
    so that the steps are square-summable but not summable.  The dither
    transform is injectable: any inverse CDF of a strictly increasing
    continuous distribution keeps the protocol's guarantees.
    """

    topology: Topology
    threshold_c: float
    alpha1: float
    gamma: float
    initial_states: tuple[float, ...]
    dither_ppf: Callable = field(default=laplace_ppf)

    def __post_init__(self):
        if not self.alpha1 > 0:
            raise ValueError(f"alpha1 must be positive, got {self.alpha1}")
        if not 0.5 < self.gamma <= 1.0:
            raise ValueError(
                f"gamma must lie in (1/2, 1] for sum(alpha)=inf, sum(alpha^2)<inf, got {self.gamma}"
            )
        if len(self.initial_states) != self.topology.n_sensors:
            raise ValueError(
                f"{len(self.initial_states)} initial states for "
                f"{self.topology.n_sensors} agents"
            )

    def alpha(self, k: int) -> float:
        return self.alpha1 / k**self.gamma


def encode_signals(states, threshold_c: float, dithers) -> np.ndarray:
    """Binary signals s_i = 1 if x_i + d_i < C else 0."""
    return (np.asarray(states, dtype=float) + np.asarray(dithers, dtype=float) < threshold_c).astype(float)


def consensus_step(states, k: int, config: ConsensusConfig, dithers) -> np.ndarray:
    """Advance all agents one tick using the previous tick's states and dithers.

    x_i(k) = x_i(k-1) + alpha_k * sum_j a_ij * (s_i - s_j), with the
    signals encoded from the passed-in (previous) states and dithers.
    The update is antisymmetric over edges, so the state sum is conserved.
    """
    if k < 1:
        raise ValueError(f"tick index must be >= 1, got {k}")
    states = np.asarray(states, dtype=float)
    s = encode_signals(states, config.threshold_c, dithers)
    adj = config.topology.adjacency()
    degree = adj.sum(axis=1)
    return states + config.alpha(k) * (s * degree - adj @ s)


def _checkpoints(horizon: int, ratio: float = 1.2) -> list[int]:
    ks = {0, horizon}
    c = 1.0
    while c < horizon:
        ks.add(int(round(c)))
        c *= ratio
    d = 10
    while d <= horizon:
        ks.add(d)
        d *= 10
    return sorted(k for k in ks if k <= horizon)


@dataclass(frozen=True)
class ConsensusTrajectory:
    """Max deviation from the initial average, sampled at checkpoints."""

    checkpoints: np.ndarray
    max_deviation: np.ndarray
    mean_state: np.ndarray
    final_states: np.ndarray


def run_consensus(
    config: ConsensusConfig,
    horizon: int,
    seed: int,
    checkpoint_ratio: float = 1.2,
) -> ConsensusTrajectory:
    """Run the protocol and record D_k = max_i |x_i(k) - avg(x(0))|."""
    batch = run_consensus_batch(config, horizon, [seed], checkpoint_ratio)
    return ConsensusTrajectory(
        checkpoints=batch.checkpoints,
        max_deviation=batch.max_deviation[0],
        mean_state=batch.mean_state[0],
        final_states=batch.final_states[0],
    )


@dataclass(frozen=True)
class ConsensusBatch:
    """Per-seed trajectories advanced in lockstep (rows follow the seed list)."""

    checkpoints: np.ndarray
    max_deviation: np.ndarray
    mean_state: np.ndarray
    final_states: np.ndarray


def run_consensus_batch(
    config: ConsensusConfig,
    horizon: int,
    seeds: Sequence[int],
    checkpoint_ratio: float = 1.2,
) -> ConsensusBatch:
    """Run one trajectory per seed, vectorized across seeds.

    Each seed's dithers come from its own per-agent streams, consumed in
    fixed-size chunks, so a row here is identical to the corresponding
    single-seed :func:`run_consensus` result.
    """
    if not check_connected(config.topology):
        raise ValueError("consensus requires a connected topology")
    n = config.topology.n_sensors
    r = len(seeds)
    adj = config.topology.adjacency()
    degree = adj.sum(axis=1)

    states = np.tile(np.asarray(config.initial_states, dtype=float), (r, 1))
    target = states[0].mean()

    cps = _checkpoints(horizon, checkpoint_ratio)
    cp_set = set(cps)
    dev = np.empty((r, len(cps)))
    mean = np.empty((r, len(cps)))
    idx = 0
    if 0 in cp_set:
        dev[:, 0] = np.abs(states - target).max(axis=1)
        mean[:, 0] = states.mean(axis=1)
        idx = 1

    streams = [SeedPlan(seed).dither_streams(run_index=0, n_sensors=n) for seed in seeds]
    block = None
    block_pos = 0
    for k in range(1, horizon + 1):
        if block is None or block_pos == block.shape[0]:
            size = min(DITHER_CHUNK, horizon - k + 1)
            u = np.empty((size, r, n))
            for ri, per_agent in enumerate(streams):
                for ai, st in enumerate(per_agent):
                    u[:, ri, ai] = st.uniform(size=size)
            block = config.dither_ppf(u)
            block_pos = 0
        d = block[block_pos]
        block_pos += 1
        # signals from the previous tick's states and dithers
        s = (states + d < config.threshold_c).astype(float)
        states = states + config.alpha(k) * (s * degree - s @ adj)
        if k in cp_set:
            dev[:, idx] = np.abs(states - target).max(axis=1)
            mean[:, idx] = states.mean(axis=1)
            idx += 1

    return ConsensusBatch(
        checkpoints=np.asarray(cps, dtype=np.int64),
        max_deviation=dev,
        mean_state=mean,
        final_states=states,
    )
