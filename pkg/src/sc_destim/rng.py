"""Deterministic stream-split randomness.

Every run draws its dithering and observation noises from per-sensor
streams derived by hashing (master_seed, run_index, sensor_index,
purpose) into a counter-based Philox generator, so distinct streams are
independent, any stream's sequence is unaffected by how other streams
are consumed, and a whole simulation is a pure function of (config,
master seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PURPOSES = {"dither": 0, "observation": 1}


def laplace_from_uniform(u, location=0.0, scale=1.0):
    """Inverse-CDF transform of uniform draws u in (0,1) to Lap(location, scale).

    u = 1/2 maps to the location exactly.  Accepts scalars or arrays.
    """
    u = np.asarray(u, dtype=float)
    # u == 0.0 would map to -inf; nudge to the smallest positive double.
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    half = u - 0.5
    out = location - scale * np.sign(half) * np.log1p(-2.0 * np.abs(half))
    return float(out) if out.ndim == 0 else out


class Stream:
    """One logical random stream, owned by a single consumer at a time."""

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.Philox(seed_seq))

    def uniform(self, size=None):
        return self._gen.random(size=size)

    def laplace(self, location=0.0, scale=1.0, size=None):
        if scale <= 0:
            raise ValueError(f"Laplace scale must be positive, got {scale}")
        return laplace_from_uniform(self.uniform(size=size), location, scale)

    def gaussian(self, mean=0.0, std=1.0, size=None):
        if std < 0:
            raise ValueError(f"Gaussian std must be nonnegative, got {std}")
        if std == 0:
            return mean if size is None else np.full(size, float(mean))
        return mean + std * self._gen.standard_normal(size=size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size=size)


@dataclass(frozen=True)
class SeedPlan:
    """Derives independent per-(run, sensor, purpose) streams from one seed."""

    master_seed: int

    def stream(self, run_index: int, sensor_index: int, purpose: str) -> Stream:
        if purpose not in PURPOSES:
            raise ValueError(f"unknown purpose {purpose!r}")
        key = (int(run_index), int(sensor_index), PURPOSES[purpose])
        return Stream(np.random.SeedSequence(self.master_seed, spawn_key=key))

    def dither_streams(self, run_index: int, n_sensors: int) -> list[Stream]:
        return [self.stream(run_index, i, "dither") for i in range(1, n_sensors + 1)]

    def observation_streams(self, run_index: int, n_sensors: int) -> list[Stream]:
        return [self.stream(run_index, i, "observation") for i in range(1, n_sensors + 1)]


def sample_laplace(stream: Stream, location: float, scale: float) -> float:
    """One Lap(location, scale) draw via the inverse-CDF transform."""
    if scale <= 0:
        raise ValueError(f"Laplace scale must be positive, got {scale}")
    return float(stream.laplace(location, scale))


def sample_gaussian(stream: Stream, mean: float, std: float) -> float:
    """One N(mean, std^2) draw; std = 0 returns the mean exactly."""
    if std < 0:
        raise ValueError(f"Gaussian std must be nonnegative, got {std}")
    return float(stream.gaussian(mean, std))
