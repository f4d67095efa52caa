"""Sensor observation models y_{i,k} = H_{i,k} theta + w_{i,k}.

Supports constant-per-sensor, periodic, and explicit per-step
measurement-matrix schedules and Gaussian observation noise, optionally
correlated across sensors through a user-supplied factor matrix.  The
excitation check verifies that the network jointly excites every
parameter direction over a window, without requiring any single sensor
to be observable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rng import Stream

H_KINDS = ("constant", "periodic", "table")


@dataclass(frozen=True)
class ObservationModel:
    theta: tuple[float, ...]
    h_kind: str
    h_mats: tuple[tuple[np.ndarray, ...], ...]  # per sensor, one or more (m_i x n) matrices
    noise_std: tuple[float, ...]
    noise_factor: np.ndarray | None = None  # factor S: stacked noise = S @ N(0, I)

    def __post_init__(self):
        if self.h_kind not in H_KINDS:
            raise ValueError(f"unknown H schedule kind {self.h_kind!r}")
        n = len(self.theta)
        for i, mats in enumerate(self.h_mats, start=1):
            if not mats:
                raise ValueError(f"sensor {i} has an empty H schedule")
            m = mats[0].shape[0]
            for h in mats:
                if h.ndim != 2 or h.shape[1] != n or h.shape[0] != m:
                    raise ValueError(
                        f"sensor {i}: H must be ({m} x {n}), got {h.shape}"
                    )
        if len(self.noise_std) != len(self.h_mats):
            raise ValueError("need one noise std per sensor")
        for i, std in enumerate(self.noise_std, start=1):
            if std < 0:
                raise ValueError(f"sensor {i}: noise std must be nonnegative")
        if self.noise_factor is not None:
            total = sum(m[0].shape[0] for m in self.h_mats)
            if self.noise_factor.shape != (total, total):
                raise ValueError(
                    f"noise factor must be ({total} x {total}) for the stacked noise"
                )

    @property
    def n_sensors(self) -> int:
        return len(self.h_mats)

    @property
    def dim(self) -> int:
        return len(self.theta)

    @property
    def obs_dims(self) -> tuple[int, ...]:
        return tuple(m[0].shape[0] for m in self.h_mats)

    @property
    def correlated(self) -> bool:
        return self.noise_factor is not None

    def theta_vec(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    def support_length(self) -> int:
        """Number of distinct ticks after which the schedule repeats.

        For explicit tables this is the table length; running past it is
        an error.
        """
        if self.h_kind == "constant":
            return 1
        lengths = [len(m) for m in self.h_mats]
        if self.h_kind == "table":
            return min(lengths)
        return math.lcm(*lengths)

    def h(self, i: int, k: int) -> np.ndarray:
        """Measurement matrix of sensor i (1-based) at tick k >= 1."""
        if k < 1:
            raise ValueError(f"tick index must be >= 1, got {k}")
        mats = self.h_mats[i - 1]
        if self.h_kind == "constant":
            return mats[0]
        if self.h_kind == "periodic":
            return mats[(k - 1) % len(mats)]
        if k > len(mats):
            raise ValueError(
                f"sensor {i}: explicit H table has {len(mats)} entries, tick {k} requested"
            )
        return mats[k - 1]

    def h_bound(self) -> float:
        """Max operator norm of H over the schedule support."""
        return max(
            float(np.linalg.norm(h, ord=2)) for mats in self.h_mats for h in mats
        )


def constant_model(theta, h_rows, noise_std, noise_factor=None) -> ObservationModel:
    """Model with one fixed H per sensor (each entry an (m_i x n) array-like)."""
    mats = tuple((np.atleast_2d(np.asarray(h, dtype=float)),) for h in h_rows)
    stds = _per_sensor_std(noise_std, len(mats))
    factor = None if noise_factor is None else np.asarray(noise_factor, dtype=float)
    return ObservationModel(
        theta=tuple(float(v) for v in theta),
        h_kind="constant",
        h_mats=mats,
        noise_std=stds,
        noise_factor=factor,
    )


def _per_sensor_std(noise_std, n_sensors: int) -> tuple[float, ...]:
    if np.isscalar(noise_std):
        return (float(noise_std),) * n_sensors
    stds = tuple(float(v) for v in noise_std)
    if len(stds) != n_sensors:
        raise ValueError(f"{len(stds)} noise stds for {n_sensors} sensors")
    return stds


def observe(model: ObservationModel, i: int, k: int, stream: Stream) -> np.ndarray:
    """One observation y = H_{i,k} theta + w for sensor i (1-based).

    Uses the sensor's own observation stream; for cross-sensor correlated
    noise use :func:`observe_all` with the network-level stream.
    """
    if model.correlated:
        raise ValueError("per-sensor observe is undefined under correlated noise")
    h = model.h(i, k)
    w = model.noise_std[i - 1] * np.asarray(stream.standard_normal(size=h.shape[0]))
    return h @ model.theta_vec() + w


def observe_all(model: ObservationModel, k: int, stream: Stream) -> list[np.ndarray]:
    """Stacked joint observation under correlated noise."""
    if not model.correlated:
        raise ValueError("model has independent noise; use per-sensor observe")
    total = sum(model.obs_dims)
    w = model.noise_factor @ np.asarray(stream.standard_normal(size=total))
    out = []
    pos = 0
    theta = model.theta_vec()
    for i in range(1, model.n_sensors + 1):
        m = model.obs_dims[i - 1]
        out.append(model.h(i, k) @ theta + w[pos : pos + m])
        pos += m
    return out


@dataclass(frozen=True)
class ExcitationReport:
    """Result of the cooperative persistent excitation check."""

    p: int
    delta: float
    passed: bool


def check_excitation(model: ObservationModel, p: int, k_max: int | None = None) -> ExcitationReport:
    """Smallest eigenvalue of the windowed network information matrix.

    delta = min over windows [k, k+p-1] in [1, k_max] of
    lambda_min((1/p) * sum_t sum_i H_{i,t}^T H_{i,t}); the model is
    cooperatively exciting iff delta > 0.  k_max defaults to one full
    schedule period plus window.
    """
    if p < 1:
        raise ValueError(f"window length must be >= 1, got {p}")
    if k_max is None:
        k_max = model.support_length() + p - 1
    if k_max < p:
        raise ValueError(f"k_max = {k_max} shorter than window p = {p}")
    n = model.dim
    per_tick = []
    for t in range(1, k_max + 1):
        s = np.zeros((n, n))
        for i in range(1, model.n_sensors + 1):
            h = model.h(i, t)
            s += h.T @ h
        per_tick.append(s)
    delta = math.inf
    for k in range(0, k_max - p + 1):
        window = sum(per_tick[k : k + p]) / p
        delta = min(delta, float(np.linalg.eigvalsh(window)[0]))
    delta = max(delta, 0.0) if abs(delta) < 1e-14 else delta
    return ExcitationReport(p=p, delta=delta, passed=delta > 0)
