"""Run-level metric containers shared by the estimator and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RunMetrics:
    """Time-indexed error and data-rate records for one estimation run.

    All arrays share the checkpoint axis.  ``bits`` holds cumulative
    transmitted bits per directed edge (ledger order); rates are bits
    divided by elapsed ticks and sit in [0, 1] (zero at k = 0).
    """

    checkpoints: np.ndarray
    per_sensor_sqerr: np.ndarray  # (C, N)
    mse: np.ndarray  # (C,)
    bits: np.ndarray  # (C, 2M) cumulative, int64
    local_rates: np.ndarray  # (C, 2M)
    global_rate: np.ndarray  # (C,)
    directed_edges: tuple[tuple[int, int], ...]
    seed: int
    provenance: dict = field(default_factory=dict)

    @property
    def n_checkpoints(self) -> int:
        return len(self.checkpoints)

    def validate(self) -> None:
        if not np.all(np.diff(self.checkpoints) > 0):
            raise ValueError("checkpoint ticks must be strictly increasing")
        if np.any(self.local_rates < 0) or np.any(self.local_rates > 1):
            raise ValueError("local rates must lie in [0, 1]")
        if np.any(self.global_rate < 0) or np.any(self.global_rate > 1):
            raise ValueError("global rate must lie in [0, 1]")


def checkpoint_ticks(horizon: int, ratio: float = 1.2) -> list[int]:
    """Geometric checkpoints (plus decades and the horizon), starting at 0.

    Geometric spacing keeps log-log slope fits evenly weighted in ln k;
    the decades make criterion windows like [1e3, 1e5] land exactly.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    if ratio <= 1.0:
        raise ValueError(f"checkpoint ratio must exceed 1, got {ratio}")
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
