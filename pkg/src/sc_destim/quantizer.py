"""Per-channel communication kernel: binary encoder, stochastic event
trigger with expanding threshold, and the fusion map G.

A channel at tick k, given the sender's compressed scalar x and one
Lap(0,1) dither d, forms z = x + b*d, encodes s = sign(z) in {-1,+1},
and transmits exactly when |z| exceeds the threshold nu*b*ln(k).
Silence decodes as 0, so the receiver sees a ternary symbol whose
conditional mean given x is G(x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelParams:
    """Per-edge channel parameters, shared by both directions of the edge.

    nu is the event-triggered coefficient, b the dither scaling, and the
    consensus step size at tick k is alpha1 / k**gamma.  The convergence
    theory additionally needs gamma in (1/2, 1]; that is checked by the
    step-size validator so that it can report the violated condition by
    name instead of failing at construction.
    """

    nu: float
    b: float
    alpha1: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.nu <= 0.5:
            raise ValueError(f"nu must lie in [0, 1/2], got {self.nu}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")
        if not self.alpha1 > 0:
            raise ValueError(f"alpha1 must be positive, got {self.alpha1}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    def alpha(self, k: int) -> float:
        return self.alpha1 / k**self.gamma


@dataclass(frozen=True)
class ChannelEvent:
    """What one directed channel did at one tick."""

    s: int
    triggered: bool
    s_hat: int
    bits: int

    def __post_init__(self):
        if self.s not in (-1, 1):
            raise ValueError(f"s must be -1 or +1, got {self.s}")
        if self.triggered and (self.s_hat != self.s or self.bits != 1):
            raise ValueError("triggered event must carry s_hat = s and 1 bit")
        if not self.triggered and (self.s_hat != 0 or self.bits != 0):
            raise ValueError("silent event must carry s_hat = 0 and 0 bits")


def laplace_cdf(x):
    """Distribution function of Lap(0,1); exact on both tails.

    Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    neg = 0.5 * np.exp(np.minimum(x, 0.0))
    pos = 1.0 - 0.5 * np.exp(-np.maximum(x, 0.0))
    out = np.where(x < 0, neg, pos)
    return float(out) if out.ndim == 0 else out


def threshold(nu: float, b: float, k: int) -> float:
    """Expanding trigger threshold nu * b * ln(k); zero at k = 1 or nu = 0."""
    if k < 1:
        raise ValueError(f"tick index must be >= 1, got {k}")
    return nu * b * np.log(k)


def channel_step(x: float, params: ChannelParams, k: int, dither: float) -> ChannelEvent:
    """Encode, test the trigger, and produce the directed-channel event.

    The dither is the sender's single Lap(0,1) draw for this tick, shared
    across all of the sender's outgoing channels; it enters as z = x + b*d.
    Ties |z| = C and z = 0 take the non-transmit / -1 branches.
    """
    z = x + params.b * dither
    s = 1 if z > 0 else -1
    triggered = abs(z) > threshold(params.nu, params.b, k)
    return ChannelEvent(
        s=s,
        triggered=triggered,
        s_hat=s if triggered else 0,
        bits=1 if triggered else 0,
    )


def channel_step_batch(x: float, params: ChannelParams, k: int, dithers: np.ndarray):
    """Vectorized channel_step over an array of dither draws.

    Returns (s, triggered, s_hat) arrays; bits equal triggered.astype(int).
    """
    z = x + params.b * np.asarray(dithers, dtype=float)
    s = np.where(z > 0, 1, -1)
    triggered = np.abs(z) > threshold(params.nu, params.b, k)
    return s, triggered, np.where(triggered, s, 0)


def fusion_g(x, nu: float, b: float, k: int):
    """Conditional mean of the received ternary symbol given sender state x.

    G(x) = F((x - C)/b) - F((-x - C)/b) with C = nu*b*ln(k); odd in x,
    strictly increasing, bounded in (-1, 1).
    """
    if b <= 0:
        raise ValueError(f"b must be positive, got {b}")
    c = threshold(nu, b, k)
    return laplace_cdf((x - c) / b) - laplace_cdf((-x - c) / b)


def trigger_probability(x, nu: float, b: float, k: int):
    """Exact probability that the channel transmits given sender state x."""
    if b <= 0:
        raise ValueError(f"b must be positive, got {b}")
    c = threshold(nu, b, k)
    return laplace_cdf((x - c) / b) + laplace_cdf((-x - c) / b)
