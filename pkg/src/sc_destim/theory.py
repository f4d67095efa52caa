"""Closed-form conditions and predictions for the estimation algorithm.

Covers the step-size summability validator, the error-rate exponents
(h, a) with the three-way rate-class split, the achievable-rate
construction gamma = 1 - nu, and the local/global data-rate bounds.
All schedules here are polynomial: alpha1/k**gamma per edge and
beta1/k**beta_gamma per sensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .quantizer import ChannelParams

RATE_POLY = "poly_a"
RATE_LOG = "log_over"
RATE_SQRTLOG = "sqrtlog_over"

# nu + gamma = 1 decides which branch of the a-formula an edge feeds;
# comparisons on floats like 1/9 + 8/9 need slack.
EPRIME_TOL = 1e-12


@dataclass(frozen=True)
class RatePrediction:
    """Almost-sure error decay class and the matching log-log MSE slope.

    rate_class is decided by the sign of 2h - 2a - 1 (positive: error is
    O(k^-a); zero: O(ln k / k^(h-1/2)); negative: O(sqrt(ln k) /
    k^(h-1/2))).  error_slope_loglog is the predicted asymptotic slope
    of log mean-squared error against log k, ignoring log factors.
    """

    h: float
    a: float
    rate_class: str
    error_slope_loglog: float


@dataclass(frozen=True)
class StepsizeReport:
    passed: bool
    violations: tuple[str, ...]


def validate_stepsizes(
    channels: Mapping[tuple[int, int], ChannelParams],
    beta1: Sequence[float],
    beta_gamma: float,
) -> StepsizeReport:
    """Check the polynomial step-size conditions for a.s. convergence.

    (i) square-summable consensus steps: gamma > 1/2 per edge;
    (ii) square-summable innovation steps: beta exponent > 1/2;
    (iii) divergent joint drive: gamma + nu <= 1 per edge and beta
    exponent <= 1 per sensor.
    """
    violations = []
    for edge in sorted(channels):
        p = channels[edge]
        if not p.gamma > 0.5:
            violations.append(
                f"condition i on edge {edge}: gamma = {p.gamma:g} must exceed 1/2 "
                f"for square-summable consensus steps"
            )
        if p.gamma + p.nu > 1.0 + EPRIME_TOL:
            violations.append(
                f"condition iii on edge {edge}: gamma + nu = {p.gamma + p.nu:g} "
                f"must not exceed 1"
            )
    if not beta_gamma > 0.5:
        violations.append(
            f"condition ii: beta exponent = {beta_gamma:g} must exceed 1/2 "
            f"for square-summable innovation steps"
        )
    if beta_gamma > 1.0 + EPRIME_TOL:
        violations.append(
            f"condition iii: beta exponent = {beta_gamma:g} must not exceed 1"
        )
    if any(b <= 0 for b in beta1):
        violations.append("beta1 must be positive for every sensor")
    return StepsizeReport(passed=not violations, violations=tuple(violations))


def compute_h(channels: Mapping[tuple[int, int], ChannelParams]) -> float:
    """h = min over edges of nu/2 + gamma; needs 1/2 < gamma <= 1, nu + gamma <= 1."""
    h = math.inf
    for edge in sorted(channels):
        p = channels[edge]
        if not 0.5 < p.gamma <= 1.0:
            raise ValueError(f"edge {edge}: gamma = {p.gamma:g} outside (1/2, 1]")
        if p.nu + p.gamma > 1.0 + EPRIME_TOL:
            raise ValueError(f"edge {edge}: nu + gamma = {p.nu + p.gamma:g} exceeds 1")
        h = min(h, p.nu / 2 + p.gamma)
    return h


def eprime_edges(channels: Mapping[tuple[int, int], ChannelParams]) -> tuple[tuple[int, int], ...]:
    """Edges with nu + gamma = 1, which limit the late-time consensus drive."""
    return tuple(
        edge
        for edge in sorted(channels)
        if abs(channels[edge].nu + channels[edge].gamma - 1.0) <= EPRIME_TOL
    )


def compute_a(
    delta: float,
    lambda2: float,
    beta1: Sequence[float],
    channels: Mapping[tuple[int, int], ChannelParams],
    theta_l1: float,
    n_sensors: int,
    dim: int,
    h_bar: float,
) -> float:
    """The certified error exponent from excitation, connectivity and gains.

    With no edge on the nu + gamma = 1 boundary the innovation alone
    certifies a = delta * min(beta1) / N; otherwise the weakest boundary
    edge's fusion gain alpha1 * exp(-|theta|_1 / b) / b enters a
    saturating blend that approaches the first expression as the gains
    grow.
    """
    beta_min = min(beta1)
    eprime = eprime_edges(channels)
    if not eprime:
        return delta * beta_min / n_sensors
    gain = min(
        channels[e].alpha1 * math.exp(-theta_l1 / channels[e].b) / channels[e].b
        for e in eprime
    )
    num = delta * lambda2 * beta_min * gain
    den = 2 * n_sensors * dim * h_bar**2 * beta_min + n_sensors * lambda2 * gain
    return num / den


def predict_rate(h: float, a: float) -> RatePrediction:
    """Three-way almost-sure rate class from the exponents (h, a)."""
    if not 0.5 < h <= 1.0:
        raise ValueError(f"h = {h:g} outside (1/2, 1]")
    if not a > 0:
        raise ValueError(f"a = {a:g} must be positive")
    disc = 2 * h - 2 * a - 1
    if disc > 0:
        return RatePrediction(h=h, a=a, rate_class=RATE_POLY, error_slope_loglog=-2 * a)
    rate_class = RATE_LOG if disc == 0 else RATE_SQRTLOG
    return RatePrediction(h=h, a=a, rate_class=rate_class, error_slope_loglog=-(2 * h - 1))


def achievable_rate(nus: Sequence[float]) -> RatePrediction:
    """Best certified class for gamma = 1 - nu with large enough gains.

    For nu in [0, 1/2) there are step sizes making the error
    O(sqrt(ln k) * k^-(1/2 - max(nu)/2)); the exponent constant a can be
    pushed arbitrarily high by scaling alpha1 and beta1, recorded here
    as a = inf.
    """
    nu_bar = max(nus)
    if not 0.0 <= nu_bar < 0.5 or min(nus) < 0:
        raise ValueError("achievable rate needs every nu in [0, 1/2)")
    h = 1 - nu_bar / 2
    return RatePrediction(
        h=h, a=math.inf, rate_class=RATE_SQRTLOG, error_slope_loglog=-(2 * h - 1)
    )


def predict_local_rate_bound(nu: float, b: float, theta_l1: float, h: float, k: int) -> float:
    """Leading-term bound on the directed-channel average data rate at tick k.

    Returns 1 exactly when nu = 0 (the channel always transmits).  The
    raw value can exceed the trivial bound of 1 at small k; reports clamp
    it.  Valid with the sqrt-log lower-order term when a > h - 1/2;
    otherwise only the k^-nu order is meaningful.
    """
    if k < 1:
        raise ValueError(f"tick index must be >= 1, got {k}")
    if nu == 0:
        return 1.0
    return math.exp(theta_l1 / b) / ((1 - nu) * k**nu)


@dataclass(frozen=True)
class StepsizeSuggestion:
    """gamma = 1 - nu per edge with alpha1 = beta1 = scale."""

    gamma: dict[tuple[int, int], float]
    alpha1: float
    beta1: float
    prediction: RatePrediction


def suggest_stepsizes(nus: Mapping[tuple[int, int], float], scale: float) -> StepsizeSuggestion:
    """Schedule construction achieving h = 1 - max(nu)/2.

    Rejects nu >= 1/2 (no valid gamma would remain).  The reported
    prediction is the achievable class for this family; it presumes the
    scale is large enough, which holds eventually since the certified
    exponent grows linearly in the scale.
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    for edge, nu in nus.items():
        if not 0.0 <= nu < 0.5:
            raise ValueError(f"edge {edge}: nu = {nu:g} outside [0, 1/2)")
    gamma = {edge: 1.0 - nu for edge, nu in nus.items()}
    return StepsizeSuggestion(
        gamma=gamma,
        alpha1=scale,
        beta1=scale,
        prediction=achievable_rate(list(nus.values())),
    )
