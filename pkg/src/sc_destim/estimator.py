"""The SC-based distributed estimation loop.

One synchronized tick advances every sensor through: compress the
previous estimate to a scalar on the cycling coordinate, encode it with
one shared dither per sensor, run the event trigger per outgoing
channel, fuse received ternary symbols against the fusion map evaluated
at the receiver's own compressed state, then apply the local
innovation.  The innovation residual uses the previous estimate, not
the fused intermediate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .accounting import BitLedger
from .graph import Topology, check_connected
from .metrics import RunMetrics, checkpoint_ticks
from .observation import ObservationModel, check_excitation
from .quantizer import ChannelEvent, ChannelParams, laplace_cdf
from .rng import SeedPlan

NOISE_CHUNK = 4096


class ValidationError(ValueError):
    """A pre-run validator rejected the configuration."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything a run needs besides horizon and seed.

    Channel parameters are stored per unordered edge and used for both
    directions, which enforces the protocol's symmetry requirements
    (nu_ij = nu_ji, b_ij = b_ji, alpha_ij = alpha_ji) by construction.
    """

    topology: Topology
    channels: Mapping[tuple[int, int], ChannelParams]
    model: ObservationModel
    beta1: tuple[float, ...]
    beta_gamma: float = 1.0
    initial_estimates: tuple[tuple[float, ...], ...] | None = None
    excitation_window: int = 1

    def __post_init__(self):
        edges = set(self.topology.edges)
        keys = {(min(i, j), max(i, j)) for i, j in self.channels}
        if keys != edges:
            raise ValueError("channel parameters must cover exactly the topology's edges")
        if len(self.beta1) != self.topology.n_sensors:
            raise ValueError("need one beta1 per sensor")
        if any(b <= 0 for b in self.beta1):
            raise ValueError("beta1 must be positive")
        if not self.beta_gamma > 0:
            raise ValueError("beta exponent must be positive")
        if self.model.n_sensors != self.topology.n_sensors:
            raise ValueError("observation model and topology disagree on sensor count")
        if self.initial_estimates is not None:
            if len(self.initial_estimates) != self.topology.n_sensors:
                raise ValueError("need one initial estimate per sensor")
            for est in self.initial_estimates:
                if len(est) != self.model.dim:
                    raise ValueError("initial estimate dimension mismatch")

    def channel(self, i: int, j: int) -> ChannelParams:
        key = (min(i, j), max(i, j))
        return self.channels[key]

    def initial_matrix(self) -> np.ndarray:
        n, dim = self.topology.n_sensors, self.model.dim
        if self.initial_estimates is None:
            return np.zeros((n, dim))
        return np.asarray(self.initial_estimates, dtype=float)

    def beta(self, i: int, k: int) -> float:
        return self.beta1[i - 1] / k**self.beta_gamma


@dataclass(frozen=True)
class EdgePlan:
    """Directed-edge arrays compiled from the topology (0-based indices).

    Order matches the ledger: the M forward directions (i->j, i < j)
    first, then the M reversed ones.  Both directions of an edge share
    one row of channel parameters, so the fusion coefficient applied by
    i to j's message equals the one applied by j to i's message.
    """

    sender: np.ndarray
    receiver: np.ndarray
    nu: np.ndarray
    b: np.ndarray
    alpha1: np.ndarray
    gamma: np.ndarray
    weight: np.ndarray
    directed_edges: tuple[tuple[int, int], ...]

    def alpha(self, k: int) -> np.ndarray:
        return self.alpha1 * float(k) ** (-self.gamma)


def compile_plan(topology: Topology, channels: Mapping[tuple[int, int], ChannelParams]) -> EdgePlan:
    snd, rcv, nu, b, a1, gm, w = [], [], [], [], [], [], []
    for (i, j), weight in zip(topology.edges, topology.weights):
        p = channels[(i, j)]
        snd.append(i - 1)
        rcv.append(j - 1)
        nu.append(p.nu)
        b.append(p.b)
        a1.append(p.alpha1)
        gm.append(p.gamma)
        w.append(weight)
    m = topology.edge_count
    directed = [(i, j) for i, j in topology.edges] + [(j, i) for i, j in topology.edges]
    return EdgePlan(
        sender=np.array(snd + rcv, dtype=np.intp),
        receiver=np.array(rcv + snd, dtype=np.intp),
        nu=np.array(nu * 2),
        b=np.array(b * 2),
        alpha1=np.array(a1 * 2),
        gamma=np.array(gm * 2),
        weight=np.array(w * 2),
        directed_edges=tuple(directed),
    )


@dataclass
class TickEvents:
    """Per-directed-edge channel outcomes of one tick (ledger order)."""

    k: int
    s: np.ndarray
    triggered: np.ndarray
    s_hat: np.ndarray
    directed_edges: tuple[tuple[int, int], ...]

    @property
    def bits(self) -> np.ndarray:
        return self.triggered.astype(np.int64)

    def event(self, i: int, j: int) -> ChannelEvent:
        idx = self.directed_edges.index((i, j))
        return ChannelEvent(
            s=int(self.s[idx]),
            triggered=bool(self.triggered[idx]),
            s_hat=int(self.s_hat[idx]),
            bits=int(self.triggered[idx]),
        )

    def as_mapping(self) -> dict[tuple[int, int], ChannelEvent]:
        return {edge: self.event(*edge) for edge in self.directed_edges}


@dataclass
class NetworkState:
    """Mutable state of the synchronized network."""

    k: int
    estimates: np.ndarray  # (N, n)
    last_events: TickEvents | None = None


def compress_index(k: int, n: int) -> int:
    """Coordinate (1-based) broadcast at tick k: k = n*q + l with l in 1..n."""
    if k < 1:
        raise ValueError(f"tick index must be >= 1, got {k}")
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return (k - 1) % n + 1


def _fusion_values(x_receiver: np.ndarray, c: np.ndarray, b: np.ndarray) -> np.ndarray:
    """G evaluated at the receivers' states, one stacked CDF call per tick."""
    args = np.concatenate(((x_receiver - c) / b, (-x_receiver - c) / b))
    f = laplace_cdf(args)
    half = x_receiver.shape[0]
    return f[:half] - f[half:]


def tick(
    state: NetworkState,
    config: EstimatorConfig,
    dithers: np.ndarray,
    observations: list[np.ndarray] | np.ndarray,
    plan: EdgePlan | None = None,
) -> TickEvents:
    """Advance the network one tick with explicit dithers and observations.

    ``dithers`` holds one Lap(0,1) draw per sensor, shared across the
    sensor's outgoing channels; ``observations`` holds y_{i,k} per
    sensor.  Used directly by tests and the async-free reference path;
    :func:`run` inlines the same arithmetic with pregenerated noise.
    """
    if plan is None:
        plan = compile_plan(config.topology, config.channels)
    k = state.k + 1
    dim = config.model.dim
    l0 = compress_index(k, dim) - 1
    est = state.estimates
    x = est[:, l0]

    z = x[plan.sender] + plan.b * np.asarray(dithers, dtype=float)[plan.sender]
    s = np.where(z > 0, 1.0, -1.0)
    c = plan.nu * plan.b * np.log(k)
    triggered = np.abs(z) > c
    s_hat = np.where(triggered, s, 0.0)

    x_r = x[plan.receiver]
    g = _fusion_values(x_r, c, plan.b)
    contrib = plan.alpha(k) * plan.weight * (s_hat - g)
    fusion = np.bincount(plan.receiver, weights=contrib, minlength=est.shape[0])

    beta_k = np.array(config.beta1) / k**config.beta_gamma
    innovation = np.zeros_like(est)
    for i0 in range(est.shape[0]):
        h = config.model.h(i0 + 1, k)
        resid = np.asarray(observations[i0], dtype=float) - h @ est[i0]
        innovation[i0] = beta_k[i0] * (h.T @ resid)

    est[:, l0] += fusion
    est += innovation
    if not np.isfinite(est).all():
        bad = int(np.argwhere(~np.isfinite(est).all(axis=1))[0][0]) + 1
        raise RuntimeError(f"non-finite estimate at tick {k}, sensor {bad}")

    state.k = k
    state.last_events = TickEvents(
        k=k, s=s, triggered=triggered, s_hat=s_hat, directed_edges=plan.directed_edges
    )
    return state.last_events


def validate_config(config: EstimatorConfig) -> list[str]:
    """Run all pre-run validators; returns the list of failures."""
    from .theory import validate_stepsizes

    failures = []
    if not check_connected(config.topology):
        failures.append("connectivity: communication graph is not connected")
    exc = check_excitation(config.model, config.excitation_window)
    if not exc.passed:
        failures.append(
            f"excitation: window p={exc.p} gives delta={exc.delta:.3g}, need delta > 0"
        )
    report = validate_stepsizes(config.channels, config.beta1, config.beta_gamma)
    failures.extend(report.violations)
    return failures


def run(
    config: EstimatorConfig,
    horizon: int,
    seed: int,
    run_index: int = 0,
    checkpoint_ratio: float = 1.2,
    validate: bool = True,
) -> RunMetrics:
    """Simulate one seeded run and record metrics at geometric checkpoints.

    The run is a pure function of (config, seed, run_index): dithers and
    observation noises come from per-(run, sensor, purpose) streams.
    With ``validate`` the connectivity/excitation/step-size validators
    must pass; callers that skip validation own the warning.
    """
    if validate:
        failures = validate_config(config)
        if failures:
            raise ValidationError("; ".join(failures))

    topo = config.topology
    model = config.model
    n, dim = topo.n_sensors, model.dim
    plan = compile_plan(topo, config.channels)
    ledger = BitLedger(topo)
    theta = model.theta_vec()
    est = config.initial_matrix().copy()

    cps = checkpoint_ticks(horizon, checkpoint_ratio)
    cp_set = set(cps)
    n_cp = len(cps)
    sqerr = np.empty((n_cp, n))
    bits_cp = np.empty((n_cp, ledger.n_directed), dtype=np.int64)
    idx = 0
    if 0 in cp_set:
        sqerr[0] = ((est - theta) ** 2).sum(axis=1)
        bits_cp[0] = 0
        idx = 1

    plans = _NoisePlans(config, seed, run_index)
    beta1 = np.asarray(config.beta1)
    uniform_m = len(set(model.obs_dims)) == 1
    snd, rcv = plan.sender, plan.receiver
    nub = plan.nu * plan.b
    aw1 = plan.alpha1 * plan.weight
    counts = ledger.counts

    k = 1
    while k <= horizon:
        size = min(NOISE_CHUNK, horizon - k + 1)
        kk = np.arange(k, k + size, dtype=float)
        lnk = np.log(kk)
        # per-tick schedule values, hoisted out of the loop
        c_block = nub * lnk[:, None]
        alpha_block = aw1 * kk[:, None] ** (-plan.gamma)
        beta_block = beta1 * kk[:, None] ** (-config.beta_gamma)
        for t in range(size):
            l0 = (k - 1) % dim
            x = est[:, l0]
            d = plans.dither(k)

            z = x[snd] + plan.b * d[snd]
            s_hat = np.where(z > 0, 1.0, -1.0)
            c = c_block[t]
            triggered = np.abs(z) > c
            s_hat = np.where(triggered, s_hat, 0.0)

            g = _fusion_values(x[rcv], c, plan.b)
            contrib = alpha_block[t] * (s_hat - g)
            fusion = np.bincount(rcv, weights=contrib, minlength=n)

            beta_k = beta_block[t]
            if uniform_m:
                hk = plans.h_stack(k)  # (N, m, n)
                y = hk @ theta + plans.obs_noise(k)  # (N, m)
                resid = y - np.einsum("imn,in->im", hk, est)
                innovation = beta_k[:, None] * np.einsum("imn,im->in", hk, resid)
            else:
                ys = plans.obs_noise(k)
                innovation = np.zeros_like(est)
                for i0 in range(n):
                    h = model.h(i0 + 1, k)
                    resid = (h @ theta + ys[i0]) - h @ est[i0]
                    innovation[i0] = beta_k[i0] * (h.T @ resid)

            est[:, l0] += fusion
            est += innovation
            if not np.isfinite(est.sum()):
                bad = int(np.argwhere(~np.isfinite(est).all(axis=1))[0][0]) + 1
                raise RuntimeError(f"non-finite estimate at tick {k}, sensor {bad}")

            counts += triggered
            if k in cp_set:
                sqerr[idx] = ((est - theta) ** 2).sum(axis=1)
                bits_cp[idx] = counts
                idx += 1
            k += 1
    ledger.k = horizon

    cps_arr = np.asarray(cps, dtype=np.int64)
    safe_k = np.maximum(cps_arr, 1).astype(float)
    local_rates = bits_cp / safe_k[:, None]
    if topo.edge_count:
        global_rate = bits_cp.sum(axis=1) / (2 * topo.edge_count * safe_k)
    else:
        global_rate = np.zeros(len(cps))
    if cps_arr[0] == 0:
        local_rates[0] = 0.0
        global_rate[0] = 0.0
    metrics = RunMetrics(
        checkpoints=cps_arr,
        per_sensor_sqerr=sqerr,
        mse=sqerr.mean(axis=1),
        bits=bits_cp,
        local_rates=local_rates,
        global_rate=global_rate,
        directed_edges=tuple(ledger.directed_edges()),
        seed=seed,
    )
    metrics.validate()
    return metrics


class _NoisePlans:
    """Chunked pregeneration of dither and observation noise for one run.

    Chunking only batches the stream consumption; each sensor still owns
    its streams, so interleaving across sensors cannot change sequences.
    """

    def __init__(self, config: EstimatorConfig, seed: int, run_index: int):
        self.config = config
        model = config.model
        plan_seed = SeedPlan(int(seed))
        n = config.topology.n_sensors
        self._dither_streams = plan_seed.dither_streams(run_index, n)
        if model.correlated:
            self._obs_streams = [plan_seed.stream(run_index, 0, "observation")]
        else:
            self._obs_streams = plan_seed.observation_streams(run_index, n)
        self._n = n
        self._model = model
        self._dither_block = None
        self._dither_base = 0
        self._obs_block = None
        self._obs_base = 0
        self._h_cache: dict[int, np.ndarray] = {}

    def h_stack(self, k: int) -> np.ndarray:
        model = self._model
        if model.h_kind == "constant":
            key = 0
        elif model.h_kind == "periodic":
            key = (k - 1) % model.support_length()
        else:
            key = k - 1
        cached = self._h_cache.get(key)
        if cached is None:
            cached = np.stack([model.h(i, k) for i in range(1, self._n + 1)])
            if model.h_kind == "table" and len(self._h_cache) > 8:
                self._h_cache.clear()
            self._h_cache[key] = cached
        return cached

    def dither(self, k: int) -> np.ndarray:
        t = k - 1
        if self._dither_block is None or t - self._dither_base >= len(self._dither_block):
            self._dither_base = t
            size = NOISE_CHUNK
            block = np.empty((size, self._n))
            for i, st in enumerate(self._dither_streams):
                block[:, i] = st.laplace(size=size)
            self._dither_block = block
        return self._dither_block[t - self._dither_base]

    def obs_noise(self, k: int):
        t = k - 1
        if self._obs_block is None or t - self._obs_base >= len(self._obs_block):
            self._obs_base = t
            size = NOISE_CHUNK
            model = self._model
            uniform = len(set(model.obs_dims)) == 1
            if model.correlated:
                total = sum(model.obs_dims)
                raw = np.asarray(
                    self._obs_streams[0].standard_normal(size=(size, total))
                )
                stacked = raw @ model.noise_factor.T
                if uniform:
                    self._obs_block = stacked.reshape(size, self._n, model.obs_dims[0])
                else:
                    blocks = []
                    pos = 0
                    for m in model.obs_dims:
                        blocks.append(stacked[:, pos : pos + m])
                        pos += m
                    self._obs_block = blocks
            else:
                if uniform:
                    m = model.obs_dims[0]
                    block = np.empty((size, self._n, m))
                    for i, st in enumerate(self._obs_streams):
                        block[:, i, :] = model.noise_std[i] * np.asarray(
                            st.standard_normal(size=(size, m))
                        )
                    self._obs_block = block
                else:
                    self._obs_block = [
                        model.noise_std[i]
                        * np.asarray(st.standard_normal(size=(size, model.obs_dims[i])))
                        for i, st in enumerate(self._obs_streams)
                    ]
        off = t - self._obs_base
        if isinstance(self._obs_block, list):
            return [b[off] for b in self._obs_block]
        return self._obs_block[off]
