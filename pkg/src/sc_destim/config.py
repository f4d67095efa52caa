"""Experiment configuration: TOML schema, loader, and canonical emitter.

The file format has five tables: topology, model, channels, schedules,
experiment.  Unknown keys are errors at every level, since a silently
ignored typo would corrupt a scientific run.  Loading expands the
uniform channel shorthand to per-edge entries; emitting always writes
the fully explicit form, so load -> emit -> load is lossless.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .estimator import EstimatorConfig
from .graph import Topology, build_topology
from .observation import ObservationModel
from .quantizer import ChannelParams


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully explicit, validated experiment description."""

    topology: Topology
    model: ObservationModel
    channels: dict[tuple[int, int], ChannelParams]
    beta1: tuple[float, ...]
    beta_gamma: float
    horizon: int
    n_runs: int
    seed: int
    checkpoint_ratio: float
    excitation_window: int
    initial_estimates: tuple[tuple[float, ...], ...] | None

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            topology=self.topology,
            channels=self.channels,
            model=self.model,
            beta1=self.beta1,
            beta_gamma=self.beta_gamma,
            initial_estimates=self.initial_estimates,
            excitation_window=self.excitation_window,
        )

    def with_uniform_nu(self, nu: float, gamma: float | None = None) -> "ExperimentConfig":
        """Copy with every edge's nu (and gamma, default 1 - nu) replaced."""
        gamma = 1.0 - nu if gamma is None else gamma
        channels = {
            edge: ChannelParams(nu=nu, b=p.b, alpha1=p.alpha1, gamma=gamma)
            for edge, p in self.channels.items()
        }
        return replace(self, channels=channels)


def _require_keys(table: Mapping, allowed: set[str], where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in [{where}]")


def _expect(table: Mapping, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return table[key]


def config_from_dict(raw: Mapping) -> ExperimentConfig:
    _require_keys(raw, {"topology", "model", "channels", "schedules", "experiment"}, "root")
    for section in ("topology", "model", "channels", "schedules", "experiment"):
        if section not in raw:
            raise ConfigError(f"missing [{section}] table")

    topo_tbl = raw["topology"]
    _require_keys(topo_tbl, {"n_sensors", "edges"}, "topology")
    topology = build_topology(
        int(_expect(topo_tbl, "n_sensors", "topology")),
        _expect(topo_tbl, "edges", "topology"),
    )

    model = _model_from_dict(raw["model"], topology.n_sensors)
    channels = _channels_from_dict(raw["channels"], topology)

    sched = raw["schedules"]
    _require_keys(sched, {"beta1", "beta_gamma"}, "schedules")
    beta1_raw = _expect(sched, "beta1", "schedules")
    if isinstance(beta1_raw, (int, float)):
        beta1 = (float(beta1_raw),) * topology.n_sensors
    else:
        beta1 = tuple(float(v) for v in beta1_raw)
        if len(beta1) != topology.n_sensors:
            raise ConfigError(f"{len(beta1)} beta1 entries for {topology.n_sensors} sensors")
    beta_gamma = float(sched.get("beta_gamma", 1.0))

    exp = raw["experiment"]
    _require_keys(
        exp,
        {
            "horizon",
            "n_runs",
            "seed",
            "checkpoint_ratio",
            "excitation_window",
            "initial_estimates",
        },
        "experiment",
    )
    init = exp.get("initial_estimates", "zero")
    if isinstance(init, str):
        if init != "zero":
            raise ConfigError(f"initial_estimates must be 'zero' or explicit vectors, got {init!r}")
        initial = None
    else:
        initial = tuple(tuple(float(v) for v in row) for row in init)
        if len(initial) != topology.n_sensors:
            raise ConfigError("need one initial estimate per sensor")
        for row in initial:
            if len(row) != model.dim:
                raise ConfigError("initial estimate dimension mismatch")

    cfg = ExperimentConfig(
        topology=topology,
        model=model,
        channels=channels,
        beta1=beta1,
        beta_gamma=beta_gamma,
        horizon=int(_expect(exp, "horizon", "experiment")),
        n_runs=int(_expect(exp, "n_runs", "experiment")),
        seed=int(_expect(exp, "seed", "experiment")),
        checkpoint_ratio=float(exp.get("checkpoint_ratio", 1.2)),
        excitation_window=int(exp.get("excitation_window", 1)),
        initial_estimates=initial,
    )
    if cfg.horizon < 0:
        raise ConfigError("horizon must be nonnegative")
    if cfg.n_runs < 1:
        raise ConfigError("n_runs must be at least 1")
    cfg.estimator_config()  # surfaces cross-table inconsistencies
    return cfg


def _model_from_dict(tbl: Mapping, n_sensors: int) -> ObservationModel:
    _require_keys(tbl, {"theta", "sensors", "noise_factor"}, "model")
    theta = tuple(float(v) for v in _expect(tbl, "theta", "model"))
    sensors = _expect(tbl, "sensors", "model")
    if len(sensors) != n_sensors:
        raise ConfigError(f"{len(sensors)} sensor blocks for {n_sensors} sensors")
    kinds = set()
    mats = []
    stds = []
    for idx, s in enumerate(sensors, start=1):
        _require_keys(s, {"h", "h_cycle", "h_table", "noise_std"}, f"model.sensors[{idx}]")
        given = [k for k in ("h", "h_cycle", "h_table") if k in s]
        if len(given) != 1:
            raise ConfigError(
                f"model.sensors[{idx}]: give exactly one of h, h_cycle, h_table"
            )
        key = given[0]
        if key == "h":
            kinds.add("constant")
            mats.append((np.atleast_2d(np.asarray(s["h"], dtype=float)),))
        else:
            kinds.add("periodic" if key == "h_cycle" else "table")
            mats.append(
                tuple(np.atleast_2d(np.asarray(h, dtype=float)) for h in s[key])
            )
        stds.append(float(_expect(s, "noise_std", f"model.sensors[{idx}]")))
    if len(kinds) != 1:
        raise ConfigError("all sensors must use the same H schedule kind")
    factor = tbl.get("noise_factor")
    return ObservationModel(
        theta=theta,
        h_kind=kinds.pop(),
        h_mats=tuple(mats),
        noise_std=tuple(stds),
        noise_factor=None if factor is None else np.asarray(factor, dtype=float),
    )


def _channels_from_dict(tbl: Mapping, topology: Topology) -> dict:
    _require_keys(tbl, {"nu", "b", "alpha1", "gamma", "per_edge"}, "channels")
    uniform_keys = {"nu", "b", "alpha1", "gamma"} & set(tbl)
    if "per_edge" in tbl:
        if uniform_keys:
            raise ConfigError("[channels]: give either uniform fields or per_edge, not both")
        channels = {}
        for idx, entry in enumerate(tbl["per_edge"], start=1):
            _require_keys(
                entry, {"i", "j", "nu", "b", "alpha1", "gamma"}, f"channels.per_edge[{idx}]"
            )
            i, j = int(entry["i"]), int(entry["j"])
            key = (min(i, j), max(i, j))
            if key in channels:
                raise ConfigError(f"duplicate channel entry for edge {key}")
            channels[key] = ChannelParams(
                nu=float(entry["nu"]),
                b=float(entry["b"]),
                alpha1=float(entry["alpha1"]),
                gamma=float(entry["gamma"]),
            )
        missing = set(topology.edges) - set(channels)
        extra = set(channels) - set(topology.edges)
        if missing or extra:
            raise ConfigError(
                f"channel entries must match topology edges (missing {sorted(missing)}, "
                f"extra {sorted(extra)})"
            )
        return channels
    if uniform_keys != {"nu", "b", "alpha1", "gamma"}:
        raise ConfigError("[channels]: uniform shorthand needs nu, b, alpha1 and gamma")
    params = ChannelParams(
        nu=float(tbl["nu"]),
        b=float(tbl["b"]),
        alpha1=float(tbl["alpha1"]),
        gamma=float(tbl["gamma"]),
    )
    return {edge: params for edge in topology.edges}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        text = repr(float(value))
        return text if ("." in text or "e" in text or "n" in text) else text + ".0"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)}")


def config_to_toml(cfg: ExperimentConfig) -> str:
    """Canonical fully explicit TOML; identical configs emit identical bytes."""
    lines = ["[topology]", f"n_sensors = {cfg.topology.n_sensors}"]
    edges = [
        [i, j, w] for (i, j), w in zip(cfg.topology.edges, cfg.topology.weights)
    ]
    lines.append(f"edges = {_fmt(edges)}")

    lines += ["", "[model]", f"theta = {_fmt(list(cfg.model.theta))}"]
    if cfg.model.noise_factor is not None:
        lines.append(f"noise_factor = {_fmt(cfg.model.noise_factor.tolist())}")
    key = {"constant": "h", "periodic": "h_cycle", "table": "h_table"}[cfg.model.h_kind]
    for i in range(cfg.model.n_sensors):
        lines += ["", "[[model.sensors]]"]
        mats = cfg.model.h_mats[i]
        if key == "h":
            lines.append(f"h = {_fmt(mats[0].tolist())}")
        else:
            lines.append(f"{key} = {_fmt([m.tolist() for m in mats])}")
        lines.append(f"noise_std = {_fmt(cfg.model.noise_std[i])}")

    lines += ["", "[channels]"]
    for i, j in cfg.topology.edges:
        p = cfg.channels[(i, j)]
        lines += [
            "",
            "[[channels.per_edge]]",
            f"i = {i}",
            f"j = {j}",
            f"nu = {_fmt(p.nu)}",
            f"b = {_fmt(p.b)}",
            f"alpha1 = {_fmt(p.alpha1)}",
            f"gamma = {_fmt(p.gamma)}",
        ]

    lines += [
        "",
        "[schedules]",
        f"beta1 = {_fmt(list(cfg.beta1))}",
        f"beta_gamma = {_fmt(cfg.beta_gamma)}",
        "",
        "[experiment]",
        f"horizon = {cfg.horizon}",
        f"n_runs = {cfg.n_runs}",
        f"seed = {cfg.seed}",
        f"checkpoint_ratio = {_fmt(cfg.checkpoint_ratio)}",
        f"excitation_window = {cfg.excitation_window}",
    ]
    if cfg.initial_estimates is None:
        lines.append('initial_estimates = "zero"')
    else:
        lines.append(f"initial_estimates = {_fmt([list(r) for r in cfg.initial_estimates])}")
    return "\n".join(lines) + "\n"


def load_config(source: str) -> ExperimentConfig:
    """Load from a TOML file path or a named preset."""
    from .presets import PRESETS

    if source in PRESETS:
        return PRESETS[source]()
    with open(source, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_dict(raw)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_to_toml(cfg).encode()).hexdigest()[:16]
