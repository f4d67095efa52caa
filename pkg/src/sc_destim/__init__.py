"""Simulator for signal-comparison (SC) distributed estimation over
binary-valued, event-triggered communication channels.

The package provides the communication topology and its spectral
utilities, reproducible stream-split randomness, the binary channel
kernel (encoder, stochastic event trigger, fusion map), the SC consensus
protocol, the SC-based distributed estimator, bit-exact data-rate
accounting, closed-form rate/data-rate predictors, and an experiment
harness with CLI, CSV and SVG output.
"""

__version__ = "0.1.0"

from .graph import Topology, LaplacianView, build_topology, laplacian, check_connected
from .quantizer import (
    ChannelParams,
    ChannelEvent,
    laplace_cdf,
    threshold,
    channel_step,
    fusion_g,
    trigger_probability,
)

__all__ = [
    "Topology",
    "LaplacianView",
    "build_topology",
    "laplacian",
    "check_connected",
    "ChannelParams",
    "ChannelEvent",
    "laplace_cdf",
    "threshold",
    "channel_step",
    "fusion_g",
    "trigger_probability",
    "__version__",
]
