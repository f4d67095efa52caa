"""Bit-exact communication-cost bookkeeping.

Each direction of each edge is accounted separately: the channel i->j
carries its own triggering events, so a ledger holds one integer counter
per directed edge.  Average data rates are formed in floating point only
at query time; the counters themselves never drift.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .graph import Topology
from .quantizer import ChannelEvent


class BitLedger:
    """Cumulative transmitted bits per directed edge over ticks 1..k.

    Directed edges are ordered as all (i->j) with i < j first, then the
    reversed (j->i) directions, following the topology's edge order.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        m = topology.edge_count
        self._index: dict[tuple[int, int], int] = {}
        for e, (i, j) in enumerate(topology.edges):
            self._index[(i, j)] = e
            self._index[(j, i)] = m + e
        self.counts = np.zeros(2 * m, dtype=np.int64)
        self.k = 0

    @property
    def n_directed(self) -> int:
        return 2 * self.topology.edge_count

    def directed_edges(self) -> list[tuple[int, int]]:
        """Sender/receiver pairs in ledger order (1-based)."""
        return [(i, j) for i, j in self.topology.edges] + [
            (j, i) for i, j in self.topology.edges
        ]

    def directed_index(self, i: int, j: int) -> int:
        try:
            return self._index[(i, j)]
        except KeyError:
            raise ValueError(f"({i},{j}) is not a directed channel of this topology") from None

    def record(self, events: Mapping[tuple[int, int], ChannelEvent]) -> None:
        """Record one tick from a complete {(sender, receiver): event} map.

        Rejects a tick with a missing or unknown directed edge.
        """
        bits = np.zeros(self.n_directed, dtype=np.int64)
        seen = set()
        for (i, j), ev in events.items():
            idx = self.directed_index(i, j)
            if idx in seen:
                raise ValueError(f"duplicate event for channel ({i},{j})")
            seen.add(idx)
            bits[idx] = ev.bits
        if len(seen) != self.n_directed:
            missing = [
                edge for edge in self.directed_edges() if self._index[edge] not in seen
            ]
            raise ValueError(f"missing events for channels {missing}")
        self.counts += bits
        self.k += 1

    def record_bits(self, bits: np.ndarray) -> None:
        """Fast path: one 0/1 entry per directed edge in ledger order."""
        bits = np.asarray(bits)
        if bits.shape != (self.n_directed,):
            raise ValueError(
                f"expected {self.n_directed} directed-edge bits, got shape {bits.shape}"
            )
        ibits = bits.astype(np.int64)
        if np.any((ibits != 0) & (ibits != 1)):
            raise ValueError("bits must be 0 or 1")
        self.counts += ibits
        self.k += 1

    def local_rate(self, i: int, j: int, k: int | None = None) -> float:
        """B_ij(k): average bits per tick on the directed channel i->j."""
        idx = self.directed_index(i, j)
        k = self.k if k is None else k
        if k < 1:
            raise ValueError("local rate needs at least one recorded tick")
        return float(self.counts[idx]) / k

    def global_rate(self, k: int | None = None) -> float:
        """B(k): total bits over all 2M directed channels per channel-tick."""
        k = self.k if k is None else k
        if k < 1:
            raise ValueError("global rate needs at least one recorded tick")
        if not self.topology.edge_count:
            return 0.0
        return float(self.counts.sum()) / (2 * k * self.topology.edge_count)

    def local_rates(self, k: int | None = None) -> np.ndarray:
        k = self.k if k is None else k
        if k < 1:
            raise ValueError("rates need at least one recorded tick")
        return self.counts / float(k)
