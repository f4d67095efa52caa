"""Weighted undirected communication topology with Laplacian spectral utilities.

Sensor indices are 1-based in the public types (matching configs and
reports); dense matrices returned here are indexed 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Graph weights are O(1) and the dense symmetric eigensolver is accurate to
# far below this, so a fixed absolute tolerance on lambda2 is safe.
CONNECTIVITY_TOL = 1e-10


@dataclass(frozen=True)
class Topology:
    """Undirected weighted graph on sensors 1..n_sensors.

    ``edges`` holds unordered pairs normalized to (i, j) with i < j;
    ``weights`` is aligned with ``edges`` and strictly positive.  Weight
    symmetry a_ij = a_ji holds by construction: one weight is stored per
    unordered edge.
    """

    n_sensors: int
    edges: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric adjacency matrix (0-based indexing)."""
        a = np.zeros((self.n_sensors, self.n_sensors))
        for (i, j), w in zip(self.edges, self.weights):
            a[i - 1, j - 1] = w
            a[j - 1, i - 1] = w
        return a

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Neighbor set of sensor i (1-based)."""
        out = []
        for u, v in self.edges:
            if u == i:
                out.append(v)
            elif v == i:
                out.append(u)
        return tuple(sorted(out))

    def weight(self, i: int, j: int) -> float:
        """a_ij; zero when (i, j) is not an edge."""
        key = (min(i, j), max(i, j))
        for edge, w in zip(self.edges, self.weights):
            if edge == key:
                return w
        return 0.0


@dataclass(frozen=True)
class LaplacianView:
    """Laplacian L = D - A together with its algebraic connectivity."""

    matrix: np.ndarray
    lambda2: float


def build_topology(n: int, edge_list) -> Topology:
    """Validate and normalize an edge list of (i, j, weight) triples.

    Raises ValueError on self-loops, duplicate edges (after unordering),
    out-of-range indices, or nonpositive weights.  Connectivity is not
    required at build time; use :func:`check_connected`.
    """
    if n < 2:
        raise ValueError(f"need at least 2 sensors, got {n}")
    seen: dict[tuple[int, int], float] = {}
    for entry in edge_list:
        i, j, w = entry
        i, j = int(i), int(j)
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge ({i},{j}) out of range 1..{n}")
        if i == j:
            raise ValueError(f"self-loop at sensor {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        w = float(w)
        if not w > 0:
            raise ValueError(f"nonpositive weight {w} on edge {key}")
        seen[key] = w
    edges = tuple(sorted(seen))
    weights = tuple(seen[e] for e in edges)
    return Topology(n_sensors=n, edges=edges, weights=weights)


def laplacian(t: Topology) -> LaplacianView:
    """L = D - A with lambda2 from a dense symmetric eigensolve."""
    a = t.adjacency()
    lap = np.diag(a.sum(axis=1)) - a
    eigvals = np.linalg.eigvalsh(lap)
    return LaplacianView(matrix=lap, lambda2=float(eigvals[1]))


def check_connected(t: Topology) -> bool:
    """True iff the graph is connected (lambda2 above tolerance)."""
    return laplacian(t).lambda2 > CONNECTIVITY_TOL
