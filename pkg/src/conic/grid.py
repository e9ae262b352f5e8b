"""Graded radial grids on (0, x_max] with optional axisymmetric angular nodes.

Grids are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError

MIN_NODES = 64


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing nodes x_i = x_max * ((i+1)/N)**gamma, i = 0..N-1.

    The first node sits at x_max * N**-gamma > 0; the cone tip x = 0 itself is
    never a node (boundary data is imposed there by extrapolation/pinning).
    ``theta_nodes`` are cell-centered polar angles on (0, pi) for the
    axisymmetric two-dimensional mode.
    """

    nodes: np.ndarray
    gamma: float
    x_max: float
    theta_nodes: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < MIN_NODES:
            raise GridError(f"grid needs at least {MIN_NODES} nodes, got {nodes.size}")
        if nodes[0] <= 0.0:
            raise GridError("first node must be strictly positive")
        d = np.diff(nodes)
        if np.any(d <= 0.0):
            raise GridError("nodes must be strictly increasing")
        # Guard against node collapse: adjacent spacing may not vary wildly.
        ratio = d[1:] / d[:-1]
        if ratio.max() > 8.0 or ratio.min() < 1.0 / 8.0:
            raise GridError(f"adjacent spacing ratio out of bounds: [{ratio.min():.3g}, {ratio.max():.3g}]")

    @classmethod
    def graded(cls, n: int, x_max: float = 1.0, gamma: float = 2.0,
               n_theta: int = 0) -> "RadialGrid":
        """Build the standard tip-clustered grid."""
        if x_max <= 0.0:
            raise GridError(f"x_max must be positive, got {x_max}")
        if gamma < 1.0:
            raise GridError(f"grading exponent must be >= 1, got {gamma}")
        i = np.arange(1, n + 1, dtype=float)
        nodes = x_max * (i / n) ** gamma
        theta = None
        if n_theta:
            theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
        return cls(nodes=nodes, gamma=float(gamma), x_max=float(x_max), theta_nodes=theta)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def n_theta(self) -> int:
        return 0 if self.theta_nodes is None else self.theta_nodes.size

    @property
    def is_axisymmetric(self) -> bool:
        return self.theta_nodes is not None

    def refined(self) -> "RadialGrid":
        """Grid with doubled radial resolution; old nodes are a subset."""
        return RadialGrid.graded(2 * self.n, self.x_max, self.gamma, self.n_theta)

    def coarse_to_fine_indices(self, fine: "RadialGrid") -> np.ndarray:
        """Indices of this grid's nodes inside a once-refined grid."""
        if fine.n != 2 * self.n:
            raise GridError("expected a grid with exactly doubled resolution")
        return 2 * np.arange(1, self.n + 1) - 1

    def window_indices(self, x_lo: float, x_hi: float) -> np.ndarray:
        """Node indices with x_lo <= x <= x_hi."""
        return np.nonzero((self.nodes >= x_lo) & (self.nodes <= x_hi))[0]
