"""Spatial grids: a truncated line for the front coordinate and a torus
for the transverse coordinates.

The front coordinate z lives on a uniform grid over [-L_z, L_z] with the
profile clamped to its equilibria at the ends (the tails are exponentially
flat there).  The transverse coordinates live on a periodic uniform grid;
experiments are only trusted while the diffusive width sqrt(1+t) stays
below a fixed fraction of the torus half-length.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

#: Diffusive widths are trusted while sqrt(1+t) <= half_length / TORUS_SAFETY.
TORUS_SAFETY = 6.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [-half_length, half_length], both endpoints included."""

    half_length: float
    node_count: int
    nodes: np.ndarray = field(init=False, repr=False)
    spacing: float = field(init=False)

    def __post_init__(self):
        if self.half_length <= 0:
            raise InputError("Grid1D half_length must be positive")
        if self.node_count < 16:
            raise InputError("Grid1D needs at least 16 nodes")
        h = 2.0 * self.half_length / (self.node_count - 1)
        nodes = -self.half_length + h * np.arange(self.node_count)
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "nodes", nodes)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.node_count, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def inner(self, f, g) -> float:
        """Trapezoid inner product; sums over any leading component axes."""
        f = np.asarray(f)
        g = np.asarray(g)
        return float(np.sum(f * g * self.trapezoid_weights))


@dataclass(frozen=True)
class TransverseGrid:
    """Periodic uniform grid on [-half_length, half_length)^dimension.

    ``node_count`` is per axis and must be a power of two (FFT work).
    """

    dimension: int
    half_length: float
    node_count: int
    spacing: float = field(init=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise InputError("TransverseGrid dimension must be 1 or 2")
        if self.half_length <= 0:
            raise InputError("TransverseGrid half_length must be positive")
        n = self.node_count
        if n < 4 or (n & (n - 1)) != 0:
            raise InputError("TransverseGrid node_count must be a power of two >= 4")
        object.__setattr__(self, "spacing", 2.0 * self.half_length / n)

    @property
    def axis_nodes(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.node_count)

    @property
    def axis_freqs(self) -> np.ndarray:
        """Angular wavenumbers matching numpy's FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.node_count, d=self.spacing)

    @property
    def shape(self) -> tuple:
        return (self.node_count,) * self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def meshgrid(self) -> tuple:
        axes = (self.axis_nodes,) * self.dimension
        return np.meshgrid(*axes, indexing="ij")

    def radius_squared(self) -> np.ndarray:
        mesh = self.meshgrid()
        return sum(ax**2 for ax in mesh)

    def integrate(self, f) -> float:
        """Cell-sum quadrature; exact for resolved periodic integrands."""
        return float(np.sum(f) * self.cell_volume)

    def validity_horizon(self) -> float:
        """Largest t with sqrt(1+t) <= half_length / TORUS_SAFETY."""
        return (self.half_length / TORUS_SAFETY) ** 2 - 1.0
