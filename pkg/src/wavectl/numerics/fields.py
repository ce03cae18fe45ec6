from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class Grid2D:
    """Uniform space-time grid on [0, T] x [a, b].

    Steps are adjusted down so that both ranges are covered by a whole
    number of cells; ``nt``/``nx`` count cells, not nodes.
    """

    T: float
    a: float
    b: float
    dt: float
    dx: float

    def __post_init__(self):
        if self.T <= 0 or self.b <= self.a:
            raise ValueError("empty grid")
        if self.dt <= 0 or self.dx <= 0:
            raise ValueError("grid steps must be positive")
        nt = max(1, math.ceil(self.T / self.dt - 1e-9))
        nx = max(1, math.ceil((self.b - self.a) / self.dx - 1e-9))
        object.__setattr__(self, "dt", self.T / nt)
        object.__setattr__(self, "dx", (self.b - self.a) / nx)

    @classmethod
    def from_counts(cls, T: float, a: float, b: float, nt: int, nx: int) -> "Grid2D":
        return cls(T, a, b, T / nt, (b - a) / nx)

    @property
    def nt(self) -> int:
        return round(self.T / self.dt)

    @property
    def nx(self) -> int:
        return round((self.b - self.a) / self.dx)

    @property
    def courant(self) -> float:
        return self.dt / self.dx

    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt + 1)

    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.nx + 1)

    def check_cfl(self) -> None:
        if self.courant > 1.0 + 1e-12:
            raise CFLError(f"CFL violated: dt/dx = {self.courant:.6g} > 1")


@dataclass
class SolutionField:
    """Evaluable field y(t, x) plus verification metadata.

    ``evaluator`` takes broadcastable arrays (t, x).  Metadata keys used by
    the solvers: ``terminal_sup_error``, ``pde_residual``,
    ``energy_drift``; anything else is free-form.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    T: float
    window: tuple[float, float]
    provenance: str
    metadata: dict[str, Any] = field(default_factory=dict)

    def __call__(self, t, x):
        ta, xa = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        out = np.asarray(self.evaluator(ta, xa), dtype=float)
        if out.ndim == 0 or (np.ndim(t) == 0 and np.ndim(x) == 0):
            return float(out)
        return out

    def on_grid(self, grid: Grid2D) -> np.ndarray:
        """Values at all grid nodes, shape (nt+1, nx+1)."""
        tt, xx = np.meshgrid(grid.t_nodes(), grid.x_nodes(), indexing="ij")
        return np.asarray(self.evaluator(tt, xx), dtype=float)
