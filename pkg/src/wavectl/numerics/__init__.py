from .diagnostics import energy, energy_density, fd_residual, stencil_residual
from .fields import CFLError, Grid2D, SolutionField
from .leapfrog import leapfrog_solve
from .quadrature import QuadratureError, integrate, integrate_many

__all__ = [
    "CFLError",
    "Grid2D",
    "QuadratureError",
    "SolutionField",
    "energy",
    "energy_density",
    "fd_residual",
    "integrate",
    "integrate_many",
    "leapfrog_solve",
    "stencil_residual",
]
