"""Default tolerances and sizes, collected in one table."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Defaults:
    # quadrature
    quad_tol: float = 1e-9
    quad_max_depth: int = 40
    quad_min_depth: int = 2
    # line construction
    window: tuple[float, float] = (-5.0, 5.0)
    window_points: int = 2001
    bridge_tol_integral: float = 1e-9
    bridge_tol_jump: float = 1e-10
    bridge_tol_slope: float = 1e-8
    terminal_tol: float = 1e-6
    perturb_tol: float = 1e-9
    # periodic construction
    k_max: int = 64
    analysis_oversample: int = 16
    coeff_tol: float = 1e-10
    obstruction_tol: float = 1e-8
    sine_bound_kmax: int = 1000
    periodic_terminal_tol: float = 1e-8
    # bounded problems
    compat_tol: float = 1e-9
    trace_samples: int = 200
    dirichlet_trace_tol: float = 1e-8
    neumann_trace_tol: float = 1e-6
    inhomog_value_trace_tol: float = 1e-6
    inhomog_flux_trace_tol: float = 1e-5
    # applications
    scan_points: int = 4001
    golden_xtol: float = 1e-10
    wavemap_fd_h: float = 1e-3
    wavemap_residual_tol: float = 1e-4
    wavemap_initial_tol: float = 1e-6
    wavemap_terminal_tol: float = 1e-5
    curvature_nonneg_tol: float = 1e-12
    # radial reduction
    sphere_quad_order: int = 16
    radial_spacing: float = 1e-3
    radial_margin: float = 5.0
    richardson_h: float = 1e-2
    richardson_tol: float = 1e-4
    radial_terminal_tol: float = 1e-4
    # finite differences
    energy_fd_h: float = 1e-5


DEFAULTS = Defaults()
