"""Dirichlet and Neumann problems on [0, 1]: traces, terminal errors and a leapfrog check."""

import numpy as np

from wavectl.bounded_control import BoundedTBVP, solve_bounded
from wavectl.numerics import Grid2D, leapfrog_solve

CASES = [
    ("sin(pi*x)", "sin(2*pi*x)", "dirichlet", None, None),
    ("cos(pi*x)", "cos(2*pi*x)", "neumann", None, None),
    ("x", "x", "dirichlet", "0", "1"),
    ("x^2/2", "(x^2 + 1/16)/2", "neumann", "0", "1"),
]


def main():
    dx = 1e-3
    print(f"{'kind':>9} {'f':>12} {'g':>16} {'terminal':>10} {'trace':>10} {'leapfrog':>10}")
    for f, g, kind, left, right in CASES:
        spec = BoundedTBVP(f, g, "1/4", 1, kind, left, right)
        sol = solve_bounded(spec)
        md = sol.field.metadata
        trace = md["trace_error_fd"] if kind == "neumann" else md["trace_error"]
        grid = Grid2D(0.25, 0.0, 1.0, dx, dx)
        lf = leapfrog_solve(spec.f, sol.velocity, 0.25, grid, f"{kind}-zero", left=spec.left, right=spec.right, n_frames=2)
        err = float(np.max(np.abs(lf.frames[-1] - spec.g(lf.x_nodes))))
        print(f"{kind:>9} {f:>12} {g:>16} {md['terminal_sup_error']:10.2e} {trace:10.2e} {err:10.2e}")


if __name__ == "__main__":
    main()
