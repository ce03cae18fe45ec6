"""Three-dimensional problems through spherical means.

For a point x and a function h on R^3 the spherical mean
A_r h(x) (mean of h over the sphere |xi - x| = |r|) is even in r, and
w(t, r) = r A_r y(t, x) satisfies the one-dimensional wave equation in r.
A 3-D two-point problem at x therefore becomes a line problem for w with
odd data r A_r f and r A_r g, and y(t, x) = lim_{r -> 0} w(t, r) / r.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from .constants import DEFAULTS
from .expr import Expression, parse
from .line_control import ControlledSolution, LineTBVP, solve_line
from .profile import Profile

VARIABLES = ("x", "y", "z")
C0 = 1.0  # product of (2i - 1), i = 1..k, for n = 3 (k = 1)


class RecoveryError(ValueError):
    pass


def as_field3(h) -> Callable:
    """Coerce a formula in x, y, z, a number or a callable to a vectorized h(x, y, z)."""
    if isinstance(h, str):
        h = parse(h, VARIABLES)
    if isinstance(h, Expression):
        e = h
        return lambda a, b, c: np.broadcast_to(np.asarray(e(a, b, c), dtype=float), np.broadcast(a, b, c).shape)
    if isinstance(h, (int, float)):
        v = float(h)
        return lambda a, b, c: np.full(np.broadcast(a, b, c).shape, v)
    if callable(h):
        return h
    raise TypeError(f"cannot use {type(h).__name__} as a function on R^3")


def check_dimension(n: int) -> None:
    if n != 3:
        raise ValueError(
            f"only n = 3 is supported (got n = {n}); higher odd n need iterated radial "
            "operators and even n the method of descent"
        )


def sphere_rule(order: int = DEFAULTS.sphere_quad_order):
    """Unit-sphere nodes (m, 3) and weights summing to 1.

    Gauss-Legendre in cos(polar angle) times the trapezoid rule with
    2 * order points in azimuth; exact for polynomials of degree < 2 * order.
    """
    mu, wmu = np.polynomial.legendre.leggauss(order)
    m = 2 * order
    phi = 2 * np.pi * np.arange(m) / m
    s = np.sqrt(1 - mu**2)
    nodes = np.stack(
        [np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)), np.outer(mu, np.ones(m))], axis=-1
    ).reshape(-1, 3)
    weights = np.outer(wmu / 2, np.full(m, 1.0 / m)).ravel()
    return nodes, weights


def spherical_mean(h, x, r, quad_order: int = DEFAULTS.sphere_quad_order, chunk: int = 512):
    """A_r h(x) for scalar or array r; computed at |r| so it is even in r."""
    h = as_field3(h)
    x = np.asarray(x, dtype=float)
    r_in = np.asarray(r, dtype=float)
    rr = np.abs(r_in).ravel()
    nodes, weights = sphere_rule(quad_order)
    out = np.empty(rr.shape)
    for i in range(0, rr.size, chunk):
        rc = rr[i : i + chunk, None, None]
        pts = x + rc * nodes[None, :, :]
        vals = h(pts[..., 0], pts[..., 1], pts[..., 2])
        out[i : i + chunk] = np.asarray(vals, dtype=float) @ weights
    return float(out[0]) if r_in.ndim == 0 else out.reshape(r_in.shape)


def _odd_spline_profile(r, values, label: str) -> Profile:
    """Quintic spline through odd data, evaluated as (s(r) - s(-r)) / 2.

    The symmetrized form is odd to the last bit, so the even jet of the
    reduced terminal at 0 vanishes exactly and the bridge stays odd.
    """
    spl = make_interp_spline(r, values, k=5)
    ders = (spl,) + tuple(spl.derivative(k) for k in (1, 2, 3))

    def make(k):
        f, sign = ders[k], (-1.0) ** k

        def g(s):
            s = np.asarray(s, dtype=float)
            return 0.5 * (f(s) - sign * f(-s))

        return g

    return Profile(tuple(make(k) for k in range(4)), interval=(float(r[0]), float(r[-1])), label=label)


@dataclass
class RadialReduction:
    """Odd reduced data r A_r f(x), r A_r g(x) tabulated on |r| <= R_max."""

    center: np.ndarray
    T: float
    R_max: float
    r: np.ndarray
    mean_f: np.ndarray
    mean_g: np.ndarray
    w0: Profile
    wT: Profile
    c0: float = C0

    def oddness_defect(self) -> float:
        s = np.linspace(0.0, self.R_max, 257)
        return float(max(np.max(np.abs(self.w0(-s) + self.w0(s))), np.max(np.abs(self.wT(-s) + self.wT(s)))))


def reduce(
    f3,
    g3,
    x,
    T: float,
    R_max: float | None = None,
    spacing: float = DEFAULTS.radial_spacing,
    quad_order: int = DEFAULTS.sphere_quad_order,
) -> RadialReduction:
    T = float(T)
    R = T + DEFAULTS.radial_margin if R_max is None else float(R_max)
    if R < T + DEFAULTS.radial_margin:
        raise ValueError(f"R_max must be at least T + {DEFAULTS.radial_margin}")
    n = int(round(R / spacing))
    r = np.linspace(-R, R, 2 * n + 1)
    half = r[n:]
    mf = spherical_mean(f3, x, half, quad_order)
    mg = spherical_mean(g3, x, half, quad_order)
    # tabulate on r >= 0 and mirror, so the data are even/odd to the last bit
    mean_f = np.concatenate([mf[:0:-1], mf])
    mean_g = np.concatenate([mg[:0:-1], mg])
    w0 = _odd_spline_profile(r, r * mean_f, "r A_r f")
    wT = _odd_spline_profile(r, r * mean_g, "r A_r g")
    return RadialReduction(np.asarray(x, dtype=float), T, R, r, mean_f, mean_g, w0, wT)


def reduce_and_solve(f3, g3, x, T: float, R_max: float | None = None, **kw) -> tuple[RadialReduction, ControlledSolution]:
    red = reduce(f3, g3, x, T, R_max, **kw)
    margin = red.R_max - red.T
    spec = LineTBVP(red.w0, red.wT, red.T, window=(-margin, margin))
    sol = solve_line(spec, bridge="poly", integral="antiderivative", diagnostics=False)
    return red, sol


@dataclass(frozen=True)
class Recovered:
    value: float
    error_estimate: float


def recover_point(w, t: float, h: float = DEFAULTS.richardson_h, tol: float = DEFAULTS.richardson_tol, c0: float = C0) -> Recovered:
    """lim_{r -> 0} w(t, r) / (c0 r) by two Richardson steps in r^2 at r = h, h/2, h/4."""
    r = np.array([h, h / 2, h / 4])
    q = np.asarray(w(np.full(3, float(t)), r), dtype=float) / (c0 * r)
    r1 = (4 * q[1:] - q[:-1]) / 3
    r2 = (16 * r1[1] - r1[0]) / 15
    est = float(abs(r2 - r1[1]))
    if not est <= tol:
        raise RecoveryError(f"extrapolation did not settle: estimate {est:.3g} > {tol:.3g}")
    return Recovered(float(r2), est)


@dataclass
class PointResult:
    point: np.ndarray
    times: np.ndarray
    values: np.ndarray
    estimates: np.ndarray
    initial_error: float
    terminal_error: float
    oddness_defect: float


@dataclass
class RadialResult:
    T: float
    points: np.ndarray
    results: list[PointResult]
    metadata: dict = field(default_factory=dict)

    @property
    def terminal_errors(self) -> np.ndarray:
        return np.array([p.terminal_error for p in self.results])

    @property
    def initial_errors(self) -> np.ndarray:
        return np.array([p.initial_error for p in self.results])


def _solve_point(f3, g3, x, T, times, R_max, quad_order):
    red, sol = reduce_and_solve(f3, g3, x, T, R_max, quad_order=quad_order)
    rec = [recover_point(sol.field, t) for t in times]
    vals = np.array([q.value for q in rec])
    est = np.array([q.error_estimate for q in rec])
    ff, gg = as_field3(f3), as_field3(g3)
    y0 = recover_point(sol.field, 0.0).value
    yT = recover_point(sol.field, T).value
    return PointResult(
        np.asarray(x, dtype=float),
        times,
        vals,
        est,
        initial_error=float(abs(y0 - float(ff(*x)))),
        terminal_error=float(abs(yT - float(gg(*x)))),
        oddness_defect=red.oddness_defect(),
    )


def default_jobs() -> int:
    env = os.environ.get("WAVECTL_JOBS")
    return max(1, int(env)) if env else 1


def solve_radial3d(
    f3,
    g3,
    T: float,
    points: Sequence[Sequence[float]],
    times: Sequence[float] | None = None,
    R_max: float | None = None,
    quad_order: int = DEFAULTS.sphere_quad_order,
    jobs: int | None = None,
    n: int = 3,
) -> RadialResult:
    """Per-point reduction, line solve and recovery of y(t, x)."""
    check_dimension(n)
    T = float(T)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 3:
        raise ValueError("evaluation points must have three coordinates")
    times = np.linspace(0.0, T, 5) if times is None else np.asarray(times, dtype=float)
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    work = lambda p: _solve_point(f3, g3, p, T, times, R_max, quad_order)  # noqa: E731
    if jobs == 1:
        results = [work(p) for p in pts]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(work, pts))
    res = RadialResult(T, pts, results)
    res.metadata.update(
        terminal_sup_error=float(np.max(res.terminal_errors)),
        initial_sup_error=float(np.max(res.initial_errors)),
        max_extrapolation_estimate=float(max(np.max(p.estimates) for p in results)),
        oddness_defect=float(max(p.oddness_defect for p in results)),
        R_max=T + DEFAULTS.radial_margin if R_max is None else float(R_max),
        quad_order=quad_order,
    )
    return res
