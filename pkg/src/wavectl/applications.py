"""Two nonlinear reductions to the linear constructions.

Wave map ``y_tt - y_xx = y_t^2 - y_x^2``: with ``z = exp(-y)`` the equation
becomes linear, so a positive controlled solution z of the transformed
problem gives ``y = -ln z``.  Positivity is secured by a non-negative
velocity, which needs a non-negative bridge and sign conditions on the
partial sums of the reduced terminal slope.

Hyperbolic curvature flow ``k_tt - k_ss = 0`` on an L-periodic parameter
circle: the periodic construction steers f to a constant curvature, and
shifting by ``|min v| t`` keeps the evolution non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import minimize_scalar

from .constants import DEFAULTS
from .expr import Expression, call, neg
from .line_control import (
    ReducedTerminal,
    VelocityControl,
    build_bridge_blend,
    build_velocity,
    reduced_terminal,
    segment_index,
)
from .numerics import SolutionField, stencil_residual
from .periodic_control import PeriodicSolution, as_length, solve_periodic
from .profile import Profile, as_profile


class WaveMapError(ValueError):
    pass


class PositivityError(WaveMapError):
    def __init__(self, what: str, where: float, value: float):
        self.where, self.value = where, value
        super().__init__(f"{what} is not positive: min {value:.6g} at x = {where:.6g}")


# -- wave map --------------------------------------------------------------


def exp_neg(p: Profile) -> Profile:
    """exp(-p) with derivatives up to order 3 (symbolic when p has a formula)."""
    p = as_profile(p)
    if p.expr is not None:
        e = Expression(call("exp", neg(p.expr.root)), p.expr.variables)
        return Profile.from_expr(e, order=min(3, p.order), label=f"exp(-{p.label})")
    f = p.funcs

    def d0(x):
        return np.exp(-f[0](x))

    def d1(x):
        return -f[1](x) * d0(x)

    def d2(x):
        return (f[1](x) ** 2 - f[2](x)) * d0(x)

    def d3(x):
        a1, a2, a3 = f[1](x), f[2](x), f[3](x)
        return (-(a1**3) + 3 * a1 * a2 - a3) * d0(x)

    funcs = (d0, d1, d2, d3)[: min(3, p.order) + 1]
    return Profile(funcs, p.interval, p.period, f"exp(-{p.label})")


@dataclass(frozen=True)
class WaveMapProblem:
    f: Profile
    g: Profile
    T: float
    window: tuple[float, float] = DEFAULTS.window
    n_window: int = DEFAULTS.window_points

    def __post_init__(self):
        object.__setattr__(self, "f", as_profile(self.f))
        object.__setattr__(self, "g", as_profile(self.g))
        object.__setattr__(self, "T", float(self.T))
        if not self.T > 0:
            raise ValueError("T must be positive")

    @property
    def f_hat(self) -> Profile:
        return exp_neg(self.f)

    @property
    def g_hat(self) -> Profile:
        return exp_neg(self.g)

    def reduced(self) -> ReducedTerminal:
        return reduced_terminal(self.f_hat, self.g_hat, self.T)


@dataclass
class WaveMapCertificate:
    """Sufficient conditions for a positive controlled solution.

    ``margin`` is inf f - sup g over the scan (must be positive).
    ``sum_right`` is the smallest partial sum of ft'(x - (2i-1)T),
    i = 1..N, over x > T in segment N (must be >= 0); ``sum_left`` the
    largest partial sum of ft'(x + (2i-1)T) over x < -T (must be <= 0).
    ``n_max`` is the largest segment index reached by the scan.
    """

    margin: float
    inf_f: float
    sup_g: float
    min_reduced: float
    sum_right: float
    sum_left: float
    n_max: int
    pattern: str  # "monotone", "alternating" or "none"
    tol: float = 1e-9

    @property
    def gate(self) -> bool:
        return self.margin > 0

    @property
    def sums_ok(self) -> bool:
        return self.sum_right >= -self.tol and self.sum_left <= self.tol

    @property
    def passed(self) -> bool:
        return self.gate and self.sums_ok


def _partial_sums(d1, x, T, sign):
    """sum_{i=1}^{N(x)} ft'(x - sign (2i-1) T), the sum the velocity uses on x's segment."""
    N = segment_index(x, T)
    acc = np.zeros_like(x)
    for i in range(1, int(N.max(initial=0)) + 1):
        acc = acc + np.where(N >= i, d1(x - sign * (2 * i - 1) * T), 0.0)
    return acc


def _classify(d1, T, window, n, tol):
    a, b = window
    x = np.linspace(a, b, n)
    s = d1(x)
    if np.all(s[x > 0] >= -tol) and np.all(s[x < 0] <= tol):
        return "monotone"
    first = np.linspace(0.0, 2 * T, n)
    xs = x[x + 2 * T <= b]
    if np.all(d1(first) >= -tol) and np.max(np.abs(d1(xs) + d1(xs + 2 * T)), initial=0.0) <= tol:
        return "alternating"
    return "none"


def check_wavemap_conditions(
    f,
    g,
    T: float,
    window=DEFAULTS.window,
    n_max: int | None = None,
    n: int = DEFAULTS.window_points,
    tol: float = 1e-9,
) -> WaveMapCertificate:
    """Scan the gate inf f > sup g and the partial-sum sign conditions."""
    prob = WaveMapProblem(f, g, T, tuple(window), n)
    a, b = prob.window
    x = np.linspace(a, b, n)
    inf_f, sup_g = float(np.min(prob.f(x))), float(np.max(prob.g(x)))
    rt = prob.reduced()
    d1 = rt.profile.funcs[1]
    if n_max is not None:
        reach = (2 * n_max + 1) * T
        x = x[np.abs(x) <= reach]
    right = x[x > T]
    left = x[x < -T]
    s_r = float(np.min(_partial_sums(d1, right, T, +1))) if right.size else 0.0
    s_l = float(np.max(_partial_sums(d1, left, T, -1))) if left.size else 0.0
    n_max = int(segment_index(np.max(np.abs(x)), T))
    return WaveMapCertificate(
        margin=inf_f - sup_g,
        inf_f=inf_f,
        sup_g=sup_g,
        min_reduced=float(np.min(rt(x))),
        sum_right=s_r,
        sum_left=s_l,
        n_max=n_max,
        pattern=_classify(d1, T, prob.window, n, tol),
        tol=tol,
    )


def nonnegative_bridge(rt: ReducedTerminal, n_lambda: int = 101, n_scan: int = 2001):
    """First member of the poly-to-sine family that is >= 0 on [-T, T]."""
    T = rt.T
    s = np.linspace(-T, T, n_scan)
    best = (-np.inf, None)
    for lam in np.linspace(0.0, 1.0, n_lambda):
        u = build_bridge_blend(rt, float(lam), T)
        low = float(np.min(u(s)))
        if low >= 0:
            return u, low
        best = max(best, (low, float(lam)), key=lambda p: p[0])
    raise PositivityError(f"every bridge in the family (best lambda = {best[1]})", float(s[0]), best[0])


@dataclass
class WaveMapSolution:
    problem: WaveMapProblem
    certificate: WaveMapCertificate
    velocity: VelocityControl
    z: SolutionField
    field: SolutionField

    def __call__(self, t, x):
        return self.field(t, x)


def solve_wavemap(
    f,
    g,
    T: float,
    window=DEFAULTS.window,
    n_window: int = DEFAULTS.window_points,
    h: float = DEFAULTS.wavemap_fd_h,
    require_certificate: bool = True,
) -> WaveMapSolution:
    """Controlled solution of the wave map problem through z = exp(-y)."""
    prob = WaveMapProblem(f, g, T, tuple(window), n_window)
    cert = check_wavemap_conditions(prob.f, prob.g, prob.T, prob.window, n=n_window)
    if not cert.gate:
        raise WaveMapError(f"need inf f > sup g on the window; got {cert.inf_f:.6g} <= {cert.sup_g:.6g}")
    if require_certificate and not cert.sums_ok:
        raise WaveMapError(
            f"partial-sum sign conditions fail: right min {cert.sum_right:.3g}, left max {cert.sum_left:.3g}"
        )
    T = prob.T
    fh, gh = prob.f_hat, prob.g_hat
    rt = reduced_terminal(fh, gh, T)
    u, min_u = nonnegative_bridge(rt)
    v = build_velocity(u, rt, T)
    a, b = prob.window
    xs = np.linspace(a - T, b + T, 4 * n_window)
    vs = v(xs)
    if np.min(vs) < -1e-12:
        i = int(np.argmin(vs))
        raise PositivityError("velocity", float(xs[i]), float(vs[i]))

    anti = v.antiderivative

    def z_eval(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return 0.5 * (fh(x - t) + fh(x + t)) + 0.5 * (anti(x + t) - anti(x - t))

    z = SolutionField(z_eval, T, prob.window, "wavemap/z")
    tt, xx = np.meshgrid(np.linspace(0.0, T, 101), np.linspace(a, b, n_window), indexing="ij")
    zg = z(tt, xx)
    if np.min(zg) <= 0:
        i = np.unravel_index(int(np.argmin(zg)), zg.shape)
        raise PositivityError("z", float(xx[i]), float(zg[i]))

    def y_eval(t, x):
        return -np.log(z_eval(t, x))

    fld = SolutionField(y_eval, T, prob.window, "wavemap/y")
    sol = WaveMapSolution(prob, cert, v, z, fld)

    x = np.linspace(a, b, n_window)
    md = fld.metadata
    md["inf_f_minus_sup_g"] = cert.margin
    md["pattern"] = cert.pattern
    md["bridge_lambda"] = u.params.get("lambda", 0.0)
    md["min_bridge"] = min_u
    md["min_velocity"] = float(np.min(vs))
    md["min_z"] = float(np.min(zg))
    md["initial_sup_error"] = float(np.max(np.abs(fld(0.0, x) - prob.f(x))))
    md["terminal_sup_error"] = float(np.max(np.abs(fld(T, x) - prob.g(x))))
    md["transform_identity"] = float(np.max(np.abs(z(tt, xx) * np.exp(fld(tt, xx)) - 1.0)))
    # the field is C^2 only, so stencils across kink characteristics are skipped;
    # 5-point stencils keep the truncation term well below the tolerance
    tc, xc = np.meshgrid(np.linspace(2 * h, T - 2 * h, 41), np.linspace(a + 2 * h, b - 2 * h, 801), indexing="ij")
    kinks = v.breakpoints(a - T, b + T)
    md["wavemap_residual"] = stencil_residual(fld, tc, xc, h, "wavemap", kinks=kinks, order=4)
    md["wavemap_residual_3pt"] = stencil_residual(fld, tc, xc, h, "wavemap", kinks=kinks, order=2)
    md["residual_step"] = h
    md["energy_drift"] = None
    return sol


# -- curvature flow --------------------------------------------------------


@dataclass
class CurvatureFlowResult:
    f: Profile
    L: float
    T: float
    k_target: float
    k_final: float
    M: float
    shift: float
    argmin: float
    periodic: PeriodicSolution
    field: SolutionField
    metadata: dict = field(default_factory=dict)

    def velocity(self, s):
        """v(s) = k_t(0, s) of the unshifted solution."""
        return self.periodic.velocity(s)

    def shifted_velocity(self, s):
        return self.velocity(s) + self.shift

    def __call__(self, t, s):
        return self.field(t, s)


def velocity_minimum(v, L: float, n: int = DEFAULTS.scan_points, xtol: float = DEFAULTS.golden_xtol):
    """min over one period: dense scan, then golden-section around the best node."""
    s = np.linspace(0.0, L, n)
    vals = np.asarray(v(s), dtype=float)
    i = int(np.argmin(vals))
    h = L / (n - 1)
    lo, mid, hi = s[i] - h, s[i], s[i] + h
    fv = lambda x: float(v(np.asarray(x)))  # noqa: E731
    if not (fv(lo) > vals[i] < fv(hi)):
        return float(vals[i]), float(s[i])
    r = minimize_scalar(fv, bracket=(lo, mid, hi), method="golden", options={"xtol": xtol / max(abs(mid), 1.0)})
    if r.fun < vals[i]:
        return float(r.fun), float(np.mod(r.x, L))
    return float(vals[i]), float(s[i])


def curvature_flow_control(f, L, T, k_target: float, K_max: int = DEFAULTS.k_max, n_grid: int = 1001):
    """Steer a non-negative periodic curvature to a constant, staying non-negative."""
    f = as_profile(f)
    if not k_target > 0:
        raise ValueError("target curvature must be positive")
    Lf = float(as_length(L))
    s = np.linspace(0.0, Lf, n_grid)
    if np.min(f(s)) < 0:
        raise ValueError(f"input curvature is negative somewhere (min {float(np.min(f(s))):.3g})")
    per = solve_periodic(f, Profile.constant(k_target), T, L, K_max=K_max)
    Tf = float(as_length(T))
    v = per.velocity
    M, s_min = velocity_minimum(v, Lf)
    shift = abs(M) if M < 0 else 0.0

    def evaluator(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return per.field(t, x) + shift * t

    fld = SolutionField(evaluator, Tf, (0.0, Lf), "curvature-flow")
    k_final = k_target + shift * Tf
    res = CurvatureFlowResult(f, Lf, Tf, float(k_target), k_final, M, shift, s_min, per, fld)

    tt, ss = np.meshgrid(np.linspace(0.0, Tf, 201), s, indexing="ij")
    kbar = fld(tt, ss)
    md = res.metadata
    md["min_k"] = float(np.min(kbar))
    md["terminal_spread"] = float(np.max(np.abs(fld(Tf, s) - k_final)))
    md["initial_sup_error"] = float(np.max(np.abs(fld(0.0, s) - f(s))))
    md["min_shifted_velocity"] = float(np.min(res.shifted_velocity(np.linspace(0.0, Lf, DEFAULTS.scan_points))))
    md["shift_identity"] = float(np.max(np.abs(kbar - per.field(tt, ss) - shift * tt)))
    md["resonant_modes"] = per.field.metadata.get("resonant_modes", [])
    fld.metadata.update(md)
    return res


@dataclass(frozen=True)
class Curve:
    s: np.ndarray
    theta: np.ndarray
    points: np.ndarray  # shape (n, 2)
    theta_defect: float
    position_defect: float


def reconstruct_curve(k, L, n: int = 4001) -> Curve:
    """Planar curve with curvature k(s), s in [0, L], starting at the origin heading +x.

    Closure is reported, not enforced.
    """
    k = as_profile(k)
    Lf = float(as_length(L)) if not isinstance(L, float) else L
    s = np.linspace(0.0, Lf, n)
    ks = np.asarray(k(s), dtype=float) * np.ones_like(s)
    if np.min(ks) < 0:
        raise ValueError("curvature must be non-negative")
    theta = cumulative_simpson(ks, x=s, initial=0.0)
    X = cumulative_simpson(np.cos(theta), x=s, initial=0.0)
    Y = cumulative_simpson(np.sin(theta), x=s, initial=0.0)
    pts = np.column_stack([X, Y])
    return Curve(
        s,
        theta,
        pts,
        theta_defect=float(abs(theta[-1] - 2 * math.pi)),
        position_defect=float(np.hypot(X[-1] - X[0], Y[-1] - Y[0])),
    )
