"""Exact controls for y_tt = y_xx on the whole line.

Given C^2 data f, g and T > 0, the construction

1. subtracts the free evolution of f, leaving the reduced terminal
   profile ``ft(x) = g(x) - (f(x-T) + f(x+T))/2`` that must be reached
   from zero initial data;
2. picks a C^1 bridge u on [-T, T] whose integral, endpoint jump and
   one-sided slope jump equal 2 ft(0), 2 ft'(0), 2 ft''(0);
3. continues u to a C^1 velocity on the whole line by shifting it by
   multiples of 2T and adding sums of ft' (see :class:`VelocityControl`);
4. returns y(t, x) = (f(x-t) + f(x+t))/2 + 1/2 int_{x-t}^{x+t} v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import DEFAULTS
from .expr import Expression, Var, add, div, mul, num, sub
from .numerics import Grid2D, SolutionField, fd_residual, integrate, integrate_many
from .profile import Profile, as_profile

BRIDGES = ("poly", "sine")


class BridgeConditionError(ValueError):
    def __init__(self, failures: dict[str, float]):
        self.failures = failures
        detail = ", ".join(f"{k} off by {v:.3g}" for k, v in failures.items())
        super().__init__(f"bridge violates its moment conditions: {detail}")


class PerturbationError(ValueError):
    pass


@dataclass(frozen=True)
class LineTBVP:
    f: Profile
    g: Profile
    T: float
    window: tuple[float, float] = DEFAULTS.window
    n_window: int = DEFAULTS.window_points

    def __post_init__(self):
        object.__setattr__(self, "f", as_profile(self.f))
        object.__setattr__(self, "g", as_profile(self.g))
        if not self.T > 0:
            raise ValueError("T must be positive")
        for p, name in ((self.f, "f"), (self.g, "g")):
            if p.order < 2:
                raise ValueError(f"{name} needs derivatives up to order 2")


# --------------------------------------------------------------------------
# reduction


@dataclass(frozen=True)
class ReducedTerminal:
    profile: Profile
    T: float

    def __call__(self, x):
        return self.profile(x)

    @property
    def jet(self) -> tuple[float, float, float]:
        """(ft(0), ft'(0), ft''(0))."""
        p = self.profile
        return p(0.0), p.derivative(0.0, 1), p.derivative(0.0, 2)


def reduced_terminal(f, g, T: float) -> ReducedTerminal:
    f, g = as_profile(f), as_profile(g)
    if not T > 0:
        raise ValueError("T must be positive")
    order = min(f.order, g.order)

    def make(k: int) -> Callable:
        fk, gk = f.funcs[k], g.funcs[k]
        return lambda x: gk(x) - 0.5 * (fk(x - T) + fk(x + T))

    expr = None
    if f.expr is not None and g.expr is not None:
        x = Var(f.expr.variables[0])
        fm = f.expr.substitute(x.name, sub(x, num(T))).root
        fp = f.expr.substitute(x.name, add(x, num(T))).root
        root = sub(g.expr.substitute(g.expr.variables[0], x).root, div(add(fm, fp), num(2.0)))
        expr = Expression(root, f.expr.variables)
    prof = Profile(tuple(make(k) for k in range(order + 1)), label="ft", expr=expr)
    return ReducedTerminal(prof, float(T))


# --------------------------------------------------------------------------
# bridges


@dataclass(frozen=True)
class BridgeFunction:
    """C^1 function u on [-T, T] with its antiderivative from -T."""

    T: float
    kind: str
    u: Profile
    antiderivative: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x):
        return self.u(x)

    @property
    def slope_right_end(self) -> float:
        """u'_-(T)."""
        return self.u.derivative(self.T, 1)

    @property
    def slope_left_end(self) -> float:
        """u'_+(-T)."""
        return self.u.derivative(-self.T, 1)

    def condition_residuals(self, rt: ReducedTerminal, tol: float = 1e-12) -> dict[str, float]:
        """Signed defects of the three moment conditions; the integral by quadrature."""
        f0, f1, f2 = rt.jet
        T = self.T
        integral = integrate(self.u, -T, T, tol=tol, breakpoints=self.breakpoints)
        return {
            "integral": integral - 2 * f0,
            "endpoint_jump": self.u(T) - self.u(-T) - 2 * f1,
            "slope_jump": self.slope_right_end - self.slope_left_end - 2 * f2,
        }


def _poly_parts(f0, f1, f2, T):
    a2, a1, a0 = f2 / (2 * T), f1 / T, f0 / T - f2 * T / 6
    funcs = (
        lambda x: a2 * x**2 + a1 * x + a0,
        lambda x: 2 * a2 * x + a1,
        lambda x: np.full(np.shape(x), 2 * a2),
    )

    def anti(s):
        return a2 * (s**3 + T**3) / 3 + a1 * (s**2 - T**2) / 2 + a0 * (s + T)

    return funcs, anti, {"a2": a2, "a1": a1, "a0": a0}


def _sine_parts(f0, f1, f2, T):
    h = 2 * f1 - T * f2
    ht = f0 / T + (7.0 / 12.0) * T * f2 - 1.5 * f1
    c = ht + h / 2  # left piece: c + h/2 cos(pi x / T)
    d = ht + h  # right piece: d + q x^2
    q = f2 / T
    w = math.pi / T

    def u0(x):
        return np.where(x < 0, c + 0.5 * h * np.cos(w * x), d + q * x**2)

    def u1(x):
        return np.where(x < 0, -0.5 * h * w * np.sin(w * x), 2 * q * x)

    def u2(x):
        return np.where(x < 0, -0.5 * h * w * w * np.cos(w * x), np.full(np.shape(x), 2 * q))

    def anti(s):
        left = c * (s + T) + 0.5 * h / w * np.sin(w * np.minimum(s, 0.0))
        right = c * T + d * s + q * s**3 / 3
        return np.where(s < 0, left, right)

    return (u0, u1, u2), anti, {"h": h, "h_tilde": ht}


def _bridge(kind, funcs, anti, params, T, breakpoints=()) -> BridgeFunction:
    prof = Profile(tuple(funcs), interval=(-T, T), label=f"u[{kind}]")
    return BridgeFunction(float(T), kind, prof, anti, params, tuple(breakpoints))


def build_bridge_poly(rt: ReducedTerminal, T: float | None = None) -> BridgeFunction:
    """Quadratic bridge u = ft''(0)/(2T) x^2 + ft'(0)/T x + ft(0)/T - ft''(0) T/6."""
    T = rt.T if T is None else T
    funcs, anti, params = _poly_parts(*rt.jet, T)
    return _bridge("poly", funcs, anti, params, T)


def build_bridge_sine(rt: ReducedTerminal, T: float | None = None) -> BridgeFunction:
    """Two-piece bridge: a half cosine wave on [-T, 0), a parabola on [0, T]."""
    T = rt.T if T is None else T
    funcs, anti, params = _sine_parts(*rt.jet, T)
    return _bridge("sine", funcs, anti, params, T, breakpoints=(0.0,))


def build_bridge_blend(rt: ReducedTerminal, lam: float, T: float | None = None) -> BridgeFunction:
    """(1 - lam) * poly + lam * sine; the moment conditions are linear so this
    family satisfies them for every lam."""
    T = rt.T if T is None else T
    pf, pa, pp = _poly_parts(*rt.jet, T)
    sf, sa, sp = _sine_parts(*rt.jet, T)
    funcs = tuple(
        (lambda x, p=p, s=s: (1 - lam) * p(x) + lam * s(x)) for p, s in zip(pf, sf)
    )

    def anti(x):
        return (1 - lam) * pa(x) + lam * sa(x)

    params = {"lambda": lam, **{f"poly_{k}": v for k, v in pp.items()}, **sp}
    return _bridge("blend", funcs, anti, params, T, breakpoints=(0.0,) if lam else ())


# --------------------------------------------------------------------------
# velocity


def segment_index(x, T: float) -> np.ndarray:
    """N(x) = floor((|x| + T) / (2T)); zero on (-T, T)."""
    return np.floor((np.abs(np.asarray(x, dtype=float)) + T) / (2 * T)).astype(int)


@dataclass(frozen=True)
class VelocityControl:
    """Piecewise control velocity built from a bridge.

    For x >= 0 with N = N(x)::

        v(x) = u(x - 2NT) + 2 sum_{i=1..N} ft'(x - (2i-1)T)

    and the mirrored form (shift +2NT, minus sign on the sum) for x < 0.
    At a junction x = (2N-1)T the floor rule picks the branch from above.
    """

    bridge: BridgeFunction
    reduced: ReducedTerminal
    T: float
    order: int = 1

    def branch(self, x, n, k: int = 0):
        """k-th derivative of the formula for segment index n (forced)."""
        x = np.asarray(x, dtype=float)
        n = np.broadcast_to(np.asarray(n, dtype=int), x.shape)
        T = self.T
        sgn = np.where(x >= 0, 1.0, -1.0)
        base = x - sgn * 2 * n * T
        out = np.asarray(self.bridge.u.funcs[k](base), dtype=float).copy()
        out = np.broadcast_to(out, x.shape).copy()
        fk = self.reduced.profile.funcs[k + 1]
        nmax = int(n.max()) if n.size else 0
        for i in range(1, nmax + 1):
            m = n >= i
            if not np.any(m):
                continue
            xs = x[m]
            s = sgn[m]
            out[m] += 2 * s * fk(xs - s * (2 * i - 1) * T)
        return out

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = self.branch(xa, segment_index(xa, self.T))
        return float(out) if np.ndim(x) == 0 else out

    def derivative(self, x, k: int = 1):
        xa = np.asarray(x, dtype=float)
        out = self.branch(xa, segment_index(xa, self.T), k)
        return float(out) if np.ndim(x) == 0 else out

    def antiderivative(self, x):
        """V(x) = int_0^x v in closed form (uses int u = 2 ft(0))."""
        xa = np.asarray(x, dtype=float)
        T = self.T
        n = segment_index(xa, T)
        sgn = np.where(xa >= 0, 1.0, -1.0)
        U = self.bridge.antiderivative
        out = np.asarray(U(xa - sgn * 2 * n * T) - U(np.float64(0.0)), dtype=float)
        out = np.broadcast_to(out, xa.shape).copy()
        ft = self.reduced.profile.funcs[0]
        for i in range(1, int(n.max(initial=0)) + 1):
            m = n >= i
            out[m] += 2 * sgn[m] * ft(xa[m] - sgn[m] * (2 * i - 1) * T)
        return float(out) if np.ndim(x) == 0 else out

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        """Multiples of T in [lo, hi]: junctions at odd multiples, bridge
        seams (if any) at even ones."""
        T = self.T
        k = np.arange(math.floor(lo / T) - 1, math.ceil(hi / T) + 2)
        if not self.bridge.breakpoints:
            k = k[k % 2 != 0]
        pts = k * T
        return pts[(pts >= lo) & (pts <= hi)]

    def junction_jumps(self, n_max: int = 5, h: float = 1e-6) -> dict[str, np.ndarray]:
        """Value and slope jumps of v at x = +-(2N-1)T for N = 1..n_max.

        Values are exact one-sided limits of the neighbouring branch
        formulas; slopes are second-order one-sided difference quotients
        with step ``h``.
        """
        T = self.T
        N = np.arange(1, n_max + 1)
        xs = np.concatenate([(2 * N - 1) * T, -(2 * N - 1) * T])
        nn = np.concatenate([N, N])
        above = self.branch(xs, nn)
        below = self.branch(xs, nn - 1)
        value = np.abs(above - below)
        # outward side uses branch nn, inward side branch nn-1
        s = np.sign(xs)
        outer = (
            -3 * above + 4 * self.branch(xs + s * h, nn) - self.branch(xs + 2 * s * h, nn)
        ) / (2 * h) * s
        inner = (
            3 * below - 4 * self.branch(xs - s * h, nn - 1) + self.branch(xs - 2 * s * h, nn - 1)
        ) / (2 * h) * s
        slope = np.abs(outer - inner)
        return {"x": xs, "value": value, "slope": slope}


def check_bridge(bridge: BridgeFunction, rt: ReducedTerminal, scale: bool = True) -> dict[str, float]:
    res = bridge.condition_residuals(rt)
    tols = {
        "integral": DEFAULTS.bridge_tol_integral,
        "endpoint_jump": DEFAULTS.bridge_tol_jump,
        "slope_jump": DEFAULTS.bridge_tol_slope,
    }
    size = max(1.0, *(abs(v) for v in rt.jet)) if scale else 1.0
    failures = {k: abs(v) for k, v in res.items() if abs(v) > tols[k] * size}
    if failures:
        raise BridgeConditionError(failures)
    return res


def build_velocity(u: BridgeFunction, rt: ReducedTerminal, T: float | None = None) -> VelocityControl:
    T = rt.T if T is None else T
    if abs(u.T - T) > 1e-14 * T:
        raise ValueError("bridge and reduced profile use different T")
    check_bridge(u, rt)
    return VelocityControl(u, rt, float(T))


# --------------------------------------------------------------------------
# solutions


@dataclass
class ControlledSolution:
    """Controlled solution of a line problem.

    ``field`` evaluates y(t, x) with the velocity integral done by adaptive
    Simpson split at the velocity's breakpoints.
    """

    problem: LineTBVP
    reduced: ReducedTerminal
    bridge: BridgeFunction | None
    velocity: Callable
    field: SolutionField
    quad_tol: float = DEFAULTS.quad_tol

    def __call__(self, t, x):
        return self.field(t, x)

    def velocity_integral(self, t, x, tol: float | None = None):
        """1/2 int_{x-t}^{x+t} v."""
        return _half_integral(self.velocity, t, x, self.quad_tol if tol is None else tol)

    def exact_integral(self, t, x):
        """Same integral from the closed-form antiderivative, when available."""
        anti = getattr(self.velocity, "antiderivative", None)
        if anti is None:
            raise AttributeError("velocity has no closed-form antiderivative")
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return 0.5 * (anti(x + t) - anti(x - t))

    def terminal_error(self, x=None) -> float:
        p = self.problem
        if x is None:
            x = np.linspace(*p.window, p.n_window)
        return float(np.max(np.abs(self.field(p.T, x) - p.g(x))))


def _breaks(v, lo, hi):
    bp = getattr(v, "breakpoints", None)
    return bp(lo, hi) if callable(bp) else None


def _half_integral(v, t, x, tol):
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    lo, hi = x - t, x + t
    if lo.size == 0:
        return np.zeros(lo.shape)
    bps = _breaks(v, float(min(lo.min(), hi.min())), float(max(lo.max(), hi.max())))
    return 0.5 * integrate_many(lambda s: np.asarray(v(s), float), lo, hi, tol=tol, breakpoints=bps)


def _make_field(problem: LineTBVP, velocity, tol: float, integral: str) -> SolutionField:
    f = problem.f

    if integral == "quadrature":

        def evaluator(t, x):
            t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
            return 0.5 * (f(x - t) + f(x + t)) + _half_integral(velocity, t, x, tol)

    elif integral == "antiderivative":
        anti = velocity.antiderivative

        def evaluator(t, x):
            t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
            return 0.5 * (f(x - t) + f(x + t)) + 0.5 * (anti(x + t) - anti(x - t))

    else:
        raise ValueError(f"unknown integral mode {integral!r}")
    return SolutionField(evaluator, problem.T, problem.window, f"line/{integral}")


def _populate(sol: ControlledSolution, residual_grid: bool = True) -> ControlledSolution:
    p = sol.problem
    md = sol.field.metadata
    md["terminal_sup_error"] = sol.terminal_error()
    md["initial_sup_error"] = float(
        np.max(np.abs(sol.field(0.0, np.linspace(*p.window, 201)) - p.f(np.linspace(*p.window, 201))))
    )
    if residual_grid:
        a, b = p.window
        dx = (b - a) / 100
        grid = Grid2D(p.T, a, b, dx / 2, dx)
        md["pde_residual"] = fd_residual(sol.field, grid)
        kinks = _breaks(sol.velocity, a - p.T, b + p.T)
        md["pde_residual_off_kinks"] = fd_residual(sol.field, grid, kinks=kinks)
        md["residual_grid"] = {"dt": grid.dt, "dx": grid.dx}
    md["energy_drift"] = None
    return sol


def solve_line(
    spec: LineTBVP,
    bridge: str = "poly",
    integral: str = "quadrature",
    quad_tol: float = DEFAULTS.quad_tol,
    diagnostics: bool = True,
) -> ControlledSolution:
    if bridge not in BRIDGES:
        raise ValueError(f"bridge must be one of {BRIDGES}")
    rt = reduced_terminal(spec.f, spec.g, spec.T)
    u = (build_bridge_poly if bridge == "poly" else build_bridge_sine)(rt, spec.T)
    v = build_velocity(u, rt, spec.T)
    fld = _make_field(spec, v, quad_tol, integral)
    fld.provenance = f"line/{bridge}/{integral}"
    sol = ControlledSolution(spec, rt, u, v, fld, quad_tol)
    if diagnostics:
        _populate(sol)
    return sol


@dataclass(frozen=True)
class PerturbedVelocity:
    base: Callable
    extra: Profile

    def __call__(self, x):
        return self.base(x) + self.extra(x)

    def breakpoints(self, lo, hi):
        return _breaks(self.base, lo, hi)


def perturb_velocity(sol: ControlledSolution, v1, tol: float = DEFAULTS.perturb_tol) -> ControlledSolution:
    """Add a 2T-periodic zero-mean velocity; the terminal state is unchanged."""
    v1 = as_profile(v1, order=1)
    T = sol.problem.T
    x = np.linspace(-3 * T, 3 * T, 241)
    gap = float(np.max(np.abs(v1(x + 2 * T) - v1(x))))
    if gap > tol:
        raise PerturbationError(f"perturbation is not 2T-periodic (defect {gap:.3g})")
    mean = integrate(v1, -T, T, tol=min(tol, 1e-12) / 10)
    if abs(mean) > tol:
        raise PerturbationError(f"perturbation has nonzero integral over one period ({mean:.3g})")
    vel = PerturbedVelocity(sol.velocity, v1)
    fld = _make_field(sol.problem, vel, sol.quad_tol, "quadrature")
    fld.provenance = sol.field.provenance + "+perturbed"
    out = ControlledSolution(sol.problem, sol.reduced, sol.bridge, vel, fld, sol.quad_tol)
    _populate(out, residual_grid=False)
    out.field.metadata["perturbation_mean"] = mean
    return out
