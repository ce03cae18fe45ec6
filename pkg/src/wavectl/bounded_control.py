"""Controls on [0, L] with Dirichlet or Neumann boundary conditions.

Homogeneous problems are extended to 2L-periodic ones (odd extension for
zero values, even extension for zero fluxes) and solved by the Fourier
construction.  Inhomogeneous boundary data are first removed by a
travelling-wave substitution built from an extension of the left datum to
[-L, T + L] that is tied to the right datum by

    h(t + L) + h(t - L) = 2 l(t)          (values)
    H(t + L) + H(t - L) = 2 K(t)          (fluxes)

for t in [0, T].  The parts of the extension not fixed by this recursion
are filled with Taylor and Hermite polynomials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import BPoly

from .constants import DEFAULTS
from .numerics import SolutionField, integrate_many
from .periodic_control import (
    ControlCoefficients,
    FourierSeries,
    InadmissibleError,
    Length,
    analyze,
    as_length,
    control_coefficients,
    control_velocity,
)
from .profile import Profile, as_profile

KINDS = ("dirichlet", "neumann")
BOUNDED_K_MAX = 256


class CompatibilityError(ValueError):
    def __init__(self, report: "CompatibilityReport"):
        self.report = report
        bad = ", ".join(f"{k} = {v:.3g}" for k, v in report.failures.items())
        super().__init__(f"endpoint compatibility fails: {bad}")


@dataclass(frozen=True)
class BoundedTBVP:
    f: Profile
    g: Profile
    T: Length
    L: Length
    kind: str = "dirichlet"
    left: Profile | None = None  # h (values) or H (fluxes) on [0, T]
    right: Profile | None = None  # l or K

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        object.__setattr__(self, "f", as_profile(self.f))
        object.__setattr__(self, "g", as_profile(self.g))
        object.__setattr__(self, "T", as_length(self.T))
        object.__setattr__(self, "L", as_length(self.L))
        if (self.left is None) != (self.right is None):
            raise ValueError("give both boundary data or neither")
        if self.left is not None:
            object.__setattr__(self, "left", as_profile(self.left))
            object.__setattr__(self, "right", as_profile(self.right))

    @property
    def homogeneous(self) -> bool:
        return self.left is None

    @property
    def Tf(self) -> float:
        return float(self.T)

    @property
    def Lf(self) -> float:
        return float(self.L)


@dataclass(frozen=True)
class CompatibilityReport:
    residuals: dict[str, float]
    tol: float = DEFAULTS.compat_tol

    @property
    def failures(self) -> dict[str, float]:
        return {k: v for k, v in self.residuals.items() if abs(v) > self.tol}

    @property
    def passed(self) -> bool:
        return not self.failures


def check_compatibility(spec: BoundedTBVP, tol: float = DEFAULTS.compat_tol) -> CompatibilityReport:
    f, g, T, L = spec.f, spec.g, spec.Tf, spec.Lf
    r: dict[str, float] = {}
    if spec.kind == "dirichlet":
        if spec.homogeneous:
            for name, p in (("f", f), ("g", g)):
                for x, at in ((0.0, "0"), (L, "L")):
                    r[f"{name}({at})"] = p(x)
                    r[f"{name}''({at})"] = p.derivative(x, 2)
        else:
            h, l = spec.left, spec.right
            for k, mark in ((0, ""), (2, "''")):
                r[f"f{mark}(0) - h{mark}(0)"] = f.derivative(0.0, k) - h.derivative(0.0, k)
                r[f"f{mark}(L) - l{mark}(0)"] = f.derivative(L, k) - l.derivative(0.0, k)
                r[f"g{mark}(0) - h{mark}(T)"] = g.derivative(0.0, k) - h.derivative(T, k)
                r[f"g{mark}(L) - l{mark}(T)"] = g.derivative(L, k) - l.derivative(T, k)
    else:
        if spec.homogeneous:
            for name, p in (("f", f), ("g", g)):
                r[f"{name}'(0)"] = p.derivative(0.0, 1)
                r[f"{name}'(L)"] = p.derivative(L, 1)
        else:
            H, K = spec.left, spec.right
            r["f'(0) - H(0)"] = f.derivative(0.0, 1) - H(0.0)
            r["f'(L) - K(0)"] = f.derivative(L, 1) - K(0.0)
            r["g'(0) - H(T)"] = g.derivative(0.0, 1) - H(T)
            r["g'(L) - K(T)"] = g.derivative(L, 1) - K(T)
    return CompatibilityReport({k: float(v) for k, v in r.items()}, tol)


# -- extensions ------------------------------------------------------------


def _wrap(x, L):
    """Reduce to [-L, L)."""
    return np.mod(np.asarray(x, dtype=float) + L, 2 * L) - L


def _extension(p: Profile, L: float, odd: bool) -> Profile:
    def make(k):
        sign = (-1.0) ** (k + 1) if odd else (-1.0) ** k

        def fk(x):
            s = _wrap(x, L)
            return np.where(s >= 0, p.funcs[k](np.abs(s)), sign * p.funcs[k](np.abs(s)))

        return fk

    return Profile(tuple(make(k) for k in range(p.order + 1)), period=2 * L, label=f"{'odd' if odd else 'even'}[{p.label}]")


def odd_extension(p, L, check: bool = True, tol: float = DEFAULTS.compat_tol) -> Profile:
    """-p(-x) on [-L, 0], p on [0, L], repeated with period 2L."""
    p, Lf = as_profile(p), float(as_length(L)) if not isinstance(L, float) else L
    if check:
        bad = {
            name: v
            for name, v in (("p(0)", p(0.0)), ("p(L)", p(Lf)), ("p''(0)", p.derivative(0.0, 2)), ("p''(L)", p.derivative(Lf, 2)))
            if abs(v) > tol
        }
        if bad:
            raise CompatibilityError(CompatibilityReport(bad, tol))
    return _extension(p, Lf, odd=True)


def even_extension(p, L, check: bool = True, tol: float = DEFAULTS.compat_tol) -> Profile:
    """p(-x) on [-L, 0], p on [0, L], repeated with period 2L."""
    p, Lf = as_profile(p), float(as_length(L)) if not isinstance(L, float) else L
    if check:
        bad = {name: v for name, v in (("p'(0)", p.derivative(0.0, 1)), ("p'(L)", p.derivative(Lf, 1))) if abs(v) > tol}
        if bad:
            raise CompatibilityError(CompatibilityReport(bad, tol))
    return _extension(p, Lf, odd=False)


def _project(F: FourierSeries, parity: str) -> FourierSeries:
    """Drop the coefficients that vanish by symmetry (round-off only)."""
    if parity == "odd":
        return FourierSeries(F.L, 0.0, np.zeros_like(F.A), F.B, F.length)
    return FourierSeries(F.L, F.A0, F.A, np.zeros_like(F.B), F.length)


@dataclass(frozen=True)
class ExtendedBoundaryDatum:
    """Left boundary datum extended to [-L, T + L].

    Pieces: Taylor polynomial on [-L, 0), the datum on [0, T], a Hermite
    polynomial on (T, L), and the recursion on [L, T + L].
    """

    kind: str
    data: Profile
    partner: Profile
    T: float
    L: float
    left_poly: np.polynomial.Polynomial
    filler: BPoly
    order: int

    @property
    def pieces(self) -> list[tuple[float, float, str]]:
        T, L = self.T, self.L
        return [(-L, 0.0, "filler"), (0.0, T, "data"), (T, L, "filler"), (L, T + L, "recursion")]

    @property
    def seams(self) -> tuple[float, ...]:
        return (0.0, self.T, self.L)

    def piece(self, s, k: int, which: str):
        s = np.asarray(s, dtype=float)
        if which == "left":
            return self.left_poly.deriv(k)(s) if k else self.left_poly(s)
        if which == "data":
            return np.asarray(self.data.funcs[k](s), dtype=float)
        if which == "filler":
            return self.filler.derivative(k)(s) if k else self.filler(s)
        # recursion: 2 partner(s - L) - ext(s - 2L)
        return 2 * np.asarray(self.partner.funcs[k](s - self.L), dtype=float) - self.evaluate(s - 2 * self.L, k)

    def evaluate(self, s, k: int = 0):
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape)
        T, L = self.T, self.L
        masks = (
            ("left", s < 0),
            ("data", (s >= 0) & (s <= T)),
            ("filler", (s > T) & (s < L)),
            ("recursion", s >= L),
        )
        for which, m in masks:
            if np.any(m):
                out[m] = self.piece(s[m], k, which)
        return out

    def __call__(self, s, k: int = 0):
        out = self.evaluate(s, k)
        return float(out) if np.ndim(s) == 0 else out

    def profile(self) -> Profile:
        return Profile(tuple((lambda s, k=k: self.evaluate(s, k)) for k in range(self.order + 1)), label=f"ext[{self.kind}]")

    def identity_residual(self, n: int = 100) -> float:
        t = np.linspace(0.0, self.T, n)
        r = self.evaluate(t + self.L) + self.evaluate(t - self.L) - 2 * self.partner(t)
        return float(np.max(np.abs(r)))

    def seam_jumps(self) -> dict[float, np.ndarray]:
        """Jumps of derivatives 0..order across each seam (exact one-sided limits)."""
        out = {}
        pairs = {0.0: ("left", "data"), self.T: ("data", "filler"), self.L: ("filler", "recursion")}
        for s0, (a, b) in pairs.items():
            out[s0] = np.array([abs(float(self.piece(s0, k, b) - self.piece(s0, k, a))) for k in range(self.order + 1)])
        return out

    def antiderivative(self, s, tol: float = 1e-13):
        """G(s) = int_0^s of the extension.

        Polynomial pieces are integrated exactly; quadrature is only used on
        the data and partner profiles over sub-intervals of [0, T].
        """
        s = np.asarray(s, dtype=float)
        T, L = self.T, self.L
        out = np.empty(s.shape)
        P = self.left_poly.integ()
        F = self.filler.antiderivative()

        def data_int(u):
            return integrate_many(lambda r: np.asarray(self.data(r), float), 0.0, u, tol=tol)

        m = s < 0
        out[m] = P(s[m]) - P(0.0)
        m = (s >= 0) & (s <= T)
        out[m] = data_int(s[m])
        GT = float(data_int(np.float64(T)))
        m = (s > T) & (s < L)
        out[m] = GT + F(s[m]) - F(T)
        m = s >= L
        if np.any(m):
            GL = GT + F(L) - F(T)
            u = s[m] - L
            kint = integrate_many(lambda r: np.asarray(self.partner(r), float), 0.0, u, tol=tol)
            out[m] = GL + 2 * kint - (self.antiderivative(s[m] - 2 * L) - (P(-L) - P(0.0)))
        return out

    def integral(self, a, b):
        """int_a^b of the extension, vectorized."""
        a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
        return self.antiderivative(b) - self.antiderivative(a)


def _extend(kind: str, data, partner, T, L, order: int) -> ExtendedBoundaryDatum:
    data, partner = as_profile(data), as_profile(partner)
    Tf, Lf = float(as_length(T)), float(as_length(L))
    if not Tf < Lf:
        raise InadmissibleError(
            "inhomogeneous boundary data need T < L; longer horizons would require "
            "exchanging the roles of t and x, which is not supported"
        )
    for p, name in ((data, "left datum"), (partner, "right datum")):
        if p.order < order:
            raise ValueError(f"{name} needs derivatives up to order {order}")
    jet0 = [data.derivative(0.0, k) for k in range(order + 1)]
    left = np.polynomial.Polynomial([jet0[k] / math.factorial(k) for k in range(order + 1)])
    jetT = [data.derivative(Tf, k) for k in range(order + 1)]
    jetL = [
        2 * partner.derivative(0.0, k) - (left.deriv(k)(-Lf) if k else left(-Lf)) for k in range(order + 1)
    ]
    filler = BPoly.from_derivatives([Tf, Lf], [jetT, jetL])
    return ExtendedBoundaryDatum(kind, data, partner, Tf, Lf, left, filler, order)


def extend_dirichlet_datum(h, l, T, L) -> ExtendedBoundaryDatum:
    """C^3 extension of h: cubic Taylor on [-L, 0), degree-7 Hermite on (T, L)."""
    return _extend("dirichlet", h, l, T, L, 3)


def extend_neumann_datum(H, K, T, L) -> ExtendedBoundaryDatum:
    """C^2 extension of H: quadratic Taylor on [-L, 0), quintic Hermite on (T, L)."""
    return _extend("neumann", H, K, T, L, 2)


# -- solutions -------------------------------------------------------------


@dataclass
class BoundedSolution:
    spec: BoundedTBVP
    coeffs: ControlCoefficients
    field: SolutionField
    velocity: Callable
    reduced_f: Profile
    reduced_g: Profile
    extension: ExtendedBoundaryDatum | None = None
    compatibility: CompatibilityReport | None = None
    y_x: Callable | None = None

    def __call__(self, t, x):
        return self.field(t, x)

    def reduced(self, t, x):
        """The homogeneous part ỹ."""
        return self.coeffs.synthesize(t, x)

    def boundary_term(self, t, x):
        return _boundary_term(self.spec, self.extension, t, x)


def _boundary_term(spec, ext, t, x):
    t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
    if ext is None:
        return np.zeros(t.shape)
    if spec.kind == "dirichlet":
        return 0.5 * (ext.evaluate(t + x) + ext.evaluate(t - x))
    return 0.5 * np.asarray(ext.integral(t - x, t + x))


def _solve_reduced(spec, fr: Profile, gr: Profile, K_max: int):
    L2 = Length(2 * spec.L.coef, spec.L.unit)
    Lf = spec.Lf
    odd = spec.kind == "dirichlet"
    ext = _extension(fr, Lf, odd=odd)
    exg = _extension(gr, Lf, odd=odd)
    parity = "odd" if odd else "even"
    Ff = _project(analyze(ext, L2, K_max), parity)
    Fg = _project(analyze(exg, L2, K_max), parity)
    c = control_coefficients(Ff, Fg, spec.T, L2)
    return c, Ff, Fg


def _traces(sol: BoundedSolution, n: int) -> dict:
    spec = sol.spec
    T, L = spec.Tf, spec.Lf
    t = np.linspace(0.0, T, n)
    zero, end = np.zeros(n), np.full(n, L)
    md = {}
    if spec.kind == "dirichlet":
        want0 = spec.left(t) if not spec.homogeneous else 0.0
        wantL = spec.right(t) if not spec.homogeneous else 0.0
        md["trace_error"] = float(max(np.max(np.abs(sol(t, zero) - want0)), np.max(np.abs(sol(t, end) - wantL))))
    else:
        want0 = spec.left(t) if not spec.homogeneous else 0.0
        wantL = spec.right(t) if not spec.homogeneous else 0.0
        md["trace_error"] = float(max(np.max(np.abs(sol.y_x(t, zero) - want0)), np.max(np.abs(sol.y_x(t, end) - wantL))))
        # finite-difference cross-check of the flux traces
        hh = 1e-5
        fd0 = (sol(t, zero + hh) - sol(t, zero - hh)) / (2 * hh)
        fdL = (sol(t, end + hh) - sol(t, end - hh)) / (2 * hh)
        md["trace_error_fd"] = float(max(np.max(np.abs(fd0 - want0)), np.max(np.abs(fdL - wantL))))
    return md


def solve_bounded(
    spec: BoundedTBVP,
    K_max: int = BOUNDED_K_MAX,
    n_trace: int = DEFAULTS.trace_samples,
    n_check: int = 400,
) -> BoundedSolution:
    """Solve a homogeneous or inhomogeneous Dirichlet/Neumann problem."""
    rep = check_compatibility(spec)
    if not rep.passed:
        raise CompatibilityError(rep)
    T, L = spec.Tf, spec.Lf
    ext = None
    if spec.homogeneous:
        fr, gr = spec.f, spec.g
    elif spec.kind == "dirichlet":
        ext = extend_dirichlet_datum(spec.left, spec.right, spec.T, spec.L)
        fr = _subtract_dirichlet(spec.f, ext, 0.0)
        gr = _subtract_dirichlet(spec.g, ext, T)
    else:
        ext = extend_neumann_datum(spec.left, spec.right, spec.T, spec.L)
        fr = _subtract_neumann(spec.f, ext, 0.0)
        gr = _subtract_neumann(spec.g, ext, T)
    c, Ff, Fg = _solve_reduced(spec, fr, gr, K_max)

    def evaluator(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return c.synthesize(t, x) + _boundary_term(spec, ext, t, x)

    def y_x(t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        out = c.synthesize(t, x, derivative="theta")
        if ext is not None:
            if spec.kind == "dirichlet":
                out = out + 0.5 * (ext.evaluate(t + x, 1) - ext.evaluate(t - x, 1))
            else:
                out = out + 0.5 * (ext.evaluate(t + x) + ext.evaluate(t - x))
        return out

    vt = control_velocity(c)

    def velocity(x):
        x = np.asarray(x, dtype=float)
        out = vt(x)
        if ext is not None:
            if spec.kind == "dirichlet":
                out = out + 0.5 * (ext.evaluate(x, 1) + ext.evaluate(-x, 1))
            else:
                out = out + 0.5 * (ext.evaluate(x) - ext.evaluate(-x))
        return float(out) if out.ndim == 0 else out

    tag = f"{spec.kind}/{'homogeneous' if spec.homogeneous else 'inhomogeneous'}"
    fld = SolutionField(evaluator, T, (0.0, L), tag)
    sol = BoundedSolution(spec, c, fld, velocity, fr, gr, ext, rep, y_x)
    x = np.linspace(0.0, L, n_check)
    md = fld.metadata
    md["terminal_sup_error"] = float(np.max(np.abs(sol(T, x) - spec.g(x))))
    md["initial_sup_error"] = float(np.max(np.abs(sol(0.0, x) - spec.f(x))))
    md["truncation_tail"] = float(max(np.max(np.abs(Ff.B[-16:])), np.max(np.abs(Fg.B[-16:])), np.max(np.abs(Ff.A[-16:])), np.max(np.abs(Fg.A[-16:]))))
    md["K_max"] = K_max
    md["resonant_modes"] = [int(k) for k in np.nonzero(c.resonant)[0][:8] + 1]
    if ext is not None:
        md["extension_identity"] = ext.identity_residual()
    md.update(_traces(sol, n_trace))
    md["energy_drift"] = None
    return sol


def _subtract_dirichlet(p: Profile, ext: ExtendedBoundaryDatum, t0: float) -> Profile:
    """p(x) - (h(t0 + x) + h(t0 - x)) / 2 with derivatives."""

    def make(k):
        sk = (-1.0) ** k
        return lambda x: p.funcs[k](x) - 0.5 * (ext.evaluate(t0 + x, k) + sk * ext.evaluate(t0 - np.asarray(x, float), k))

    return Profile(tuple(make(k) for k in range(min(p.order, ext.order) + 1)), label=f"{p.label}~")


def _subtract_neumann(p: Profile, ext: ExtendedBoundaryDatum, t0: float) -> Profile:
    """p(x) - 1/2 int_{t0-x}^{t0+x} H with derivatives."""

    def f0(x):
        x = np.asarray(x, float)
        return p.funcs[0](x) - 0.5 * np.asarray(ext.integral(t0 - x, t0 + x))

    def make(k):
        # d^k/dx^k of the integral is H^{(k-1)}(t0+x) + (-1)^{k-1} H^{(k-1)}(t0-x)
        sk = (-1.0) ** (k - 1)
        return lambda x: p.funcs[k](x) - 0.5 * (ext.evaluate(t0 + x, k - 1) + sk * ext.evaluate(t0 - np.asarray(x, float), k - 1))

    funcs = [f0] + [make(k) for k in range(1, min(p.order, ext.order + 1) + 1)]
    return Profile(tuple(funcs), label=f"{p.label}~")


def solve_homogeneous(spec: BoundedTBVP, **kw) -> BoundedSolution:
    if not spec.homogeneous:
        raise ValueError("problem has boundary data; use solve_inhomogeneous_*")
    return solve_bounded(spec, **kw)


def solve_inhomogeneous_dirichlet(spec: BoundedTBVP, **kw) -> BoundedSolution:
    if spec.kind != "dirichlet" or spec.homogeneous:
        raise ValueError("expected a Dirichlet problem with boundary data")
    return solve_bounded(spec, **kw)


def solve_inhomogeneous_neumann(spec: BoundedTBVP, **kw) -> BoundedSolution:
    if spec.kind != "neumann" or spec.homogeneous:
        raise ValueError("expected a Neumann problem with boundary data")
    return solve_bounded(spec, **kw)
