"""Fourier construction of controls on the circle of length L.

A mode cos(w_k x), w_k = 2 k pi / L, evolves as alpha cos(w_k t) + beta sin(w_k t).
Matching f at t = 0 fixes alpha; matching g at t = T fixes beta whenever
sin(w_k T) != 0, i.e. whenever 2kT/L is not an integer.  Writing
2T/L = p/q in lowest terms, the resonant modes are exactly the multiples of
q, and the non-resonant denominators are bounded below by sin(pi/q).  T/L
must therefore be rational; lengths are handled as exact rational multiples
of 1 or of pi.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .constants import DEFAULTS
from .numerics import SolutionField, energy
from .profile import Profile, as_profile


class InadmissibleError(ValueError):
    """(T, L) violates the rationality / non-integrality requirement."""


class ResonanceError(ValueError):
    def __init__(self, mode: int, defect: float):
        self.mode = mode
        self.defect = defect
        super().__init__(
            f"mode k={mode} is resonant and the data violate its forced relation "
            f"(defect {defect:.3g}); the pair cannot be connected in this time"
        )


class TruncationError(ValueError):
    pass


# -- exact lengths ---------------------------------------------------------

_LENGTH = re.compile(
    r"^\s*(?:(?P<num>[+]?\d+(?:\.\d+)?)\s*(?:/\s*(?P<den>\d+))?)?\s*(?P<star>\*)?\s*(?P<pi>pi)?\s*(?:/\s*(?P<pden>\d+))?\s*$"
)


@dataclass(frozen=True)
class Length:
    """coef * unit with coef an exact rational and unit 1 or pi."""

    coef: Fraction
    unit: str = ""

    @property
    def value(self) -> float:
        return float(self.coef) * (math.pi if self.unit == "pi" else 1.0)

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        c = str(self.coef)
        if not self.unit:
            return c
        return "pi" if self.coef == 1 else f"{c}*pi"


def as_length(x) -> Length:
    """Accept ints, Fractions, decimal or 'p/q' strings, and 'p/q*pi' forms.

    Binary floats are rejected: whether 2T/L is an integer has to be decided
    exactly.
    """
    if isinstance(x, Length):
        return x
    if isinstance(x, bool):
        raise TypeError("length cannot be a bool")
    if isinstance(x, (int, Fraction)):
        return Length(Fraction(x))
    if isinstance(x, float):
        raise TypeError(
            f"length {x!r} given as a float; pass an exact ratio such as '1/4' "
            "(T/L must be a rational number)"
        )
    if isinstance(x, str):
        m = _LENGTH.match(x)
        if not m or (m["num"] is None and m["pi"] is None):
            raise ValueError(f"cannot read {x!r} as a rational length (use 'p/q' or 'p/q*pi')")
        if m["star"] and not m["pi"]:
            raise ValueError(f"cannot read {x!r} as a rational length")
        coef = Fraction(m["num"]) if m["num"] else Fraction(1)
        if m["den"]:
            coef /= int(m["den"])
        if m["pden"]:
            coef /= int(m["pden"])
        if coef <= 0 and coef != 0:
            raise ValueError("lengths must be non-negative")
        return Length(coef, "pi" if m["pi"] else "")
    raise TypeError(f"cannot make a length from {type(x).__name__}")


def ratio(a, b) -> Fraction:
    a, b = as_length(a), as_length(b)
    if a.unit != b.unit:
        raise InadmissibleError(
            f"cannot decide whether {a}/{b} is rational; give T and L in the same unit"
        )
    return a.coef / b.coef


# -- series ----------------------------------------------------------------


@dataclass(frozen=True)
class FourierSeries:
    """F = A0/2 + sum_k A[k-1] cos(w_k x) + B[k-1] sin(w_k x)."""

    L: float
    A0: float
    A: np.ndarray
    B: np.ndarray
    length: Length | None = field(default=None, compare=False)

    @property
    def K_max(self) -> int:
        return len(self.A)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * np.arange(1, self.K_max + 1) / self.L

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ph = np.multiply.outer(x, self.omega)
        out = self.A0 / 2 + np.cos(ph) @ self.A + np.sin(ph) @ self.B
        return float(out) if out.ndim == 0 else out


def _period_check(p: Profile, L: float, tol: float = 1e-9):
    x = np.linspace(0.0, L, 97)
    gap = float(np.max(np.abs(p(x + L) - p(x))))
    scale = max(1.0, float(np.max(np.abs(p(x)))))
    if gap > tol * scale:
        raise ValueError(f"profile is not L-periodic (defect {gap:.3g})")


def analyze(
    p, L, K_max: int = DEFAULTS.k_max, oversample: int = DEFAULTS.analysis_oversample, chop: bool = True
) -> FourierSeries:
    """Fourier coefficients over one period.

    Uses the trapezoid rule on M = oversample * K_max equispaced points
    (via the real FFT).  The rule is exact for trigonometric polynomials of
    degree below M and geometrically accurate for analytic periodic data.
    With ``chop`` coefficients below the rounding floor 8 eps max|p| are
    set to zero, so unresolved modes carry no noise into k^n-weighted sums.
    """
    p = as_profile(p)
    length = as_length(L) if not isinstance(L, float) else None
    Lf = float(length) if length is not None else float(L)
    if not Lf > 0:
        raise ValueError("period must be positive")
    _period_check(p, Lf)
    M = max(oversample * K_max, 2 * K_max + 2)
    x = Lf * np.arange(M) / M
    vals = np.asarray(p(x), dtype=float)
    c = np.fft.rfft(vals) * (2.0 / M)
    if chop:
        floor = 8 * np.finfo(float).eps * float(np.max(np.abs(vals), initial=0.0))
        c.real[np.abs(c.real) <= floor] = 0.0
        c.imag[np.abs(c.imag) <= floor] = 0.0
    A0 = float(c[0].real)
    A = c[1 : K_max + 1].real.copy()
    B = -c[1 : K_max + 1].imag.copy()
    return FourierSeries(Lf, A0, A, B, length)


# -- admissibility ---------------------------------------------------------


@dataclass(frozen=True)
class Admissibility:
    T: Length
    L: Length
    p: int
    q: int
    admissible: bool
    C_s: float
    checked_k: int
    min_ratio: float

    @property
    def two_T_over_L(self) -> Fraction:
        return Fraction(self.p, self.q)

    def resonant(self, k) -> np.ndarray:
        return np.asarray(k) % self.q == 0

    def sin_cos(self, k):
        """Exact-residue sin and cos of 2 k pi T / L = pi k p / q."""
        r = (np.asarray(k) * self.p) % (2 * self.q)
        ang = np.pi * r / self.q
        s, c = np.sin(ang), np.cos(ang)
        res = r % self.q == 0
        s = np.where(res, 0.0, s)
        c = np.where(res, np.where(r == 0, 1.0, -1.0), c)
        return s, c


def sine_bound_check(p: int, q: int, kmax: int = DEFAULTS.sine_bound_kmax) -> tuple[bool, float]:
    """Does |sin(k p pi / q)| >= sin(pi / q) hold for k <= kmax with q not dividing k?

    Returns (holds, worst ratio |sin| / sin(pi/q)).
    """
    k = np.arange(1, kmax + 1)
    k = k[k % q != 0]
    if k.size == 0:
        return True, math.inf
    r = (k * p) % (2 * q)
    vals = np.abs(np.sin(np.pi * r / q))
    cs = math.sin(math.pi / q)
    worst = float(np.min(vals) / cs)
    return bool(worst >= 1 - 1e-12), worst


def admissibility(T, L, kmax: int = DEFAULTS.sine_bound_kmax) -> Admissibility:
    Tl, Ll = as_length(T), as_length(L)
    if Tl.coef <= 0 or Ll.coef <= 0:
        raise ValueError("T and L must be positive")
    r = 2 * ratio(Tl, Ll)
    p, q = r.numerator, r.denominator
    ok = q >= 2
    cs = math.sin(math.pi / q) if ok else 0.0
    holds, worst = sine_bound_check(p, q, kmax) if ok else (False, 0.0)
    if ok and not holds:
        raise AssertionError(f"sine bound failed for p/q = {p}/{q}")
    return Admissibility(Tl, Ll, p, q, ok, cs, kmax, worst)


# -- coefficients ----------------------------------------------------------


@dataclass(frozen=True)
class ControlCoefficients:
    L: float
    T: float
    alpha0: float
    beta0: float
    alpha: np.ndarray
    beta: np.ndarray
    alpha_bar: np.ndarray
    beta_bar: np.ndarray
    resonant: np.ndarray
    adm: Admissibility | None = None

    @property
    def K_max(self) -> int:
        return len(self.alpha)

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * np.arange(1, self.K_max + 1) / self.L

    def modes(self, t):
        """(a_k(t), b_k(t)) with shape t.shape + (K,)."""
        wt = np.multiply.outer(np.asarray(t, dtype=float), self.omega)
        c, s = np.cos(wt), np.sin(wt)
        return self.alpha * c + self.beta * s, self.alpha_bar * c + self.beta_bar * s

    def synthesize(self, t, theta, derivative: str | None = None):
        """y(t, theta); ``derivative`` in {None, 't', 'theta'}."""
        t, theta = np.broadcast_arrays(np.asarray(t, float), np.asarray(theta, float))
        out = np.empty(t.shape)
        ft, fth, fo = t.ravel(), theta.ravel(), out.reshape(-1)
        w = self.omega
        step = max(1, 200_000 // max(1, self.K_max))
        for i in range(0, ft.size, step):
            tt, th = ft[i : i + step], fth[i : i + step]
            wt = np.multiply.outer(tt, w)
            ph = np.multiply.outer(th, w)
            c, s = np.cos(wt), np.sin(wt)
            if derivative == "t":
                a = w * (-self.alpha * s + self.beta * c)
                b = w * (-self.alpha_bar * s + self.beta_bar * c)
                base = self.beta0 / 2
            else:
                a = self.alpha * c + self.beta * s
                b = self.alpha_bar * c + self.beta_bar * s
                base = (self.alpha0 + self.beta0 * tt) / 2
            if derivative == "theta":
                val = np.sum(w * (-a * np.sin(ph) + b * np.cos(ph)), axis=-1)
            else:
                val = base + np.sum(a * np.cos(ph) + b * np.sin(ph), axis=-1)
            fo[i : i + step] = val
        return float(out) if out.ndim == 0 else out

    def without_drift(self) -> "ControlCoefficients":
        return replace(self, beta0=0.0)

    def with_resonant(self, beta, beta_bar) -> "ControlCoefficients":
        """Put other values on the resonant modes (any summable choice works)."""
        beta = np.where(self.resonant, np.broadcast_to(beta, self.resonant.shape), self.beta)
        beta_bar = np.where(self.resonant, np.broadcast_to(beta_bar, self.resonant.shape), self.beta_bar)
        return replace(self, beta=beta, beta_bar=beta_bar)

    def velocity(self) -> Profile:
        return control_velocity(self)


def control_coefficients(
    Ff: FourierSeries, Fg: FourierSeries, T, L=None, tol: float = DEFAULTS.obstruction_tol
) -> ControlCoefficients:
    if Ff.K_max != Fg.K_max or abs(Ff.L - Fg.L) > 1e-15 * Ff.L:
        raise ValueError("series must share L and K_max")
    Lx = L if L is not None else (Ff.length or Fg.length)
    if Lx is None:
        raise InadmissibleError("L must be known exactly; analyze with a rational length")
    adm = admissibility(T, Lx)
    if abs(float(adm.L) - Ff.L) > 1e-12 * Ff.L:
        raise ValueError("series period does not match L")
    if not adm.admissible:
        raise InadmissibleError(
            f"2T/L = {adm.p} is an integer: every mode is resonant and the terminal "
            "profile is forced by the initial one"
        )
    T_f = float(adm.T)
    k = np.arange(1, Ff.K_max + 1)
    s, c = adm.sin_cos(k)
    res = adm.resonant(k)
    for kk in k[res]:
        i = kk - 1
        defect = max(abs(Fg.A[i] - c[i] * Ff.A[i]), abs(Fg.B[i] - c[i] * Ff.B[i]))
        if defect > tol:
            raise ResonanceError(int(kk), float(defect))
    safe = np.where(res, 1.0, s)
    beta = np.where(res, 0.0, (Fg.A - c * Ff.A) / safe)
    beta_bar = np.where(res, 0.0, (Fg.B - c * Ff.B) / safe)
    return ControlCoefficients(
        L=Ff.L,
        T=T_f,
        alpha0=Ff.A0,
        beta0=(Fg.A0 - Ff.A0) / T_f,
        alpha=Ff.A.copy(),
        beta=beta,
        alpha_bar=Ff.B.copy(),
        beta_bar=beta_bar,
        resonant=res,
        adm=adm,
    )


def synthesize(c: ControlCoefficients, t, theta):
    return c.synthesize(t, theta)


def control_velocity(c: ControlCoefficients) -> Profile:
    """y_t(0, .) = beta0/2 + sum w_k (beta_k cos + beta_bar_k sin)."""
    w = c.omega
    cb, sb = w * c.beta, w * c.beta_bar

    def d(k):
        def f(x):
            ph = np.multiply.outer(np.asarray(x, float), w)
            co, si = np.cos(ph), np.sin(ph)
            # k-th derivative of cos/sin cycles with period 4
            terms = [(co, si), (-si, co), (-co, -si), (si, -co)][k % 4]
            val = (terms[0] * w**k) @ cb + (terms[1] * w**k) @ sb
            return val + (c.beta0 / 2 if k == 0 else 0.0)

        return f

    return Profile(tuple(d(k) for k in range(4)), period=c.L, label="v")


# -- obstruction and decay -------------------------------------------------


def obstruction_residual(f, g, T, L, K_max: int = DEFAULTS.k_max, n: int = 400, method: str = "shift") -> float:
    """sup_theta |g - forced terminal| in the resonant regime 2T/L = m.

    The forced terminal is mean(g) + sum cos(k m pi) (A_k(f) cos + B_k(f) sin),
    which equals mean(g) - mean(f) + f(theta + m L / 2).  ``method='shift'``
    uses the closed form, ``'series'`` the truncated sum.
    """
    f, g = as_profile(f), as_profile(g)
    r = 2 * ratio(T, L)
    if r.denominator != 1:
        raise ValueError("obstruction applies only when 2T/L is an integer; this pair is admissible")
    m = r.numerator
    Lf = float(as_length(L))
    theta = Lf * np.arange(n) / n
    Ff, Fg = analyze(f, L, K_max), analyze(g, L, K_max)
    if method == "shift":
        forced = Fg.A0 / 2 - Ff.A0 / 2 + f(theta + m * Lf / 2)
    elif method == "series":
        k = np.arange(1, K_max + 1)
        sign = np.where((k * m) % 2 == 0, 1.0, -1.0)
        forced = FourierSeries(Lf, Fg.A0, sign * Ff.A, sign * Ff.B)(theta)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(np.max(np.abs(g(theta) - forced)))


@dataclass(frozen=True)
class DecayReport:
    B3: np.ndarray  # cosine coefficients of F'''
    A3: np.ndarray  # sine coefficients of F'''
    residual_B: np.ndarray  # |B3_k + w_k^3 B_k|
    residual_A: np.ndarray  # |A3_k - w_k^3 A_k|
    tail_A: float
    tail_B: float

    @property
    def max_residual(self) -> float:
        return float(max(self.residual_A.max(initial=0), self.residual_B.max(initial=0)))


def decay_check(F: FourierSeries, F3: FourierSeries) -> DecayReport:
    w3 = F.omega**3
    k2 = np.arange(1, F.K_max + 1) ** 2
    return DecayReport(
        B3=F3.A,
        A3=F3.B,
        residual_B=np.abs(F3.A + w3 * F.B),
        residual_A=np.abs(F3.B - w3 * F.A),
        tail_A=float(np.sum(k2 * np.abs(F.A))),
        tail_B=float(np.sum(k2 * np.abs(F.B))),
    )


def tail_sums(F: FourierSeries, K: int) -> tuple[float, float]:
    k2 = np.arange(1, K + 1) ** 2
    return float(np.sum(k2 * np.abs(F.A[:K]))), float(np.sum(k2 * np.abs(F.B[:K])))


def coefficient_bound(c: ControlCoefficients, Ff: FourierSeries, Fg: FourierSeries, t) -> tuple[float, float]:
    """(sum |a_k(t)|, (1 + 1/C_s) sum |A_k(f)| + (1/C_s) sum |A_k(g)|)."""
    a, _ = c.modes(t)
    cs = c.adm.C_s
    return float(np.sum(np.abs(a))), float((1 + 1 / cs) * np.sum(np.abs(Ff.A)) + np.sum(np.abs(Fg.A)) / cs)


# -- solve -----------------------------------------------------------------


@dataclass
class PeriodicSolution:
    coeffs: ControlCoefficients
    Ff: FourierSeries
    Fg: FourierSeries
    f: Profile
    g: Profile
    field: SolutionField

    def __call__(self, t, theta):
        return self.field(t, theta)

    @property
    def velocity(self) -> Profile:
        return control_velocity(self.coeffs)


def _tail(F: FourierSeries) -> float:
    q = max(1, F.K_max // 4)
    return float(max(np.max(np.abs(F.A[-q:])), np.max(np.abs(F.B[-q:]))))


def solve_periodic(
    f,
    g,
    T,
    L,
    K_max: int = DEFAULTS.k_max,
    strict: bool = True,
    n_check: int = 400,
    energy_samples: int = 50,
) -> PeriodicSolution:
    """Analyze f and g, build the coefficients and attach diagnostics.

    With ``strict`` the data must be effectively band-limited: coefficients
    in the top quarter of the band must fall below 1e-12.
    """
    f, g = as_profile(f), as_profile(g)
    Ff, Fg = analyze(f, L, K_max), analyze(g, L, K_max)
    tail = max(_tail(Ff), _tail(Fg))
    if tail > 1e-12:
        msg = f"Fourier coefficients near K_max={K_max} are still {tail:.2g}; raise K_max"
        if strict:
            raise TruncationError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    c = control_coefficients(Ff, Fg, T, L)
    fld = SolutionField(c.synthesize, c.T, (0.0, c.L), "periodic/fourier")
    sol = PeriodicSolution(c, Ff, Fg, f, g, fld)
    theta = c.L * np.arange(n_check) / n_check
    md = fld.metadata
    md["terminal_sup_error"] = float(np.max(np.abs(c.synthesize(c.T, theta) - g(theta))))
    md["initial_sup_error"] = float(np.max(np.abs(c.synthesize(0.0, theta) - f(theta))))
    md["truncation_tail"] = tail
    md["C_s"] = c.adm.C_s
    md["two_T_over_L"] = str(c.adm.two_T_over_L)
    md["resonant_modes"] = [int(k) for k in np.nonzero(c.resonant)[0] + 1]
    if energy_samples:
        md["energy_drift"] = energy_drift(c.without_drift(), energy_samples)
    return sol


def energy_drift(c: ControlCoefficients, samples: int = 50, h: float = DEFAULTS.energy_fd_h) -> float:
    """max relative deviation of the energy over ``samples`` times in [0, T]."""
    fld = SolutionField(c.synthesize, c.T, (0.0, c.L), "periodic")
    ts = np.linspace(0.0, c.T, samples)
    E = np.array([energy(fld, t, (0.0, c.L), periodic=True, h=h) for t in ts])
    ref = max(abs(E[0]), 1e-300)
    if E[0] == 0 and np.all(E == 0):
        return 0.0
    return float(np.max(np.abs(E - E[0])) / ref)
