"""One-variable profiles with derivatives.

A :class:`Profile` bundles an evaluator for a function and for as many of
its derivatives as are known.  Profiles come from parsed formulas (exact
symbolic derivatives), from splines, or from programmatic piecewise
constructions in the solver modules.  All evaluators are vectorized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .expr import Expression, differentiate, parse

Func = Callable[[np.ndarray], np.ndarray]


def _out(x, y):
    if np.ndim(x) == 0:
        return float(y)
    return np.asarray(y, dtype=float)


@dataclass(frozen=True)
class Profile:
    """A function of one variable and its known derivatives.

    ``funcs[k]`` evaluates the k-th derivative.  ``interval`` is the
    validity interval and ``period`` an optional period length.
    """

    funcs: tuple[Func, ...]
    interval: tuple[float, float] = (-math.inf, math.inf)
    period: float | None = None
    label: str = ""
    expr: Expression | None = field(default=None, compare=False)

    @property
    def order(self) -> int:
        """Highest available derivative order."""
        return len(self.funcs) - 1

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, k: int = 1):
        if k > self.order:
            raise ValueError(f"profile {self.label!r} has no derivative of order {k}")
        xa = np.asarray(x, dtype=float)
        return _out(x, self.funcs[k](xa))

    def d(self, k: int = 1) -> "Profile":
        """The k-th derivative as a profile of its own."""
        if k > self.order:
            raise ValueError(f"profile {self.label!r} has no derivative of order {k}")
        label = f"{self.label}{chr(39) * k}" if self.label else ""
        return Profile(self.funcs[k:], self.interval, self.period, label)

    def check_periodic(self, n: int = 257, tol: float = 1e-9) -> float:
        """Max |p(x+L) - p(x)| over sample points; raises if above tol."""
        if self.period is None:
            raise ValueError("profile is not periodic")
        x = np.linspace(0.0, self.period, n)
        gap = float(np.max(np.abs(self(x + self.period) - self(x))))
        if gap > tol:
            raise ValueError(f"periodicity violated by {gap:.3g}")
        return gap

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_expr(
        cls,
        e: Expression,
        order: int = 3,
        interval=(-math.inf, math.inf),
        period: float | None = None,
        label: str = "",
    ) -> "Profile":
        if len(e.variables) != 1:
            raise ValueError("profiles take one variable")
        if e.has_abs:
            warnings.warn(
                f"profile {label or str(e)!r} uses abs; smoothness is only guaranteed "
                "where its argument keeps one sign",
                RuntimeWarning,
                stacklevel=2,
            )
        exprs = [e] + [differentiate(e, k) for k in range(1, order + 1)]
        funcs = tuple(_expr_func(ek) for ek in exprs)
        return cls(funcs, tuple(interval), period, label or str(e), e)

    @classmethod
    def from_text(cls, text: str, variable: str = "x", **kw) -> "Profile":
        return cls.from_expr(parse(text, (variable,)), **kw)

    @classmethod
    def constant(cls, c: float, order: int = 3, label: str = "") -> "Profile":
        c = float(c)
        funcs = [lambda x, c=c: np.full(np.shape(x), c)]
        funcs += [lambda x: np.zeros(np.shape(x))] * order
        return cls(tuple(funcs), label=label or repr(c))

    @classmethod
    def from_funcs(cls, funcs: Sequence[Func], **kw) -> "Profile":
        wrapped = tuple(_vectorize(f) for f in funcs)
        return cls(wrapped, **kw)


def _expr_func(e: Expression) -> Func:
    def f(x):
        return np.asarray(e(x), dtype=float)

    return f


def _vectorize(f: Func) -> Func:
    def g(x):
        return np.asarray(f(np.asarray(x, dtype=float)), dtype=float)

    return g


def as_profile(p, order: int = 3, **kw) -> Profile:
    """Coerce strings, expressions, numbers and callables to a Profile."""
    if isinstance(p, Profile):
        return p
    if isinstance(p, str):
        return Profile.from_text(p, order=order, **kw)
    if isinstance(p, Expression):
        return Profile.from_expr(p, order=order, **kw)
    if isinstance(p, (int, float)):
        return Profile.constant(p, order=order)
    if callable(p):
        return Profile.from_funcs([p], **kw)
    raise TypeError(f"cannot make a profile from {type(p).__name__}")
