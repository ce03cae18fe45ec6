"""Adaptive Simpson quadrature, batched over many intervals at once.

Every integral is first split at the supplied breakpoints that fall
strictly inside it; each piece then gets a share of the tolerance
proportional to its length and is refined by the classical
Simpson/Richardson criterion ``|S2 - S1| <= 15 tol``.  All pending
sub-intervals of all integrals are refined together so the integrand is
called on large arrays.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..constants import DEFAULTS

_EPS = np.finfo(float).eps
_MAX_ACTIVE = 4_000_000


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        self.achieved = achieved
        super().__init__(f"{message}; achieved error estimate {achieved:.3g}")


def _split(a: np.ndarray, b: np.ndarray, breakpoints: np.ndarray | None):
    """Cut [a_i, b_i] at interior breakpoints; return piece ends and owners."""
    n = a.size
    if breakpoints is None or breakpoints.size == 0:
        return a.copy(), b.copy(), np.arange(n)
    bp = np.unique(breakpoints)
    lo = np.searchsorted(bp, a, side="right")
    hi = np.searchsorted(bp, b, side="left")
    counts = np.maximum(hi - lo, 0)
    npieces = counts + 1
    owner = np.repeat(np.arange(n), npieces)
    # within-owner index 0..npieces-1
    first = np.cumsum(npieces) - npieces
    local = np.arange(owner.size) - first[owner]
    # left end: a for local 0 else bp[lo + local - 1]
    left = np.where(local == 0, a[owner], bp[np.clip(lo[owner] + local - 1, 0, bp.size - 1)])
    right = np.where(
        local == npieces[owner] - 1, b[owner], bp[np.clip(lo[owner] + local, 0, bp.size - 1)]
    )
    return left, right, owner


def integrate_many(
    func: Callable[[np.ndarray], np.ndarray],
    a,
    b,
    tol: float = DEFAULTS.quad_tol,
    breakpoints: Sequence[float] | np.ndarray | None = None,
    max_depth: int = DEFAULTS.quad_max_depth,
    min_depth: int = DEFAULTS.quad_min_depth,
    return_error: bool = False,
):
    """Integrate ``func`` over each ``[a_i, b_i]`` with absolute tolerance ``tol``.

    ``a`` and ``b`` broadcast against each other; reversed limits give the
    negated integral.  Raises :class:`QuadratureError` if some integral is
    still unconverged at ``max_depth`` with an error estimate above ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a_in, b_in = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    shape = a_in.shape
    a0 = a_in.ravel()
    b0 = b_in.ravel()
    sign = np.where(b0 < a0, -1.0, 1.0)
    lo = np.minimum(a0, b0)
    hi = np.maximum(a0, b0)
    n = lo.size
    total = np.zeros(n)
    errest = np.zeros(n)
    bad = np.zeros(n, dtype=bool)

    bp = None if breakpoints is None else np.asarray(breakpoints, dtype=float).ravel()
    pa, pb, owner = _split(lo, hi, bp)
    length = hi - lo
    keep = pb > pa
    pa, pb, owner = pa[keep], pb[keep], owner[keep]
    if pa.size:
        share = (pb - pa) / length[owner]
        ptol = tol * share
        m = 0.5 * (pa + pb)
        vals = func(np.concatenate([pa, m, pb]))
        vals = np.asarray(vals, dtype=float)
        k = pa.size
        fa, fm, fb = vals[:k], vals[k : 2 * k], vals[2 * k :]
        whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb)
        depth = 0
        while pa.size:
            m = 0.5 * (pa + pb)
            lm = 0.5 * (pa + m)
            rm = 0.5 * (m + pb)
            vals = np.asarray(func(np.concatenate([lm, rm])), dtype=float)
            k = pa.size
            flm, frm = vals[:k], vals[k:]
            left = (m - pa) / 6.0 * (fa + 4.0 * flm + fm)
            right = (pb - m) / 6.0 * (fm + 4.0 * frm + fb)
            s2 = left + right
            diff = s2 - whole
            err = np.abs(diff)
            if not np.all(np.isfinite(s2)):
                raise QuadratureError("integrand returned non-finite values", float("inf"))
            done = (err <= 15.0 * ptol) | (err <= 64.0 * _EPS * np.abs(s2))
            if depth < min_depth:
                done &= False
            tiny = (m <= pa) | (m >= pb)
            done |= tiny
            if depth >= max_depth:
                np.logical_or.at(bad, owner[~done], True)
                done[:] = True
            if np.any(done):
                np.add.at(total, owner[done], s2[done] + diff[done] / 15.0)
                np.add.at(errest, owner[done], err[done] / 15.0)
            todo = ~done
            if not np.any(todo):
                break
            pa, pb, m = pa[todo], pb[todo], m[todo]
            fa, fm, fb, flm, frm = fa[todo], fm[todo], fb[todo], flm[todo], frm[todo]
            left, right, ptol, owner = left[todo], right[todo], ptol[todo] / 2.0, owner[todo]
            pa = np.concatenate([pa, m])
            pb = np.concatenate([m, pb])
            fa, fm, fb = (
                np.concatenate([fa, fm]),
                np.concatenate([flm, frm]),
                np.concatenate([fm, fb]),
            )
            whole = np.concatenate([left, right])
            ptol = np.concatenate([ptol, ptol])
            owner = np.concatenate([owner, owner])
            depth += 1
            if pa.size > _MAX_ACTIVE:
                raise QuadratureError("too many active sub-intervals", float("inf"))
    # capped integrals only fail if their total error estimate is too big
    bad &= errest > tol
    if np.any(bad):
        raise QuadratureError(
            f"no convergence within depth {max_depth}", float(np.max(errest[bad]))
        )
    out = (sign * total).reshape(shape)
    err_out = errest.reshape(shape)
    if shape == ():
        out, err_out = float(out), float(err_out)
    return (out, err_out) if return_error else out


def integrate(p, a: float, b: float, tol: float = DEFAULTS.quad_tol, breakpoints=None) -> float:
    """Adaptive Simpson integral of profile or callable ``p`` over ``[a, b]``."""
    if a > b:
        raise ValueError("integrate expects a <= b")
    if a == b:
        return 0.0

    def f(x):
        return np.asarray(p(x), dtype=float)

    return float(integrate_many(f, a, b, tol=tol, breakpoints=breakpoints))
