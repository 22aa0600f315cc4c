"""Root enumeration for 1-D functions on a finite window.

A function is scanned once on a uniform grid (plus its kinks) and split into
monotone pieces; level sets and sublevel sets are then obtained by bracketed
refinement inside each piece.  Functions follow a small protocol:

    value(x)          vectorized evaluation
    scalar(x)         fast float evaluation
    slope(x, side)    vectorized derivative; side=-1/+1 selects one-sided values
    kinks()           sorted tuple of points where the derivative may jump
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DegenerateLevelSetError, ResolutionError

TOL_ROOT = 1e-12
SCAN_CELLS = 4096
MAX_DEPTH = 8

_XTOL = 1e-15
_RTOL = 4 * np.finfo(float).eps
_PROBES = np.array([0.25, 0.5, 0.75])


@dataclass(frozen=True)
class Root:
    x: float
    tangential: bool = False


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    f_lo: float
    f_hi: float
    trend: int  # +1 increasing, -1 decreasing, 0 constant


@dataclass(frozen=True)
class Decomposition:
    lo: float
    hi: float
    pieces: tuple
    value_scale: float
    slope_scale: float

    def critical_points(self):
        """Interior piece boundaries (extrema and kinks where monotonicity flips)."""
        return [p.hi for p in self.pieces[:-1]]

    def extrema(self):
        """(x, value, kind) for interior local extrema; kind is 'min' or 'max'."""
        out = []
        for left, right in zip(self.pieces[:-1], self.pieces[1:]):
            if left.trend > 0 and right.trend < 0:
                out.append((left.hi, left.f_hi, "max"))
            elif left.trend < 0 and right.trend > 0:
                out.append((left.hi, left.f_hi, "min"))
        return out


def _classify(fn, nodes, depth, out):
    a, b = nodes[:-1], nodes[1:]
    dr = np.asarray(fn.slope(a, side=1), dtype=float)
    dl = np.asarray(fn.slope(b, side=-1), dtype=float)
    fa = np.asarray(fn.value(a), dtype=float)
    fb = np.asarray(fn.value(b), dtype=float)
    q = a[:, None] + (b - a)[:, None] * _PROBES
    fq = np.asarray(fn.value(q), dtype=float)
    seq = np.column_stack([fa, fq, fb])
    diffs = np.diff(seq, axis=1)
    tol = 1e-13 * np.maximum(1.0, np.max(np.abs(seq), axis=1))
    rising = np.all(diffs >= -tol[:, None], axis=1)
    falling = np.all(diffs <= tol[:, None], axis=1)
    flat = rising & falling
    sr, sl = np.sign(dr), np.sign(dl)

    for i in range(len(a)):
        lo, hi = float(a[i]), float(b[i])
        s_r, s_l = sr[i], sl[i]
        if s_r == 0 and s_l == 0 and flat[i]:
            out.append((lo, hi, 0))
            continue
        if s_r * s_l < 0:
            try:
                xc = brentq(lambda t: fn.slope(np.array([t]))[0], lo, hi, xtol=_XTOL, rtol=_RTOL)
            except ValueError:
                xc = 0.5 * (lo + hi)
            out.append((lo, xc, int(s_r)))
            out.append((xc, hi, int(s_l)))
            continue
        trend = int(s_r if s_r != 0 else s_l)
        if trend > 0 and rising[i] or trend < 0 and falling[i]:
            out.append((lo, hi, trend))
            continue
        if depth >= MAX_DEPTH:
            raise ResolutionError(f"cannot resolve monotone pieces in [{lo!r}, {hi!r}]")
        _classify(fn, np.linspace(lo, hi, 9), depth + 1, out)


def decompose(fn, lo, hi, cells=SCAN_CELLS):
    """Split ``fn`` on ``[lo, hi]`` into maximal monotone (or constant) pieces."""
    lo, hi = float(lo), float(hi)
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"invalid window [{lo}, {hi}]")
    nodes = np.linspace(lo, hi, cells + 1)
    kinks = [k for k in fn.kinks() if lo < k < hi]
    if kinks:
        nodes = np.unique(np.concatenate([nodes, kinks]))
    cells_out = []
    _classify(fn, nodes, 0, cells_out)

    merged = []
    for c_lo, c_hi, trend in cells_out:
        if c_hi <= c_lo:
            continue
        if merged and merged[-1][2] == trend:
            merged[-1][1] = c_hi
        else:
            merged.append([c_lo, c_hi, trend])
    pieces = tuple(
        Piece(p_lo, p_hi, fn.scalar(p_lo), fn.scalar(p_hi), trend)
        for p_lo, p_hi, trend in merged
    )
    vals = np.asarray(fn.value(nodes), dtype=float)
    slopes = np.asarray(fn.slope(nodes[:-1], side=1), dtype=float)
    return Decomposition(lo, hi, pieces, float(np.max(np.abs(vals))), float(np.max(np.abs(slopes))))


def _refine(fn, v, lo, hi):
    return brentq(lambda t: fn.scalar(t) - v, lo, hi, xtol=_XTOL, rtol=_RTOL)


def level_roots(fn, dec, v, tol_root=TOL_ROOT, flat_ok=False):
    """All solutions of fn(x) = v on the decomposition window, sorted.

    Roots where the function touches the level without crossing it, or crosses
    with a vanishing slope, are flagged tangential.  A piece that is flat at the
    level raises unless ``flat_ok``, in which case its ends are returned.
    """
    v = float(v)
    vtol = tol_root * max(1.0, abs(v))
    stol = 1e-9 * max(1.0, dec.slope_scale)
    pieces = dec.pieces
    found = []
    for p in pieces:
        if p.trend == 0:
            if abs(p.f_lo - v) <= vtol:
                if flat_ok:
                    found.extend((Root(p.lo, True), Root(p.hi, True)))
                    continue
                raise DegenerateLevelSetError(f"function is flat at level {v} on [{p.lo}, {p.hi}]")
            continue
        g_lo, g_hi = p.f_lo - v, p.f_hi - v
        if g_lo * g_hi < 0 and abs(g_lo) > vtol and abs(g_hi) > vtol:
            x = _refine(fn, v, p.lo, p.hi)
            slope = abs(float(fn.slope(np.array([x]))[0]))
            found.append(Root(x, slope <= stol))

    bounds = [pieces[0].lo] + [p.hi for p in pieces]
    for j, x in enumerate(bounds):
        fx = pieces[j - 1].f_hi if j > 0 else pieces[0].f_lo
        if abs(fx - v) > vtol:
            continue
        left = pieces[j - 1].f_lo - v if j > 0 else None
        right = pieces[j].f_hi - v if j < len(pieces) else None
        if left is not None and right is not None:
            tangential = not (left * right < 0)
        else:
            side = -1 if right is None else 1
            tangential = abs(float(fn.slope(np.array([x]), side=side)[0])) <= stol
        found.append(Root(x, tangential))

    found.sort(key=lambda r: r.x)
    out = []
    for r in found:
        if out and abs(r.x - out[-1].x) <= 1e-13 * max(1.0, abs(r.x)):
            if r.tangential and not out[-1].tangential:
                out[-1] = r
            continue
        out.append(r)
    return out


def _clip(fn, p, lo, hi):
    a, b = max(p.lo, lo), min(p.hi, hi)
    if b <= a:
        return None
    f_a = p.f_lo if a == p.lo else fn.scalar(a)
    f_b = p.f_hi if b == p.hi else fn.scalar(b)
    return Piece(a, b, f_a, f_b, p.trend)


def sublevel_intervals(fn, dec, v, lo=None, hi=None):
    """{x : fn(x) <= v} within the decomposition window (optionally clipped)
    as a sorted list of disjoint closed intervals ``[a, b]`` with ``b > a``."""
    v = float(v)
    lo = dec.lo if lo is None else max(float(lo), dec.lo)
    hi = dec.hi if hi is None else min(float(hi), dec.hi)
    out = []
    for p0 in dec.pieces:
        if p0.hi <= lo or p0.lo >= hi:
            continue
        p = _clip(fn, p0, lo, hi)
        if p is None:
            continue
        if p.trend == 0:
            if p.f_lo <= v:
                out.append([p.lo, p.hi])
        elif p.trend > 0:
            if p.f_lo > v:
                continue
            out.append([p.lo, p.hi if p.f_hi <= v else _refine(fn, v, p.lo, p.hi)])
        else:
            if p.f_hi > v:
                continue
            out.append([p.lo if p.f_lo <= v else _refine(fn, v, p.lo, p.hi), p.hi])
    merged = []
    for a, b in out:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged if b > a]


def safeguarded_newton(fg, lo, hi, xtol=1e-15, ftol=0.0, maxiter=200, x0=None):
    """Root of a nondecreasing function on a bracket with f(lo) <= 0 <= f(hi).

    ``fg(x)`` returns ``(f, df)``.  Newton steps that leave the current bracket
    or fail to halve it are replaced by bisection.
    """
    f_lo, _ = fg(lo)
    f_hi, _ = fg(hi)
    if f_lo > 0 or f_hi < 0:
        raise ValueError("root not bracketed")
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    x = x0 if x0 is not None and lo < x0 < hi else 0.5 * (lo + hi)
    dx_old = hi - lo
    dx = dx_old
    f, df = fg(x)
    for _ in range(maxiter):
        if abs(f) <= ftol:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        newton_ok = df > 0 and lo < x - f / df < hi and abs(2 * f) < abs(dx_old * df)
        dx_old = dx
        if newton_ok:
            dx = f / df
            x_new = x - dx
        else:
            x_new = 0.5 * (lo + hi)
            dx = x - x_new
        if abs(x_new - x) <= xtol + _RTOL * abs(x) or hi - lo <= xtol + _RTOL * abs(x):
            return x_new
        x = x_new
        f, df = fg(x)
    raise ConvergenceError("safeguarded Newton did not converge", residuals=[f])
