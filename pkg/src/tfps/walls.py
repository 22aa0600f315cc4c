"""Separated configurations: topology enumeration and stationarity solves.

A configuration is a sorted list of separators splitting the window into
domains with alternating species labels.  A separator is either a domain wall
(both neighbouring densities positive and equal) or a gap (both neighbouring
densities vanish there).  Inside a domain labelled k the density is
mu_k - V_k on the sublevel set {V_k <= mu_k}.

Fixed-N solves are parameterized by the wall level f = mu1 - mu2: walls sit on
roots of phi = V1 - V2 = f, the normalizations give mu_k(f) independently per
species, and the scalar equation mu1(f) - mu2(f) = f is solved by bracketing.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import quadrature, roots
from .errors import (
    DegenerateContinuumError,
    InfeasibleTopologyError,
    ValidationError,
)
from .potential import LinearCombo
from .profiles import EDGE, OPEN, SINGLE1, SINGLE2, WALL, ZERO, DensityProfile, Segment, Support, common_window
from .scaling import FIXED_MU, FIXED_N
from .tolerances import DEFAULT

WALL_SEP = "wall"
GAP_SEP = "gap"

LEVEL_SAMPLES = 24
MAX_PATTERNS = 1 << 14
_WINDOW_RETRIES = 3


class PhiFunction(LinearCombo):
    """phi(x) = V1(x) - V2(x)."""

    def __init__(self, V1, V2):
        super().__init__([(1.0, V1), (-1.0, V2)])
        self.V1, self.V2 = V1, V2
        self._dec = {}

    def decomposition(self, window):
        key = (float(window[0]), float(window[1]))
        if key not in self._dec:
            self._dec[key] = roots.decompose(self, *key)
        return self._dec[key]

    def is_constant(self, window):
        return all(p.trend == 0 for p in self.decomposition(window).pieces)

    def derivative(self, x, side=None):
        return float(self.slope(np.array([float(x)]), side=side)[0])


@dataclass(frozen=True)
class Skeleton:
    n: int
    leading: int
    maximal: bool = False


@dataclass
class WallConfig:
    R: tuple
    s: tuple
    leading_species: int
    labels: tuple
    separators: tuple
    V1: object
    V2: object
    window: tuple
    ensemble: str = FIXED_N
    mu1: float = math.nan
    mu2: float = math.nan
    N1: float = math.nan
    N2: float = math.nan
    S1: Support = field(default_factory=Support)
    S2: Support = field(default_factory=Support)
    is_maximal: bool = False
    beta: float | None = None
    flags: tuple = ()

    @property
    def n(self):
        return len(self.R)

    @property
    def gaps(self):
        return tuple(x for x, kind in self.separators if kind == GAP_SEP)

    def wall_densities(self):
        R = np.asarray(self.R, dtype=float)
        if R.size == 0:
            return np.empty(0), np.empty(0)
        return self.mu1 - self.V1.value(R), self.mu2 - self.V2.value(R)

    def profile(self, alpha=0.0):
        segs = [Segment(a, b, SINGLE1) for a, b in self.S1.intervals]
        segs += [Segment(a, b, SINGLE2) for a, b in self.S2.intervals]
        segs.sort(key=lambda s: s.lo)
        return DensityProfile(tuple(segs), self.mu1, self.mu2, alpha, self.V1, self.V2, self.window, walls=self.R)

    def key(self):
        def rnd(iv):
            return tuple((round(a, 9), round(b, 9)) for a, b in iv)

        return rnd(self.S1.intervals), rnd(self.S2.intervals)

    def sort_key(self):
        return (self.n, self.leading_species, self.R, self.gaps)

    def label(self):
        pattern = "".join(str(k) for k in self.labels)
        return f"n{self.n}-lead{self.leading_species}-{pattern}"


# -- simple operations -----------------------------------------------------------


def stationarity_residual(cfg, mu1=None, mu2=None):
    """(mu1 - mu2) - phi(R_j) for every wall."""
    mu1 = cfg.mu1 if mu1 is None else mu1
    mu2 = cfg.mu2 if mu2 is None else mu2
    R = np.asarray(cfg.R, dtype=float)
    return list((mu1 - mu2) - (cfg.V1.value(R) - cfg.V2.value(R)))


def proportional_wall_level(mu1, mu2, beta):
    """Common potential value V(R_j) of all walls when V2 = beta V1."""
    if beta == 1.0:
        raise DegenerateContinuumError("beta = 1 makes the wall level undefined")
    return (mu1 - mu2) / (1.0 - beta)


def max_transversal_roots(fn, dec):
    """Largest number of crossing roots of fn = f over all levels f."""
    vals = sorted({p.f_lo for p in dec.pieces} | {p.f_hi for p in dec.pieces})
    best = 0
    for a, b in zip(vals[:-1], vals[1:]):
        mid = 0.5 * (a + b)
        best = max(best, sum(1 for p in dec.pieces if p.trend != 0 and min(p.f_lo, p.f_hi) < mid < max(p.f_lo, p.f_hi)))
    return best


def wall_bound(V1, V2, window):
    phi = PhiFunction(V1, V2)
    win = common_window(V1, V2, window)
    if phi.is_constant(win):
        # walls are unconstrained by the level; one wall is always admissible
        return max(1, max_transversal_roots(V1, V1.decomposition(win)))
    return max_transversal_roots(phi, phi.decomposition(win))


def enumerate_topologies(V1, V2, max_walls, window):
    """Skeletons (n, leading species) for n up to the level-set bound."""
    if max_walls is not None and max_walls < 0:
        raise ValidationError("max_walls must be nonnegative")
    bound = wall_bound(V1, V2, window)
    top = bound if max_walls is None else min(max_walls, bound)
    return [Skeleton(n, lead, n == bound) for n in range(top + 1) for lead in (1, 2)]


# -- per-species normalization ------------------------------------------------------


class _Species:
    """Mass and support of one species over a union of domains."""

    def __init__(self, V, window):
        self.V = V
        self.window = window
        self.dec = V.decomposition(window)
        self.breaks = tuple(V.kinks())
        self.fin = V.finite_interval()
        self._cache = {}

    def vmin(self, domains):
        best = math.inf
        for lo, hi in domains:
            best = min(best, self.V.scalar(lo), self.V.scalar(hi))
            for p in self.dec.pieces:
                if lo < p.lo < hi:
                    best = min(best, p.f_lo)
        return best

    def intervals(self, mu, domains):
        out = []
        for lo, hi in domains:
            out.extend(roots.sublevel_intervals(self.V, self.dec, mu, lo, hi))
        return out

    def hits_window(self, intervals):
        lo_w, hi_w = self.window
        return any((a <= lo_w and lo_w > self.fin[0]) or (b >= hi_w and hi_w < self.fin[1]) for a, b in intervals)

    def mass(self, mu, domains):
        total, meas = 0.0, 0.0
        for a, b in self.intervals(mu, domains):
            x, w = quadrature.nodes_weights([(a, b)], self.breaks)
            total += float(np.dot(w, mu - self.V.value(x)))
            meas += b - a
        return total, meas

    def solve(self, N, domains):
        """Chemical potential giving mass N on ``domains`` (cached)."""
        key = (N, tuple(domains))
        if key in self._cache:
            return self._cache[key]
        lo = self.vmin(domains)
        length = sum(b - a for a, b in domains)
        if N <= 0 or length <= 0:
            self._cache[key] = lo
            return lo
        hi = lo + 2.0 * N / length
        for _ in range(200):
            if self.mass(hi, domains)[0] >= N:
                break
            hi = lo + 2.0 * (hi - lo)
        scale = max(1.0, abs(lo), abs(hi))

        def fg(mu):
            m, s = self.mass(mu, domains)
            return m - N, s

        mu = roots.safeguarded_newton(fg, lo, hi, xtol=4e-16 * scale, maxiter=400)
        self._cache[key] = mu
        return mu


# -- configuration assembly ----------------------------------------------------------


def _domains(seps, window):
    cuts = [window[0]] + [x for x, _ in seps] + [window[1]]
    return list(zip(cuts[:-1], cuts[1:]))


def _labels(lead, count):
    other = 2 if lead == 1 else 1
    return tuple(lead if i % 2 == 0 else other for i in range(count))


def _species_domains(seps, lead, window):
    doms = _domains(seps, window)
    labs = _labels(lead, len(doms))
    return [d for d, k in zip(doms, labs) if k == 1], [d for d, k in zip(doms, labs) if k == 2], labs


def _support(intervals, walls, sp):
    kinds = []
    for a, b in intervals:
        pair = []
        for x in (a, b):
            if x in sp.fin:
                pair.append(EDGE)
            elif any(abs(x - w) <= 1e-12 * max(1.0, abs(w)) for w in walls):
                pair.append(WALL)
            elif x <= sp.window[0] or x >= sp.window[1]:
                pair.append(OPEN)
            else:
                pair.append(ZERO)
        kinds.append(tuple(pair))
    return Support(tuple((a, b) for a, b in intervals), tuple(kinds))


class _Context:
    def __init__(self, V1, V2, window, tol):
        self.V1, self.V2 = V1, V2
        self.window = common_window(V1, V2, window)
        self.tol = tol
        self.phi = PhiFunction(V1, V2)
        self.phi_dec = self.phi.decomposition(self.window)
        self.sp = (_Species(V1, self.window), _Species(V2, self.window))
        self.constant_phi = all(p.trend == 0 for p in self.phi_dec.pieces)
        self.scale = max(1.0, self.phi_dec.value_scale)

    def transversal_roots(self, f):
        rts = roots.level_roots(self.phi, self.phi_dec, f, self.tol.tol_root, flat_ok=True)
        return [r.x for r in rts if not r.tangential]

    def assemble(self, seps, lead, mu1, mu2, ensemble, N=(math.nan, math.nan), beta=None):
        d1, d2, labs = _species_domains(seps, lead, self.window)
        iv1 = self.sp[0].intervals(mu1, d1)
        iv2 = self.sp[1].intervals(mu2, d2)
        walls = [x for x, kind in seps if kind == WALL_SEP]
        s = []
        doms = _domains(seps, self.window)
        for i, (x, kind) in enumerate(seps):
            if kind == WALL_SEP:
                s.append(1 if labs[i] == 1 else -1)
        populated = [k for (lo, hi), k in zip(doms, labs) if any(lo <= a < hi for a, _ in (iv1 if k == 1 else iv2))]
        lead_actual = populated[0] if populated else lead
        return WallConfig(
            R=tuple(walls),
            s=tuple(s),
            leading_species=lead_actual,
            labels=labs,
            separators=tuple(seps),
            V1=self.V1,
            V2=self.V2,
            window=self.window,
            ensemble=ensemble,
            mu1=mu1,
            mu2=mu2,
            N1=N[0],
            N2=N[1],
            S1=_support(iv1, walls, self.sp[0]),
            S2=_support(iv2, walls, self.sp[1]),
            beta=beta,
        )

    def check(self, cfg, N=None):
        """Reason string if ``cfg`` is not a valid separated configuration, else None."""
        tol = self.tol
        r1, r2 = cfg.wall_densities()
        for a, b in zip(r1, r2):
            if not (a > tol.tol_root * self.scale and b > tol.tol_root * self.scale):
                return "wall without density"
            if abs(a - b) > tol.tol_stat * max(1.0, a):
                return "not stationary"
        for i, (x, kind) in enumerate(cfg.separators):
            if kind != GAP_SEP:
                continue
            for k in (cfg.labels[i], cfg.labels[i + 1]):
                t = (cfg.mu1 - self.V1.scalar(x)) if k == 1 else (cfg.mu2 - self.V2.scalar(x))
                if t > tol.tol_root * self.scale:
                    return "gap with density"
        if any(kind == OPEN for pair in cfg.S1.kinds + cfg.S2.kinds for kind in pair):
            return "window"
        if N is not None:
            if N[0] > 0 and not cfg.S1:
                return "empty species 1"
            if N[1] > 0 and not cfg.S2:
                return "empty species 2"
        return None

    def mark_maximal(self, cfg):
        f = cfg.mu1 - cfg.mu2
        walls = set(cfg.R)
        cands = [x for x in self.transversal_roots(f) if cfg.mu1 - self.V1.scalar(x) > self.tol.tol_root * self.scale]
        cfg.is_maximal = bool(cands) and all(
            any(abs(x - w) <= 1e-9 * max(1.0, abs(x)) for w in walls) for x in cands
        ) and len(cfg.R) == len(cands)
        return cfg


def _dedupe(configs):
    seen, out = set(), []
    for c in sorted(configs, key=lambda c: c.sort_key()):
        k = c.key()
        if k not in seen:
            seen.add(k)
            out.append(c)
    return out


def _subsets(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


# -- fixed chemical potentials ----------------------------------------------------------


def fixed_mu_gaps(V1, V2, mu1, mu2, window):
    """Midpoints of interior empty intervals {mu1 <= V1} n {mu2 <= V2}."""
    from .profiles import _partition, _t

    win = common_window(V1, V2, window)
    t1, t2 = _t(mu1, V1), _t(mu2, V2)
    pts = _partition([t1, t2], win, V1.kinks() + V2.kinks())
    mids = 0.5 * (pts[:-1] + pts[1:])
    empty = (t1.value(mids) <= 0) & (t2.value(mids) <= 0)
    runs, cur = [], None
    for a, b, e in zip(pts[:-1], pts[1:], empty):
        if e:
            cur = [cur[0], b] if cur else [a, b]
        elif cur:
            runs.append(cur)
            cur = None
    if cur:
        runs.append(cur)
    return [0.5 * (a + b) for a, b in runs if a > win[0] and b < win[1]]


def solve_fixed_mu(skeleton, mu1, mu2, V1, V2, window, beta=None, tol=DEFAULT):
    """All separated stationary configurations of ``skeleton`` at fixed mu."""
    ctx = _Context(V1, V2, window, tol)
    level = mu1 - mu2
    if ctx.constant_phi and skeleton.n > 0:
        c = ctx.phi.scalar(0.5 * (ctx.window[0] + ctx.window[1]))
        if abs(c - level) <= tol.tol_root * max(1.0, abs(level)):
            raise DegenerateContinuumError("phi is constant at the wall level: walls can sit anywhere")
        return []
    cands = [x for x in ctx.transversal_roots(level) if mu1 - V1.scalar(x) > tol.tol_root * ctx.scale]
    gaps = fixed_mu_gaps(V1, V2, mu1, mu2, ctx.window)
    if skeleton.n > len(cands):
        raise InfeasibleTopologyError(f"{skeleton.n} walls requested but phi = {level} has {len(cands)} usable roots")
    if math.comb(len(cands), skeleton.n) * 2 ** len(gaps) * 2 > MAX_PATTERNS:
        raise ValidationError("too many wall patterns; lower max_walls or narrow the window")
    out = []
    for walls in itertools.combinations(cands, skeleton.n):
        for gs in _subsets(gaps):
            seps = sorted([(x, WALL_SEP) for x in walls] + [(x, GAP_SEP) for x in gs])
            for lead in (1, 2):
                cfg = ctx.assemble(seps, lead, mu1, mu2, FIXED_MU, beta=beta)
                if cfg.leading_species != skeleton.leading or ctx.check(cfg) is not None:
                    continue
                if not (cfg.S1 or cfg.S2):
                    continue
                out.append(ctx.mark_maximal(cfg))
    return _dedupe(out)


# -- fixed particle numbers ---------------------------------------------------------------


def fixed_n_gaps(V1, V2, window):
    """Gap candidates for fixed N: interior local maxima of either potential."""
    win = common_window(V1, V2, window)
    pts = set()
    for V in (V1, V2):
        for x, _, kind in V.decomposition(win).extrema():
            if kind == "max":
                pts.add(round(x, 12))
    return sorted(pts)


def _single_mu(V, N, window):
    sp = _Species(V, window)
    return sp.solve(N, [window])


def fixed_n_window(V1, V2, N1, N2, margin=0.1):
    """Window wide enough for any separated configuration of N1 + N2 particles."""
    levels = []
    for V in (V1, V2):
        lo_f, hi_f = V.finite_interval()
        if math.isfinite(lo_f) and math.isfinite(hi_f):
            levels.append((V, None))
            continue
        a, b = V.domain_hint
        vmin = min(V.scalar(x) for x in np.linspace(a, b, 257))
        level = vmin + 1.0
        for _ in range(60):
            win = V.window_for(level, 0.0)
            sp = _Species(V, win)
            vmin = min(vmin, sp.vmin([win]))
            if sp.mass(level, [win])[0] >= N1 + N2:
                break
            level = vmin + 2.0 * (level - vmin)
        mu = _single_mu(V, N1 + N2, V.window_for(level, 0.0))
        levels.append((V, vmin + 4.0 * (mu - vmin)))
    lo, hi = math.inf, -math.inf
    for V, level in levels:
        w = V.finite_interval() if level is None else V.window_for(level, margin)
        lo, hi = min(lo, w[0]), max(hi, w[1])
    return common_window(V1, V2, (lo, hi))


def _expand(window, V1, V2):
    c, h = 0.5 * (window[0] + window[1]), window[1] - window[0]
    return common_window(V1, V2, (c - h, c + h))


def _regimes(ctx):
    pieces = ctx.phi_dec.pieces
    vals = sorted({p.f_lo for p in pieces} | {p.f_hi for p in pieces})
    out = []
    for a, b in zip(vals[:-1], vals[1:]):
        mid = 0.5 * (a + b)
        idx = [i for i, p in enumerate(pieces) if p.trend != 0 and min(p.f_lo, p.f_hi) < mid < max(p.f_lo, p.f_hi)]
        if idx:
            out.append((a, b, idx))
    return out


def _level_samples(a, b, k=LEVEL_SAMPLES):
    i = np.arange(k) + 0.5
    return a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * i / k))


class _FixedN:
    def __init__(self, ctx, N1, N2, beta):
        self.ctx, self.N, self.beta = ctx, (N1, N2), beta

    def mus(self, seps, lead):
        d1, d2, _ = _species_domains(seps, lead, self.ctx.window)
        if (self.N[0] > 0) != bool(d1) or (self.N[1] > 0) != bool(d2):
            return None
        mu1 = self.ctx.sp[0].solve(self.N[0], d1) if d1 else math.nan
        mu2 = self.ctx.sp[1].solve(self.N[1], d2) if d2 else math.nan
        return mu1, mu2

    def finish(self, seps, lead, mu1, mu2):
        cfg = self.ctx.assemble(seps, lead, mu1, mu2, FIXED_N, self.N, self.beta)
        reason = self.ctx.check(cfg, self.N)
        if reason == "window":
            raise _WindowHit()
        return None if reason else cfg

    def roots_in(self, pieces, f):
        out = []
        for i in pieces:
            p = self.ctx.phi_dec.pieces[i]
            out.append(brentq(lambda x: self.ctx.phi.scalar(x) - f, p.lo, p.hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        return out


class _WindowHit(Exception):
    pass


class _Invalid(Exception):
    pass


def _solve_fixed_n_once(skeleton, N1, N2, V1, V2, window, beta, tol):
    ctx = _Context(V1, V2, window, tol)
    job = _FixedN(ctx, N1, N2, beta)
    gaps = fixed_n_gaps(V1, V2, ctx.window)
    found = []
    lead = skeleton.leading

    if skeleton.n == 0:
        for gs in _subsets(gaps):
            seps = [(x, GAP_SEP) for x in gs]
            mus = job.mus(seps, lead)
            if mus is None:
                continue
            cfg = job.finish(seps, lead, *mus)
            if cfg is not None:
                found.append(cfg)
        return [ctx.mark_maximal(c) for c in found if c.leading_species == lead]

    if ctx.constant_phi:
        if skeleton.n >= 2:
            raise DegenerateContinuumError("phi is constant: two or more walls form a continuum")
        c = ctx.phi.scalar(0.5 * (ctx.window[0] + ctx.window[1]))
        for gs in _subsets(gaps):
            fixed = [ctx.window[0], *gs, ctx.window[1]]
            for a, b in zip(fixed[:-1], fixed[1:]):
                found.extend(_scan_wall(job, gs, lead, a, b, c))
        return [ctx.mark_maximal(cfg) for cfg in found if cfg.leading_species == lead]

    for f_lo, f_hi, pieces in _regimes(ctx):
        m = len(pieces)
        if skeleton.n > m:
            continue
        fs = _level_samples(f_lo, f_hi)
        rts = [job.roots_in(pieces, f) for f in fs]
        for w_idx in itertools.combinations(range(m), skeleton.n):
            for gs in _subsets(gaps):
                found.extend(_scan_level(job, fs, rts, pieces, w_idx, gs, lead))
    return [ctx.mark_maximal(c) for c in found if c.leading_species == lead]


def _seps_for(rts, w_idx, gs):
    walls = [rts[i] for i in w_idx]
    if any(abs(w - g) < 1e-12 for w in walls for g in gs):
        return None
    return sorted([(x, WALL_SEP) for x in walls] + [(x, GAP_SEP) for x in gs])


def _signature(seps):
    return tuple(kind for _, kind in seps)


def _scan_level(job, fs, rts, pieces, w_idx, gs, lead):
    vals = []
    for f, r in zip(fs, rts):
        seps = _seps_for(r, w_idx, gs)
        mus = job.mus(seps, lead) if seps is not None else None
        if mus is None:
            vals.append(None)
        else:
            vals.append((mus[0] - mus[1] - f, _signature(seps)))
    out = []

    def g(f):
        seps = _seps_for(job.roots_in(pieces, f), w_idx, gs)
        mus = job.mus(seps, lead) if seps is not None else None
        if mus is None:
            raise _Invalid()
        return mus[0] - mus[1] - f

    for i in range(len(fs) - 1):
        a, b = vals[i], vals[i + 1]
        if a is None or b is None or a[1] != b[1]:
            continue
        if a[0] == 0.0 or a[0] * b[0] < 0:
            try:
                f = fs[i] if a[0] == 0.0 else brentq(g, fs[i], fs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            except _Invalid:
                continue
            seps = _seps_for(job.roots_in(pieces, f), w_idx, gs)
            mus = job.mus(seps, lead)
            cfg = job.finish(seps, lead, *mus)
            if cfg is not None:
                out.append(cfg)
    return out


def _scan_wall(job, gs, lead, a, b, c, k=LEVEL_SAMPLES):
    """Single wall between fixed separators a, b when phi == c everywhere."""

    def h(x):
        seps = sorted([(x, WALL_SEP)] + [(y, GAP_SEP) for y in gs])
        mus = job.mus(seps, lead)
        return None if mus is None else mus[0] - mus[1] - c

    xs = _level_samples(a, b, k)
    vals = [h(x) for x in xs]
    out = []
    for i in range(k - 1):
        u, v = vals[i], vals[i + 1]
        if u is None or v is None:
            continue
        if u == 0.0 or u * v < 0:
            x = xs[i] if u == 0.0 else brentq(h, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            seps = sorted([(x, WALL_SEP)] + [(y, GAP_SEP) for y in gs])
            mus = job.mus(seps, lead)
            cfg = job.finish(seps, lead, *mus)
            if cfg is not None:
                out.append(cfg)
    return out


def solve_fixed_N(skeleton, N1, N2, V1, V2, window=None, beta=None, tol=DEFAULT):
    """All stationary separated configurations of ``skeleton`` with particle numbers N1, N2."""
    if N1 < 0 or N2 < 0:
        raise ValidationError("particle numbers must be nonnegative")
    if skeleton.n > 0 and (N1 == 0 or N2 == 0):
        raise InfeasibleTopologyError("walls need both species populated")
    win = fixed_n_window(V1, V2, N1, N2) if window is None else common_window(V1, V2, window)
    for _ in range(_WINDOW_RETRIES + 1):
        try:
            return _dedupe(_solve_fixed_n_once(skeleton, N1, N2, V1, V2, win, beta, tol))
        except _WindowHit:
            win = _expand(win, V1, V2)
    raise InfeasibleTopologyError("supports keep reaching the window edge")


# -- energy as a function of wall positions --------------------------------------------


def _with_walls(cfg, R):
    walls = iter(sorted(R))
    seps = []
    for x, kind in cfg.separators:
        seps.append((next(walls), WALL_SEP) if kind == WALL_SEP else (x, kind))
    seps.sort()
    if _signature(seps) != _signature(cfg.separators):
        raise InfeasibleTopologyError("moved walls changed the separator order")
    return seps


def evaluate_at(cfg, R, tol=DEFAULT):
    """Re-solve ``cfg`` with walls moved to ``R``.

    Returns (energy, mu1, mu2, rho1(R), rho2(R)); the energy is internal (fixed N,
    chemical potentials re-solved) or grand-canonical (fixed mu).
    """
    ctx = _Context(cfg.V1, cfg.V2, cfg.window, tol)
    seps = _with_walls(cfg, R)
    lead = cfg.labels[0]
    if cfg.ensemble == FIXED_N:
        mu1, mu2 = _FixedN(ctx, cfg.N1, cfg.N2, cfg.beta).mus(seps, lead)
    else:
        mu1, mu2 = cfg.mu1, cfg.mu2
    moved = ctx.assemble(seps, lead, mu1, mu2, cfg.ensemble)
    energy = 0.0
    for k, (S, mu, V) in enumerate(((moved.S1, mu1, cfg.V1), (moved.S2, mu2, cfg.V2))):
        for a, b in S.intervals:
            x, w = quadrature.nodes_weights([(a, b)], V.kinks())
            v = V.value(x)
            if cfg.ensemble == FIXED_N:
                energy += float(np.dot(w, 0.5 * (mu * mu - v * v)))
            else:
                energy += float(np.dot(w, -0.5 * (mu - v) ** 2))
    r1, r2 = moved.wall_densities()
    return energy, mu1, mu2, r1, r2


def energy_gradient(cfg, R=None, tol=DEFAULT):
    """Analytic dE/dR_j = s_j (rho2^2 - rho1^2) / 2 at walls ``R``."""
    R = cfg.R if R is None else R
    _, _, _, r1, r2 = evaluate_at(cfg, R, tol)
    return np.asarray(cfg.s) * 0.5 * (r2 * r2 - r1 * r1)
