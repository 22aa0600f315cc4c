"""Thomas-Fermi density profiles, supports and energies.

Densities are kept symbolic: a profile is a sorted list of segments, each with
a closed form (mixed, single-species or a fixed share of a common density).
Sampling happens only for quadrature and output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature, roots
from .errors import DegenerateThresholdError, PreconditionError, ValidationError
from .potential import LinearCombo

MIXED = "mixed"
SINGLE1 = "single1"
SINGLE2 = "single2"
SHARE = "share"
FORMS = (MIXED, SINGLE1, SINGLE2, SHARE)

WALL = "Wall"
ZERO = "Zero"
EDGE = "SquareWellEdge"
OPEN = "Open"

_FORM_SPECIES = {MIXED: (1, 2), SINGLE1: (1,), SINGLE2: (2,), SHARE: (1, 2)}


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    form: str

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValidationError(f"unknown segment form {self.form!r}")
        if not self.lo <= self.hi:
            raise ValidationError(f"segment bounds out of order: {self.lo} > {self.hi}")


@dataclass(frozen=True)
class Support:
    intervals: tuple = ()
    kinds: tuple = ()

    @property
    def measure(self):
        return float(sum(b - a for a, b in self.intervals))

    def __bool__(self):
        return bool(self.intervals)

    def contains(self, x, tol=0.0):
        return any(a - tol <= x <= b + tol for a, b in self.intervals)

    def to_list(self):
        return [[a, b] for a, b in self.intervals]


# -- pointwise formulas ---------------------------------------------------------


def mixed_density(x, mu1, mu2, alpha, V1, V2):
    """Mixed-region densities (no positivity clamp)."""
    if alpha == 1.0:
        raise DegenerateThresholdError("mixed densities are undefined at alpha = 1")
    t1 = mu1 - V1.value(np.asarray(x, dtype=float))
    t2 = mu2 - V2.value(np.asarray(x, dtype=float))
    d = 1.0 - alpha * alpha
    r1, r2 = (t1 - alpha * t2) / d, (t2 - alpha * t1) / d
    if np.ndim(x) == 0:
        return float(r1), float(r2)
    return r1, r2


def single_density(k, x, mu_k, V_k):
    """Single-species density mu_k - V_k(x) (no clamp)."""
    if k not in (1, 2):
        raise ValueError("species must be 1 or 2")
    if np.ndim(x) == 0:
        return mu_k - V_k.scalar(float(x))
    return mu_k - V_k.value(np.asarray(x, dtype=float))


def pointwise_kind(t1, t2, alpha):
    """Optimal phase per point: 0 empty, 1/2 single species, 3 mixed.

    Ties between the two single phases (alpha >= 1, t1 == t2 > 0) go to species 1.
    """
    t1, t2 = np.asarray(t1, dtype=float), np.asarray(t2, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.zeros(np.broadcast(t1, t2).shape, dtype=int)
        if alpha < 1.0:
            m = (t1 - alpha * t2 >= 0) & (t2 - alpha * t1 >= 0) & ((t1 > 0) | (t2 > 0))
            out[(t1 > 0) & (t2 - alpha * t1 < 0)] = 1
            out[(t2 > 0) & (t1 - alpha * t2 < 0)] = 2
            out[m] = 3
        else:
            out[(t2 > 0) & (t2 > t1)] = 2
            out[(t1 > 0) & (t1 >= t2)] = 1
    return out


# -- partitions -----------------------------------------------------------------


def _t(mu, V):
    return LinearCombo([(-1.0, V)], mu)


def zero_points(fn, window):
    """Zeros of ``fn`` in ``window``; flat zero pieces contribute their ends."""
    dec = roots.decompose(fn, *window)
    return [r.x for r in roots.level_roots(fn, dec, 0.0, flat_ok=True)]


def _partition(funcs, window, extra=()):
    pts = {float(window[0]), float(window[1])}
    for f in funcs:
        pts.update(zero_points(f, window))
    pts.update(x for x in extra if window[0] < x < window[1])
    return np.array(sorted(pts))


def _merge(cells):
    out = []
    for lo, hi, tag in cells:
        if hi <= lo:
            continue
        if out and out[-1][2] == tag and out[-1][1] == lo:
            out[-1][1] = hi
        else:
            out.append([lo, hi, tag])
    return [tuple(c) for c in out]


def common_window(V1, V2, window=None):
    a1, b1 = V1.finite_interval()
    a2, b2 = V2.finite_interval()
    lo, hi = max(a1, a2), min(b1, b2)
    if window is None:
        return lo, hi
    return max(window[0], lo), min(window[1], hi)


def window_for_mu(V1, V2, mu1, mu2, margin=0.1):
    """Window covering both sublevel sets {V_k <= mu_k} with a margin."""
    w1 = V1.window_for(mu1, margin)
    w2 = V2.window_for(mu2, margin)
    return common_window(V1, V2, (min(w1[0], w2[0]), max(w1[1], w2[1])))


# -- profile --------------------------------------------------------------------


@dataclass
class DensityProfile:
    segments: tuple
    mu1: float
    mu2: float
    alpha: float
    V1: object
    V2: object
    window: tuple
    share: tuple = (0.5, 0.5)
    walls: tuple = ()
    ties: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.segments = tuple(s for s in self.segments if s.hi > s.lo)
        self._lo = np.array([s.lo for s in self.segments])

    # densities
    def _seg_rho(self, seg, x):
        t1 = self.mu1 - self.V1.value(x) if seg.form != SINGLE2 else None
        t2 = self.mu2 - self.V2.value(x) if seg.form in (MIXED, SINGLE2) else None
        z = np.zeros_like(x)
        if seg.form == MIXED:
            d = 1.0 - self.alpha * self.alpha
            return (t1 - self.alpha * t2) / d, (t2 - self.alpha * t1) / d
        if seg.form == SINGLE1:
            return t1, z
        if seg.form == SINGLE2:
            return z, t2
        return self.share[0] * t1, self.share[1] * t1

    def rho(self, x):
        """(rho1, rho2) at ``x``; zero outside every segment."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r1, r2 = np.zeros_like(x), np.zeros_like(x)
        if self.segments:
            idx = np.searchsorted(self._lo, x, side="right") - 1
            for i, seg in enumerate(self.segments):
                m = (idx == i) & (x <= seg.hi)
                if np.any(m):
                    a, b = self._seg_rho(seg, x[m])
                    r1[m], r2[m] = a, b
        return r1, r2

    # supports
    def _species_intervals(self, k):
        spans = [(s.lo, s.hi) for s in self.segments if k in _FORM_SPECIES[s.form]]
        merged = []
        for a, b in spans:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return [tuple(m) for m in merged]

    def _endpoint_kind(self, k, x):
        lo, hi = self.V1.finite_interval()
        if x == lo or x == hi:
            return EDGE
        if any(abs(x - w) <= 1e-12 * max(1.0, abs(x)) for w in self.walls):
            return WALL
        r = self.rho(np.array([x]))[k - 1][0]
        scale = max(1.0, abs(self.mu1), abs(self.mu2))
        if abs(r) <= 1e-8 * scale:
            return ZERO
        if x <= self.window[0] or x >= self.window[1]:
            return OPEN
        return WALL

    def support(self, k):
        iv = self._species_intervals(k)
        kinds = tuple((self._endpoint_kind(k, a), self._endpoint_kind(k, b)) for a, b in iv)
        return Support(tuple(iv), kinds)

    @property
    def S1(self):
        return self.support(1)

    @property
    def S2(self):
        return self.support(2)

    def mixed_measure(self):
        return float(sum(s.hi - s.lo for s in self.segments if s.form in (MIXED, SHARE)))

    # integrals
    def _breaks(self):
        return tuple(sorted(set(self.V1.kinks()) | set(self.V2.kinks())))

    def _integrate(self, fn):
        brk = self._breaks()
        total = 0.0
        for seg in self.segments:
            x, w = quadrature.nodes_weights([(seg.lo, seg.hi)], brk)
            if x.size:
                total += float(np.dot(w, fn(seg, x)))
        return total

    def particle_numbers(self):
        n1 = self._integrate(lambda s, x: self._seg_rho(s, x)[0])
        n2 = self._integrate(lambda s, x: self._seg_rho(s, x)[1])
        return n1, n2

    def _energy_density(self, seg, x):
        a = self.alpha
        if seg.form == SINGLE1:
            r = self.mu1 - self.V1.value(x)
            return 0.5 * r * r + self.V1.value(x) * r
        if seg.form == SINGLE2:
            r = self.mu2 - self.V2.value(x)
            return 0.5 * r * r + self.V2.value(x) * r
        r1, r2 = self._seg_rho(seg, x)
        return 0.5 * (r1 * r1 + r2 * r2 + 2.0 * a * r1 * r2) + self.V1.value(x) * r1 + self.V2.value(x) * r2

    def internal_energy(self):
        return self._integrate(self._energy_density)

    def grand_canonical_energy(self, mu1=None, mu2=None):
        mu1 = self.mu1 if mu1 is None else mu1
        mu2 = self.mu2 if mu2 is None else mu2
        n1, n2 = self.particle_numbers()
        return self.internal_energy() - mu1 * n1 - mu2 * n2

    def min_density(self, samples=10_000):
        """Smallest sampled density of each species on its own support."""
        out = []
        for k in (1, 2):
            lows = []
            for seg in self.segments:
                if k in _FORM_SPECIES[seg.form]:
                    x = np.linspace(seg.lo, seg.hi, max(2, samples // max(1, len(self.segments))))
                    lows.append(float(np.min(self._seg_rho(seg, x)[k - 1])))
            out.append(min(lows) if lows else math.inf)
        return tuple(out)

    def sample(self, samples=200):
        """Columns x, rho1, rho2, V1, V2 with ``samples`` points per interval.

        Intervals are the profile segments plus the empty spans of the window.
        """
        cuts = sorted({self.window[0], self.window[1]} | {s.lo for s in self.segments} | {s.hi for s in self.segments})
        xs = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b > a:
                xs.append(np.linspace(a, b, samples))
        x = np.unique(np.concatenate(xs)) if xs else np.empty(0)
        r1, r2 = self.rho(x)
        return x, r1, r2, self.V1.value(x), self.V2.value(x)


def optimal_profile(mu1, mu2, alpha, V1, V2, window=None):
    """Pointwise minimizer of the grand-canonical energy density."""
    win = window_for_mu(V1, V2, mu1, mu2) if window is None else common_window(V1, V2, window)
    t1, t2 = _t(mu1, V1), _t(mu2, V2)
    funcs = [t1, t2]
    if alpha < 1.0:
        funcs += [LinearCombo([(1.0, t1), (-alpha, t2)]), LinearCombo([(1.0, t2), (-alpha, t1)])]
    else:
        funcs.append(LinearCombo([(1.0, t1), (-1.0, t2)]))
    pts = _partition(funcs, win, V1.kinks() + V2.kinks())
    mids = 0.5 * (pts[:-1] + pts[1:])
    tv1, tv2 = t1.value(mids), t2.value(mids)
    kind = pointwise_kind(tv1, tv2, alpha)
    ties = bool(alpha >= 1.0 and np.any((kind == 1) & (np.abs(tv1 - tv2) <= 1e-12 * np.maximum(1.0, np.abs(tv1)))))
    tags = {1: SINGLE1, 2: SINGLE2, 3: MIXED}
    cells = [(float(a), float(b), tags[int(k)]) for a, b, k in zip(pts[:-1], pts[1:], kind) if k]
    segs = tuple(Segment(a, b, f) for a, b, f in _merge(cells))
    return DensityProfile(segs, mu1, mu2, alpha, V1, V2, win, ties=ties)


def mixed_support_filter(mu1, mu2, alpha, V1, V2, window=None):
    """Points where the mixed densities are both nonnegative, within the sublevel sets."""
    if alpha == 1.0:
        raise DegenerateThresholdError("mixed support is undefined at alpha = 1")
    win = window_for_mu(V1, V2, mu1, mu2) if window is None else common_window(V1, V2, window)
    lo_r, hi_r = min(alpha, 1.0 / alpha), max(alpha, 1.0 / alpha)
    t1, t2 = _t(mu1, V1), _t(mu2, V2)
    f_lo = LinearCombo([(1.0, t1), (-lo_r, t2)])
    f_hi = LinearCombo([(1.0, t1), (-hi_r, t2)])
    pts = _partition([t1, t2, f_lo, f_hi], win, V1.kinks() + V2.kinks())
    mids = 0.5 * (pts[:-1] + pts[1:])
    a, b = t1.value(mids), t2.value(mids)
    ok = (a >= 0) & (b >= 0) & (a >= lo_r * b) & (a <= hi_r * b)
    cells = _merge([(float(x0), float(x1), True) for x0, x1, k in zip(pts[:-1], pts[1:], ok) if k])
    iv = tuple((x0, x1) for x0, x1, _ in cells)
    fin = V1.finite_interval()
    kinds = tuple((EDGE if x0 == fin[0] else ZERO, EDGE if x1 == fin[1] else ZERO) for x0, x1 in iv)
    return Support(iv, kinds)


def mixed_profile(mu1, mu2, alpha, V1, V2, window=None):
    """Mixed densities on the mixed filter set, best single phase elsewhere.

    For alpha < 1 this coincides with :func:`optimal_profile`; for alpha > 1 it
    is the constrained mixed configuration used in sweeps.
    """
    if alpha < 1.0:
        return optimal_profile(mu1, mu2, alpha, V1, V2, window)
    win = window_for_mu(V1, V2, mu1, mu2) if window is None else common_window(V1, V2, window)
    filt = mixed_support_filter(mu1, mu2, alpha, V1, V2, win)
    t1, t2 = _t(mu1, V1), _t(mu2, V2)
    extra = [x for iv in filt.intervals for x in iv] + list(V1.kinks() + V2.kinks())
    pts = _partition([t1, t2, LinearCombo([(1.0, t1), (-1.0, t2)])], win, extra)
    mids = 0.5 * (pts[:-1] + pts[1:])
    kind = pointwise_kind(t1.value(mids), t2.value(mids), alpha)
    tags = {1: SINGLE1, 2: SINGLE2}
    cells = []
    for a, b, m, k in zip(pts[:-1], pts[1:], mids, kind):
        if filt.contains(m) and b > a:
            cells.append((float(a), float(b), MIXED))
        elif k:
            cells.append((float(a), float(b), tags[int(k)]))
    segs = tuple(Segment(a, b, f) for a, b, f in _merge(cells))
    return DensityProfile(segs, mu1, mu2, alpha, V1, V2, win)


def share_profile(mu, V1, V2, fractions, window=None, mu2=None):
    """Common density mu - V1 split in fixed fractions (degenerate alpha = 1)."""
    win = V1.window_for(mu) if window is None else common_window(V1, V2, window)
    t = _t(mu, V1)
    pts = _partition([t], win, V1.kinks())
    mids = 0.5 * (pts[:-1] + pts[1:])
    pos = t.value(mids) > 0
    cells = _merge([(float(a), float(b), SHARE) for a, b, p in zip(pts[:-1], pts[1:], pos) if p])
    segs = tuple(Segment(a, b, f) for a, b, f in cells)
    mu2 = mu if mu2 is None else mu2
    return DensityProfile(segs, mu, mu2, 1.0, V1, V2, win, share=tuple(fractions))


# -- module-level conveniences ----------------------------------------------------


def particle_numbers(profile):
    return profile.particle_numbers()


def internal_energy(profile):
    return profile.internal_energy()


def grand_canonical_energy(profile, mu1, mu2):
    return profile.grand_canonical_energy(mu1, mu2)


def single_profile(k, mu, V1, V2, window=None):
    """One species alone on its sublevel set."""
    V = V1 if k == 1 else V2
    win = V.window_for(mu) if window is None else common_window(V1, V2, window)
    pts = _partition([_t(mu, V)], win, V.kinks())
    mids = 0.5 * (pts[:-1] + pts[1:])
    pos = mu - V.value(mids) > 0
    tag = SINGLE1 if k == 1 else SINGLE2
    cells = _merge([(float(a), float(b), tag) for a, b, p in zip(pts[:-1], pts[1:], pos) if p])
    segs = tuple(Segment(a, b, f) for a, b, f in cells)
    m1, m2 = (mu, 0.0) if k == 1 else (0.0, mu)
    return DensityProfile(segs, m1, m2, 0.0, V1, V2, win)


def segment_inside(profile, lo, hi, form=MIXED):
    """The segment of ``profile`` containing [lo, hi], or raise."""
    for seg in profile.segments:
        if seg.form == form and seg.lo < lo and hi < seg.hi:
            return seg
    raise PreconditionError(f"[{lo}, {hi}] is not strictly inside a {form} segment")
