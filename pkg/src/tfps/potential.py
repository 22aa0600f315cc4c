"""Confining 1-D external potentials.

Every family evaluates vectorized (``value``), scalar (``scalar``) and
differentiates analytically (``slope``).  Level and sublevel queries go through
a cached monotone decomposition of the potential on the requested window.
"""

from __future__ import annotations

import math
from collections import OrderedDict

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import roots
from .errors import AmbiguousDerivativeError, ValidationError

_CACHE_SIZE = 32


def _horner(coeffs, x):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_confining(coeffs, toward):
    """True if the polynomial tends to +inf as x -> toward * inf."""
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    deg = len(c) - 1
    if deg < 1:
        return False
    lead = c[-1] * (toward ** deg)
    return lead > 0


class Potential:
    """Base class; subclasses are immutable after construction."""

    family = "abstract"

    def __init__(self):
        self._decomp = OrderedDict()

    # -- protocol used by roots ------------------------------------------------
    def value(self, x):
        raise NotImplementedError

    def scalar(self, x):
        return float(self.value(np.array([x], dtype=float))[0])

    def slope(self, x, side=None):
        raise NotImplementedError

    def kinks(self):
        return ()

    # -- geometry -------------------------------------------------------------
    def finite_interval(self):
        return (-math.inf, math.inf)

    @property
    def domain_hint(self):
        raise NotImplementedError

    def params(self):
        raise NotImplementedError

    def to_dict(self):
        return {"family": self.family, "params": self.params()}

    def scaled(self, factor):
        if factor == 1.0:
            return self
        return Scaled(self, factor)

    def clip_window(self, window):
        lo, hi = self.finite_interval()
        a, b = max(float(window[0]), lo), min(float(window[1]), hi)
        if not b > a:
            raise ValidationError(f"window {window} does not meet the finite domain [{lo}, {hi}]")
        return a, b

    def decomposition(self, window):
        key = (float(window[0]), float(window[1]))
        dec = self._decomp.get(key)
        if dec is None:
            dec = roots.decompose(self, *key)
            self._decomp[key] = dec
            if len(self._decomp) > _CACHE_SIZE:
                self._decomp.popitem(last=False)
        else:
            self._decomp.move_to_end(key)
        return dec

    def window_for(self, level, margin=0.1):
        """Window covering {V <= level} with a relative margin on each side."""
        lo_f, hi_f = self.finite_interval()
        a, b = self.domain_hint
        if math.isfinite(lo_f) and math.isfinite(hi_f):
            return (lo_f, hi_f)
        width = b - a
        for _ in range(80):
            grow_left = self.scalar(a) <= level or self.slope(np.array([a]), side=-1)[0] >= 0
            grow_right = self.scalar(b) <= level or self.slope(np.array([b]), side=1)[0] <= 0
            if not (grow_left or grow_right):
                break
            if grow_left:
                a -= width
            if grow_right:
                b += width
            width *= 2
        a, b = max(a, lo_f), min(b, hi_f)
        sub = sublevel_set(self, level, (a, b))
        if not sub:
            return (a, b)
        s_lo, s_hi = sub[0][0], sub[-1][1]
        pad = margin * max(s_hi - s_lo, 1e-12)
        return (max(s_lo - pad, lo_f), min(s_hi + pad, hi_f))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self))

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_decomp"] = OrderedDict()
        return state


class SquareWell(Potential):
    """Infinite square well: zero on [a, b], +inf outside."""

    family = "SquareWell"

    def __init__(self, a, b):
        super().__init__()
        self.a, self.b = float(a), float(b)
        if not self.b > self.a:
            raise ValidationError("SquareWell requires b > a")

    @property
    def length(self):
        return self.b - self.a

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), 0.0, np.inf)

    def scalar(self, x):
        return 0.0 if self.a <= x <= self.b else math.inf

    def slope(self, x, side=None):
        return np.zeros_like(np.asarray(x, dtype=float))

    def finite_interval(self):
        return (self.a, self.b)

    @property
    def domain_hint(self):
        return (self.a, self.b)

    def params(self):
        return {"a": self.a, "b": self.b}


class Harmonic(Potential):
    """V(x) = k (x - x0)^2."""

    family = "Harmonic"

    def __init__(self, k, x0=0.0):
        super().__init__()
        self.k, self.x0 = float(k), float(x0)
        if not self.k > 0:
            raise ValidationError("Harmonic requires k > 0")

    def value(self, x):
        return self.k * (np.asarray(x, dtype=float) - self.x0) ** 2

    def scalar(self, x):
        d = x - self.x0
        return self.k * d * d

    def slope(self, x, side=None):
        return 2.0 * self.k * (np.asarray(x, dtype=float) - self.x0)

    @property
    def domain_hint(self):
        r = 1.0 / math.sqrt(self.k)
        return (self.x0 - r, self.x0 + r)

    def params(self):
        return {"k": self.k, "x0": self.x0}


class DoubleWell(Potential):
    """V(x) = h ((x/w)^2 - 1)^2: barrier h at 0, minima at +-w."""

    family = "DoubleWell"

    def __init__(self, h, w):
        super().__init__()
        self.h, self.w = float(h), float(w)
        if not (self.h > 0 and self.w > 0):
            raise ValidationError("DoubleWell requires h > 0 and w > 0")

    def value(self, x):
        u = (np.asarray(x, dtype=float) / self.w) ** 2 - 1.0
        return self.h * u * u

    def scalar(self, x):
        u = (x / self.w) ** 2 - 1.0
        return self.h * u * u

    def slope(self, x, side=None):
        x = np.asarray(x, dtype=float)
        u = (x / self.w) ** 2 - 1.0
        return 4.0 * self.h * u * x / self.w**2

    @property
    def domain_hint(self):
        return (-1.5 * self.w, 1.5 * self.w)

    def params(self):
        return {"h": self.h, "w": self.w}


class Polynomial(Potential):
    """V(x) = sum_n c_n x^n with coefficients in ascending order."""

    family = "Polynomial"

    def __init__(self, coefficients):
        super().__init__()
        self.coefficients = tuple(float(c) for c in coefficients)
        if not (_poly_confining(self.coefficients, 1) and _poly_confining(self.coefficients, -1)):
            raise ValidationError("Polynomial potential must tend to +inf on both sides")
        self._deriv = tuple(n * c for n, c in enumerate(self.coefficients))[1:]

    def value(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coefficients)

    def scalar(self, x):
        return _horner(self.coefficients, x)

    def slope(self, x, side=None):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self._deriv)

    @property
    def domain_hint(self):
        c = self.coefficients
        bound = 1.0 + max(abs(ci) for ci in c[:-1]) / abs(c[-1])
        return (-bound, bound)

    def params(self):
        return {"coefficients": list(self.coefficients)}


class PiecewisePolynomial(Potential):
    """Continuous piecewise polynomial in the global coordinate.

    ``breakpoints`` b_1 < ... < b_m split the line into m + 1 segments; segment
    i carries ascending coefficients ``coefficients[i]``.  The outer segments
    extend to -inf and +inf and must be confining.
    """

    family = "PiecewisePolynomial"

    def __init__(self, breakpoints, coefficients):
        super().__init__()
        self.breakpoints = tuple(float(b) for b in breakpoints)
        self.coefficients = tuple(tuple(float(c) for c in seg) for seg in coefficients)
        if len(self.coefficients) != len(self.breakpoints) + 1:
            raise ValidationError("need len(coefficients) == len(breakpoints) + 1")
        if any(b1 >= b2 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        if not (_poly_confining(self.coefficients[0], -1) and _poly_confining(self.coefficients[-1], 1)):
            raise ValidationError("outer segments must be confining")
        for i, b in enumerate(self.breakpoints):
            left = _horner(self.coefficients[i], b)
            right = _horner(self.coefficients[i + 1], b)
            if abs(left - right) > 1e-10 * max(1.0, abs(left)):
                raise ValidationError(f"discontinuity at breakpoint {b}: {left} != {right}")
        self._derivs = tuple(tuple(n * c for n, c in enumerate(seg))[1:] or (0.0,) for seg in self.coefficients)
        self._bp = np.asarray(self.breakpoints)

    def _segment(self, x, side):
        idx = np.searchsorted(self._bp, x, side="right" if side is None or side > 0 else "left")
        return idx

    def value(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._bp, x, side="right")
        out = np.empty_like(x)
        for i, seg in enumerate(self.coefficients):
            m = idx == i
            if np.any(m):
                out[m] = np.polynomial.polynomial.polyval(x[m], seg)
        return out

    def scalar(self, x):
        i = int(np.searchsorted(self._bp, x, side="right"))
        return _horner(self.coefficients[i], x)

    def slope(self, x, side=None):
        x = np.asarray(x, dtype=float)
        if side is None and np.any(np.isin(x, self._bp)):
            raise AmbiguousDerivativeError("derivative at a breakpoint needs side=-1 or side=+1")
        idx = np.searchsorted(self._bp, x, side="left" if side is not None and side < 0 else "right")
        out = np.empty_like(x)
        for i, seg in enumerate(self._derivs):
            m = idx == i
            if np.any(m):
                out[m] = np.polynomial.polynomial.polyval(x[m], seg)
        return out

    def kinks(self):
        return self.breakpoints

    @property
    def domain_hint(self):
        return (self.breakpoints[0] - 1.0, self.breakpoints[-1] + 1.0)

    def params(self):
        return {"breakpoints": list(self.breakpoints), "coefficients": [list(s) for s in self.coefficients]}


class Tabulated(Potential):
    """Monotone C1 cubic (PCHIP) interpolation of samples; +inf off the grid."""

    family = "Tabulated"

    def __init__(self, x, v, source=None):
        super().__init__()
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise ValidationError("Tabulated needs matching 1-D arrays with at least 2 samples")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("Tabulated grid must be strictly increasing")
        self.x, self.v, self.source = x, v, source
        self._interp = PchipInterpolator(x, v, extrapolate=False)
        self._dinterp = self._interp.derivative()

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        if data.shape[1] != 2:
            raise ValidationError(f"{path}: expected two columns (x, V)")
        return cls(data[:, 0], data[:, 1], source=str(path))

    def value(self, x):
        out = self._interp(np.asarray(x, dtype=float))
        return np.where(np.isnan(out), np.inf, out)

    def scalar(self, x):
        if x < self.x[0] or x > self.x[-1]:
            return math.inf
        return float(self._interp(x))

    def slope(self, x, side=None):
        out = self._dinterp(np.asarray(x, dtype=float))
        return np.nan_to_num(out, nan=0.0)

    def kinks(self):
        return tuple(self.x[1:-1])

    def finite_interval(self):
        return (float(self.x[0]), float(self.x[-1]))

    @property
    def domain_hint(self):
        return self.finite_interval()

    def params(self):
        if self.source is not None:
            return {"path": self.source}
        return {"x": self.x.tolist(), "v": self.v.tolist()}

    def __hash__(self):
        return hash((self.family, self.x.tobytes(), self.v.tobytes()))


class Scaled(Potential):
    """``factor * base`` with factor > 0 (used by the unit reduction)."""

    def __init__(self, base, factor):
        super().__init__()
        if not factor > 0:
            raise ValidationError("scale factor must be positive")
        if isinstance(base, Scaled):
            base, factor = base.base, factor * base.factor
        self.base, self.factor = base, float(factor)
        self.family = base.family

    def value(self, x):
        return self.factor * self.base.value(x)

    def scalar(self, x):
        return self.factor * self.base.scalar(x)

    def slope(self, x, side=None):
        return self.factor * self.base.slope(x, side=side)

    def kinks(self):
        return self.base.kinks()

    def finite_interval(self):
        return self.base.finite_interval()

    @property
    def domain_hint(self):
        return self.base.domain_hint

    @property
    def length(self):
        return self.base.length

    def params(self):
        return self.base.params()

    def to_dict(self):
        return {"family": self.family, "params": self.params(), "scale": self.factor}

    def __repr__(self):
        return f"{self.factor!r}*{self.base!r}"


class LinearCombo:
    """c0 + sum_i c_i V_i(x); satisfies the root-finding protocol."""

    def __init__(self, terms, const=0.0):
        self.terms = tuple((float(c), p) for c, p in terms if c != 0.0)
        self.const = float(const)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.const)
        for c, p in self.terms:
            out = out + c * p.value(x)
        return out

    def scalar(self, x):
        return self.const + sum(c * p.scalar(x) for c, p in self.terms)

    def slope(self, x, side=None):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for c, p in self.terms:
            out = out + c * p.slope(x, side=side)
        return out

    def kinks(self):
        ks = set()
        for _, p in self.terms:
            ks.update(p.kinks())
        return tuple(sorted(ks))

    def finite_interval(self):
        lo, hi = -math.inf, math.inf
        for _, p in self.terms:
            a, b = p.finite_interval()
            lo, hi = max(lo, a), min(hi, b)
        return lo, hi


FAMILIES = {
    cls.family: cls
    for cls in (SquareWell, Harmonic, DoubleWell, Polynomial, PiecewisePolynomial, Tabulated)
}


def from_dict(spec):
    """Build a potential from ``{"family": ..., "params": {...}, "scale": ...}``."""
    try:
        cls = FAMILIES[spec["family"]]
    except KeyError:
        raise ValidationError(f"unknown potential family {spec.get('family')!r}") from None
    params = dict(spec.get("params", {}))
    if cls is Tabulated and "path" in params:
        pot = Tabulated.from_csv(params["path"])
    else:
        try:
            pot = cls(**params)
        except TypeError as exc:
            raise ValidationError(f"{cls.family}: {exc}") from None
    return pot.scaled(float(spec.get("scale", 1.0)))


def is_flat(pot):
    base = pot.base if isinstance(pot, Scaled) else pot
    return isinstance(base, SquareWell)


# -- public operations ----------------------------------------------------------


def evaluate(p, x):
    """V(x); +inf outside a square well (or off a tabulated grid)."""
    if np.ndim(x) == 0:
        return p.scalar(float(x))
    return p.value(x)


def derivative(p, x, side=None):
    """V'(x); at a breakpoint of a piecewise potential ``side`` (-1 or +1) is required."""
    if np.ndim(x) == 0:
        return float(p.slope(np.array([float(x)]), side=side)[0])
    return p.slope(x, side=side)


def level_set(p, v, window, tol_root=roots.TOL_ROOT):
    """Sorted solutions of V(x) = v in ``window`` (a list of :class:`roots.Root`)."""
    win = p.clip_window(window)
    return roots.level_roots(p, p.decomposition(win), v, tol_root)


def sublevel_set(p, mu, window):
    """{x in window : V(x) <= mu} as a list of disjoint closed intervals."""
    win = p.clip_window(window)
    return roots.sublevel_intervals(p, p.decomposition(win), mu)


def check_proportional(v1, v2, beta, window, samples=64, rtol=1e-8):
    """Verify V2 = beta * V1 at ``samples`` points of ``window``."""
    lo, hi = v1.clip_window(window)
    x = np.linspace(lo, hi, samples)
    a, b = beta * v1.value(x), v2.value(x)
    finite = np.isfinite(a) & np.isfinite(b)
    scale = np.maximum(1.0, np.abs(a[finite]))
    if np.any(np.isfinite(a) != np.isfinite(b)) or np.any(np.abs(a[finite] - b[finite]) > rtol * scale):
        raise ValidationError(f"declared proportional potentials violate V2 = {beta} * V1")
