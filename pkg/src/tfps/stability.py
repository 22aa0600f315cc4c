"""Local stability of wall configurations and non-maximal exclusion tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .errors import PreconditionError
from .profiles import MIXED, ZERO, segment_inside
from .scaling import FIXED_MU
from .tolerances import DEFAULT

PASS, FAIL, MARGINAL = "pass", "fail", "marginal"
NOT_APPLICABLE = "not_applicable"


@dataclass
class HessianReport:
    H: np.ndarray
    a: list
    C: float | None
    positive_definite: bool
    thermo: list
    thermo_limit_stable: str
    necessary: dict | None
    min_eigenvalue: float
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "H": self.H.tolist(),
            "a": list(self.a),
            "C": self.C,
            "positive_definite": self.positive_definite,
            "thermo": list(self.thermo),
            "thermo_limit_stable": self.thermo_limit_stable,
            "necessary": self.necessary,
            "min_eigenvalue": self.min_eigenvalue,
            "flags": list(self.flags),
        }


def positive_definite(H, rel_pivot=1e-12):
    """Cholesky test: every pivot must exceed rel_pivot * max|H|."""
    H = np.array(H, dtype=float)
    n = H.shape[0]
    if n == 0:
        return True
    thresh = rel_pivot * np.max(np.abs(H))
    L = np.zeros_like(H)
    for j in range(n):
        d = H[j, j] - np.dot(L[j, :j], L[j, :j])
        if not d > thresh:
            return False
        L[j, j] = math.sqrt(d)
        for i in range(j + 1, n):
            L[i, j] = (H[i, j] - np.dot(L[i, :j], L[j, :j])) / L[j, j]
    return True


def _phi_slope(cfg, x, s):
    """s * phi'(x); at a potential breakpoint the smaller one-sided value."""
    kinks = set(cfg.V1.kinks()) | set(cfg.V2.kinks())
    xa = np.array([x])
    if any(abs(x - k) <= 1e-12 * max(1.0, abs(k)) for k in kinks):
        vals = [s * float(cfg.V1.slope(xa, side=d)[0] - cfg.V2.slope(xa, side=d)[0]) for d in (-1, 1)]
        return min(vals), True
    return s * float(cfg.V1.slope(xa)[0] - cfg.V2.slope(xa)[0]), False


def _marginal_tol(cfg):
    return 1e-9 * max(1.0, abs(cfg.mu1), abs(cfg.mu2))


def wall_slopes(cfg):
    out, at_kink = [], False
    for x, s in zip(cfg.R, cfg.s):
        v, k = _phi_slope(cfg, x, s)
        out.append(v)
        at_kink |= k
    return out, at_kink


def thermo_limit_verdict(cfg):
    """Per-wall sign test s_j phi'(R_j) > 0 and the overall verdict."""
    slopes, _ = wall_slopes(cfg)
    tol = _marginal_tol(cfg)
    per = [PASS if v > tol else FAIL if v < -tol else MARGINAL for v in slopes]
    if any(p == FAIL for p in per):
        overall = FAIL
    elif any(p == MARGINAL for p in per):
        overall = MARGINAL
    else:
        overall = PASS
    return per, overall


def necessary_conditions(a, C):
    """Pairwise and determinant conditions for H = diag(a) + C s s^T."""
    a = [float(x) for x in a]
    nonpos = [i for i, x in enumerate(a) if x <= 0]
    if len(nonpos) > 1:
        return {"pass": False, "failed": "multiple_nonpositive", "index": nonpos}
    if not nonpos:
        return {"pass": True, "failed": None, "index": None}
    j = nonpos[0]
    others = [x for i, x in enumerate(a) if i != j]
    if others and abs(a[j]) > min(others):
        return {"pass": False, "failed": "pairwise", "index": j}
    bound = C / (1.0 + C * sum(1.0 / x for x in others))
    if not abs(a[j]) < bound:
        return {"pass": False, "failed": "determinant", "index": j, "bound": bound}
    return {"pass": True, "failed": None, "index": j, "bound": bound}


def assemble_hessian(cfg, ensemble=None, tol=DEFAULT):
    """Hessian of the energy with respect to the wall positions."""
    ensemble = cfg.ensemble if ensemble is None else ensemble
    n = cfg.n
    r1, r2 = cfg.wall_densities()
    flags = []
    for x, y in zip(r1, r2):
        if abs(x - y) > tol.tol_stat * max(1.0, abs(x)):
            raise PreconditionError(f"configuration is not stationary: rho1={x}, rho2={y} at a wall")
    rho = 0.5 * (r1 + r2)
    slopes, at_kink = wall_slopes(cfg)
    if at_kink:
        flags.append("wall_at_breakpoint")
    a = [float(r * v) for r, v in zip(rho, slopes)]
    H = np.diag(a) if n else np.zeros((0, 0))
    C = None
    if ensemble != FIXED_MU and n:
        inv = 1.0 / cfg.S1.measure + 1.0 / cfg.S2.measure
        s = np.asarray(cfg.s, dtype=float)
        H = H + inv * np.outer(s * rho, s * rho)
        if np.ptp(rho) <= 1e-8 * max(1.0, float(np.max(rho))):
            C = float(inv * np.mean(rho) ** 2)
    H = 0.5 * (H + H.T)
    per, overall = thermo_limit_verdict(cfg)
    nec = necessary_conditions(a, C) if C is not None else None
    eig = float(np.min(np.linalg.eigvalsh(H))) if n else math.inf
    if overall == MARGINAL:
        flags.append("marginal_wall")
    return HessianReport(H, a, C, positive_definite(H), per, overall, nec, eig, flags)


# -- exclusion of non-maximal configurations ------------------------------------------


def _extreme_on(V, intervals, kind):
    """max (kind='max') or min of V over a union of intervals."""
    best = -math.inf if kind == "max" else math.inf
    pick = max if kind == "max" else min
    for a, b in intervals:
        vals = [V.scalar(a), V.scalar(b)]
        dec = V.decomposition((a, b))
        vals += [p.f_lo for p in dec.pieces[1:]]
        best = pick(best, pick(vals))
    return best


def nonmax1(mu1, v, vbar1, beta):
    """Fixed-N condition on a point of S1 above the wall level (common-potential units)."""
    if vbar1 >= mu1:
        return math.inf, True
    r = (mu1 - v) / (mu1 - vbar1)
    return r, r > 1.0 / beta


def nonmax2(mu2, v, vbar2, beta):
    """Fixed-N condition on a point of S2 below the wall level."""
    r = (mu2 - v) / (mu2 - vbar2)
    return r, r < beta


def nonmax1_cp(mu1, mu2, vbar1, beta):
    if vbar1 >= mu1:
        return math.inf, True
    r = (mu2 - vbar1) / (mu1 - vbar1)
    return r, r > 1.0 / beta


def nonmax2_cp(mu1, mu2, vbar2, beta):
    r = (mu1 - vbar2) / (mu2 - vbar2)
    return r, r > beta


def _applicable(cfg, beta):
    if beta is None:
        return "potentials not declared proportional"
    if not beta < 1.0:
        return "criteria derived only for beta < 1"
    if cfg.n == 0:
        return "no domain walls"
    return None


def _finding(name, ratio, triggered, **extra):
    return {"criterion": name, "ratio": ratio, "triggered": bool(triggered), **extra}


def _zero_bordered(S):
    return any(ZERO in pair for pair in S.kinds)


def nonmax_exclusion_fixed_N(cfg, beta):
    """Apply both fixed-N exclusion inequalities to a stable stationary configuration.

    ``cfg`` is in reduced units with V2 = beta V1; the inequalities are written
    for the common potential V = V1 and mu2 / beta.
    """
    why = _applicable(cfg, beta)
    if why:
        return [{"criterion": NOT_APPLICABLE, "reason": why, "triggered": False}]
    V = cfg.V1
    v = float(np.mean(V.value(np.asarray(cfg.R))))
    mu1, mu2c = cfg.mu1, cfg.mu2 / beta
    out = []
    vbar1 = _extreme_on(V, cfg.S1.intervals, "max")
    if _zero_bordered(cfg.S1):
        out.append(_finding("nonmax1", math.inf, True, vbar=mu1, zero_bordered=True))
    elif vbar1 > v * (1 + 1e-12) + 1e-14:
        r, t = nonmax1(mu1, v, vbar1, beta)
        out.append(_finding("nonmax1", r, t, vbar=vbar1))
    vbar2 = _extreme_on(V, cfg.S2.intervals, "min")
    if vbar2 < v * (1 - 1e-12) - 1e-14:
        r, t = nonmax2(mu2c, v, vbar2, beta)
        out.append(_finding("nonmax2", r, t, vbar=vbar2))
    return out


def nonmax_exclusion_fixed_mu(cfg, beta):
    """Fixed-mu counterpart; independent of the wall level."""
    why = _applicable(cfg, beta)
    if why:
        return [{"criterion": NOT_APPLICABLE, "reason": why, "triggered": False}]
    V = cfg.V1
    v = float(np.mean(V.value(np.asarray(cfg.R))))
    mu1, mu2c = cfg.mu1, cfg.mu2 / beta
    out = []
    vbar1 = _extreme_on(V, cfg.S1.intervals, "max")
    if _zero_bordered(cfg.S1):
        out.append(_finding("nonmax1CP", math.inf, True, vbar=mu1, zero_bordered=True))
    elif vbar1 > v * (1 + 1e-12) + 1e-14:
        r, t = nonmax1_cp(mu1, mu2c, vbar1, beta)
        out.append(_finding("nonmax1CP", r, t, vbar=vbar1))
    vbar2 = _extreme_on(V, cfg.S2.intervals, "min")
    if vbar2 < v * (1 - 1e-12) - 1e-14:
        r, t = nonmax2_cp(mu1, mu2c, vbar2, beta)
        out.append(_finding("nonmax2CP", r, t, vbar=vbar2))
    return out


def excluded(findings):
    return any(f.get("triggered") for f in findings)


# -- local split of a mixed segment ----------------------------------------------------


@dataclass(frozen=True)
class SplitResult:
    exact: float
    first_order: float
    n1: float
    n2: float


def local_split_test(profile, x0, eps):
    """Energy change from replacing the mixed segment [x0, x0 + eps] by two flat
    single-species pieces holding the same particle numbers."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    lo, hi = x0, x0 + eps
    seg = segment_inside(profile, lo, hi, MIXED)
    brk = tuple(sorted(set(profile.V1.kinks()) | set(profile.V2.kinks())))
    x, w = quadrature.nodes_weights([(lo, hi)], brk)
    r1, r2 = profile._seg_rho(seg, x)
    if np.min(r1) <= 0 or np.min(r2) <= 0:
        raise PreconditionError("both densities must be positive on the segment")
    a = profile.alpha
    v1, v2 = profile.V1.value(x), profile.V2.value(x)
    n1, n2 = float(np.dot(w, r1)), float(np.dot(w, r2))
    before = float(np.dot(w, 0.5 * (r1 * r1 + r2 * r2 + 2 * a * r1 * r2) + v1 * r1 + v2 * r2))
    split = lo + eps * n1 / (n1 + n2)
    dens = (n1 + n2) / eps
    after = 0.0
    for (p, q), V in (((lo, split), profile.V1), ((split, hi), profile.V2)):
        xs, ws = quadrature.nodes_weights([(p, q)], brk)
        after += float(np.dot(ws, 0.5 * dens * dens + V.value(xs) * dens))
    first = eps * (1.0 - a) * (n1 / eps) * (n2 / eps)
    return SplitResult(after - before, first, n1, n2)
