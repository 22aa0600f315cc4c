"""Brute-force reference minimizers on a uniform grid.

These routes share no code with the analytic solver beyond potential
evaluation: the fixed-mu oracle compares all KKT candidates point by point,
the fixed-N oracle runs projected gradient descent on the trapezoid-discretized
internal energy, and the raw routes work directly with the unreduced
interaction matrix.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import root

from . import quadrature

DEFAULT_M = 4001
DEFAULT_SEED = 42
RANDOM_STARTS = 8


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    M: int
    x: np.ndarray
    w: np.ndarray
    V1: np.ndarray
    V2: np.ndarray

    @property
    def h(self):
        return (self.hi - self.lo) / (self.M - 1)

    def phi(self):
        return self.V1 - self.V2


def make_grid(window, M, V1, V2):
    if M < 2:
        raise ValueError("grid needs at least two points")
    lo, hi = float(window[0]), float(window[1])
    x = np.linspace(lo, hi, M)
    h = (hi - lo) / (M - 1)
    w = np.full(M, h)
    w[0] = w[-1] = 0.5 * h
    return Grid(lo, hi, M, x, w, V1.value(x), V2.value(x))


@dataclass
class OracleResult:
    rho1: np.ndarray
    rho2: np.ndarray
    energy: float
    mu1: float = math.nan
    mu2: float = math.nan
    mu_spread: tuple = (math.nan, math.nan)
    iterations: int = 0
    converged: bool = True
    monotone: bool = True
    mass_error: float = 0.0
    grad_norm: float = math.nan
    ties: int = 0
    restarts: list = field(default_factory=list)


# -- fixed chemical potentials ----------------------------------------------------------


def _candidates(t1, t2, alpha):
    """KKT candidates (rho1, rho2, e) stacked along a new first axis."""
    z = np.zeros_like(t1)
    c1 = np.maximum(t1, 0.0)
    c2 = np.maximum(t2, 0.0)
    r1 = [z, c1, z]
    r2 = [z, z, c2]
    if alpha < 1.0:
        d = 1.0 - alpha * alpha
        m1, m2 = (t1 - alpha * t2) / d, (t2 - alpha * t1) / d
        ok = (m1 >= 0) & (m2 >= 0)
        r1.append(np.where(ok, m1, 0.0))
        r2.append(np.where(ok, m2, 0.0))
    r1, r2 = np.array(r1), np.array(r2)
    e = 0.5 * (r1 * r1 + r2 * r2) + alpha * r1 * r2 - t1 * r1 - t2 * r2
    return r1, r2, e


def pointwise_minimize_fixed_mu(grid, mu1, mu2, alpha):
    """Exact per-point minimizer of the grand-canonical energy density."""
    with np.errstate(invalid="ignore"):
        t1 = np.where(np.isfinite(grid.V1), mu1 - grid.V1, -np.inf)
        t2 = np.where(np.isfinite(grid.V2), mu2 - grid.V2, -np.inf)
    t1f, t2f = np.maximum(t1, -1e300), np.maximum(t2, -1e300)
    r1, r2, e = _candidates(t1f, t2f, alpha)
    best = np.argmin(e, axis=0)
    cols = np.arange(grid.M)
    emin = e[best, cols]
    scale = np.maximum(1.0, np.abs(emin))
    ties = int(np.sum(np.sum(e <= emin + 1e-14 * scale, axis=0) > 1 & (emin < 0)))
    rho1, rho2 = r1[best, cols], r2[best, cols]
    energy = float(np.dot(grid.w, emin))
    return OracleResult(rho1, rho2, energy, mu1, mu2, ties=ties)


# -- fixed particle numbers ---------------------------------------------------------------


def project_mass(c, w, N):
    """Weighted projection of ``c`` onto {x >= 0, sum w x = N}."""
    if N <= 0:
        return np.zeros_like(c)
    order = np.argsort(-c, kind="stable")
    cs, ws = c[order], w[order]
    W = np.cumsum(ws)
    lam = (np.cumsum(ws * cs) - N) / W
    j = np.nonzero(cs - lam > 0)[0][-1]
    return np.maximum(c - lam[j], 0.0)


def internal_energy_grid(grid, rho1, rho2, alpha):
    e = 0.5 * (rho1 * rho1 + rho2 * rho2) + alpha * rho1 * rho2 + grid.V1 * rho1 + grid.V2 * rho2
    return float(np.dot(grid.w, e))


def _descend(grid, N1, N2, alpha, rho1, rho2, max_iter, tol):
    """Monotone accelerated projected gradient with Armijo backtracking.

    The extrapolated point y is only a trial: an iterate is accepted when its
    energy does not exceed the current one, otherwise momentum is reset.
    """
    w = grid.w
    s = 1.0 / (1.0 + abs(alpha))
    x1, x2 = project_mass(rho1, w, N1), project_mass(rho2, w, N2)
    p1, p2 = x1, x2
    U = internal_energy_grid(grid, x1, x2, alpha)
    history = [U]
    mass_err = 0.0
    monotone = True
    converged = False
    t = 1.0
    # summation round-off bound for the energy
    roundoff = 4.0 * grid.M * np.finfo(float).eps
    it = 0
    for it in range(1, max_iter + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_next
        y1, y2 = x1 + mom * (x1 - p1), x2 + mom * (x2 - p2)
        Uy = internal_energy_grid(grid, y1, y2, alpha)
        g1 = y1 + alpha * y2 + grid.V1
        g2 = y2 + alpha * y1 + grid.V2
        step = s
        while True:
            z1 = project_mass(y1 - step * g1, w, N1)
            z2 = project_mass(y2 - step * g2, w, N2)
            d1, d2 = z1 - y1, z2 - y2
            Uz = internal_energy_grid(grid, z1, z2, alpha)
            model = Uy + np.dot(w, g1 * d1 + g2 * d2) + np.dot(w, d1 * d1 + d2 * d2) / (2.0 * step)
            if Uz <= model + roundoff * max(1.0, abs(Uy)) or step < 1e-12:
                break
            step *= 0.5
        p1, p2 = x1, x2
        if Uz <= U:
            x1, x2, U = z1, z2, Uz
            t = t_next
        else:
            t = 1.0
        monotone = monotone and U <= history[-1]
        mass_err = max(mass_err, abs(np.dot(w, x1) - N1) / max(N1, 1e-300), abs(np.dot(w, x2) - N2) / max(N2, 1e-300))
        history.append(U)
        if len(history) > 10 and history[-11] - U < tol * max(1.0, abs(U)):
            converged = True
            break
    g1 = x1 + alpha * x2 + grid.V1
    g2 = x2 + alpha * x1 + grid.V2
    pg = np.concatenate([project_mass(x1 - g1, w, N1) - x1, project_mass(x2 - g2, w, N2) - x2])
    return x1, x2, U, it, converged, monotone, mass_err, float(np.sqrt(np.dot(np.concatenate([w, w]), pg * pg)))


def _implied_mu(rho, g):
    thr = 1e-8 * max(1e-300, float(np.max(rho))) if rho.size else 0.0
    m = rho > thr
    if not np.any(m):
        return math.nan, math.nan
    vals = g[m]
    return float(np.mean(vals)), float(np.ptp(vals))


def _initial_states(grid, N1, N2, seed, random_starts=RANDOM_STARTS, phi_sorted=False):
    rng = np.random.default_rng(seed)
    total = N1 + N2
    frac = N1 / total if total > 0 else 0.5
    cw = np.cumsum(grid.w) / np.sum(grid.w)
    states = []
    states.append(((cw <= frac).astype(float), (cw > frac).astype(float)))
    states.append(((cw >= 1 - frac).astype(float), (cw < 1 - frac).astype(float)))
    if phi_sorted:
        # species 1 where V1 - V2 is lowest
        order = np.argsort(grid.phi(), kind="stable")
        acc = np.cumsum(grid.w[order]) / np.sum(grid.w)
        a = np.zeros(grid.M)
        a[order[acc <= frac]] = 1.0
        states.append((a, 1.0 - a))
    for _ in range(random_starts):
        states.append((rng.random(grid.M), rng.random(grid.M)))
    return states


def _run_start(args):
    grid, N1, N2, alpha, r1, r2, max_iter, tol = args
    return _descend(grid, N1, N2, alpha, r1, r2, max_iter, tol)


def projected_descent_fixed_N(grid, N1, N2, alpha, max_iter=20000, tol=1e-14, seed=DEFAULT_SEED,
                              random_starts=RANDOM_STARTS, workers=None, phi_sorted=False):
    """Best of several projected-gradient runs on the discretized internal energy."""
    if not (N1 > 0 and N2 > 0) and not (N1 >= 0 and N2 >= 0 and N1 + N2 > 0):
        raise ValueError("particle numbers must be nonnegative and not both zero")
    states = _initial_states(grid, N1, N2, seed, random_starts, phi_sorted)
    jobs = [(grid, N1, N2, alpha, a, b, max_iter, tol) for a, b in states]
    workers = worker_count(workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            runs = list(ex.map(_run_start, jobs))
    else:
        runs = [_run_start(j) for j in jobs]
    energies = [r[2] for r in runs]
    best = min(range(len(runs)), key=lambda i: (energies[i], tuple(np.round(runs[i][0][:8], 12))))
    rho1, rho2, U, it, conv, mono, merr, gn = runs[best]
    g1 = rho1 + alpha * rho2 + grid.V1
    g2 = rho2 + alpha * rho1 + grid.V2
    mu1, s1 = _implied_mu(rho1, g1)
    mu2, s2 = _implied_mu(rho2, g2)
    return OracleResult(
        rho1, rho2, U, mu1, mu2, (s1, s2), it, conv, all(r[5] for r in runs), max(r[6] for r in runs), gn,
        restarts=[{"energy": r[2], "iterations": r[3], "converged": r[4]} for r in runs],
    )


def worker_count(workers=None):
    if workers is None:
        env = os.environ.get("TFPS_WORKERS")
        workers = int(env) if env else 1
    return max(1, int(workers))


# -- comparison -------------------------------------------------------------------


def compare(profile, result, grid, analytic_energy=None, threshold=1e-8):
    """Discrepancy between an analytic profile and oracle densities on ``grid``."""
    r1, r2 = profile.rho(grid.x)
    d1, d2 = r1 - result.rho1, r2 - result.rho2
    sup = float(max(np.max(np.abs(d1)), np.max(np.abs(d2))))
    l2 = float(math.sqrt(np.dot(grid.w, d1 * d1 + d2 * d2)))
    mism = ((r1 > threshold) != (result.rho1 > threshold)) | ((r2 > threshold) != (result.rho2 > threshold))
    sym = float(np.dot(grid.w, mism))
    out = {"sup_norm": sup, "l2": l2, "support_symdiff": sym}
    if analytic_energy is not None:
        out["energy_analytic"] = analytic_energy
        out["energy_oracle"] = result.energy
        out["energy_diff"] = analytic_energy - result.energy
    return out


# -- raw-unit direct routes --------------------------------------------------------------


def _raw_candidates(t1, t2, U):
    U11, U22, U12 = U
    z = np.zeros_like(t1)
    rs = [(z, z), (np.maximum(t1, 0) / U11, z), (z, np.maximum(t2, 0) / U22)]
    det = U11 * U22 - U12 * U12
    if det > 0:
        m1 = (U22 * t1 - U12 * t2) / det
        m2 = (U11 * t2 - U12 * t1) / det
        ok = (m1 >= 0) & (m2 >= 0)
        rs.append((np.where(ok, m1, 0.0), np.where(ok, m2, 0.0)))
    r1 = np.array([a for a, _ in rs])
    r2 = np.array([b for _, b in rs])
    e = 0.5 * (U11 * r1 * r1 + U22 * r2 * r2) + U12 * r1 * r2 - t1 * r1 - t2 * r2
    return r1, r2, e


@dataclass
class RawProfile:
    """Piecewise raw-unit profile: ``cuts`` delimit cells with a fixed winner."""

    cuts: np.ndarray
    winner: np.ndarray
    mu1: float
    mu2: float
    U: tuple
    V1: object
    V2: object

    def _t(self, x):
        return self.mu1 - self.V1.value(x), self.mu2 - self.V2.value(x)

    def rho(self, x):
        x = np.asarray(x, dtype=float)
        t1, t2 = self._t(x)
        r1, r2, e = _raw_candidates(t1, t2, self.U)
        idx = np.clip(np.searchsorted(self.cuts, x, side="right") - 1, 0, len(self.winner) - 1)
        k = self.winner[idx]
        cols = np.arange(x.size)
        out1, out2 = r1[k, cols], r2[k, cols]
        outside = (x < self.cuts[0]) | (x > self.cuts[-1])
        out1[outside] = 0.0
        out2[outside] = 0.0
        return out1, out2

    def supports(self):
        res = []
        for species in (1, 2):
            iv = []
            for a, b, k in zip(self.cuts[:-1], self.cuts[1:], self.winner):
                present = k == species or k == 3
                if present:
                    if iv and iv[-1][1] == a:
                        iv[-1][1] = b
                    else:
                        iv.append([a, b])
            res.append([tuple(i) for i in iv])
        return res

    def numbers(self):
        brk = tuple(sorted(set(self.V1.kinks()) | set(self.V2.kinks())))
        out = np.zeros(2)
        for a, b, k in zip(self.cuts[:-1], self.cuts[1:], self.winner):
            if k == 0:
                continue
            x, w = quadrature.nodes_weights([(a, b)], brk)
            r1, r2 = self.rho(x)
            out += [np.dot(w, r1), np.dot(w, r2)]
        return out

    def mixed_measure(self):
        return float(sum(b - a for a, b, k in zip(self.cuts[:-1], self.cuts[1:], self.winner) if k == 3))


def _winner(x, mu1, mu2, U, V1, V2):
    """KKT label per point: 0 empty, 1 or 2 single species, 3 both.

    Decided by sign conditions (which change sign transversally) rather than
    by comparing energies, whose differences vanish quadratically at a
    mixed/single boundary.
    """
    U11, U22, U12 = U
    t1 = mu1 - V1.value(x)
    t2 = mu2 - V2.value(x)
    det = U11 * U22 - U12 * U12
    lab = np.zeros(x.shape, dtype=int)
    ax1 = (t1 > 0) & (U12 * t1 - U11 * t2 >= 0)
    ax2 = (t2 > 0) & (U12 * t2 - U22 * t1 >= 0)
    both = ax1 & ax2
    # two axis minima only when det < 0: keep the deeper one
    deeper1 = t1 / math.sqrt(U11) >= t2 / math.sqrt(U22)
    lab[ax1 & ~both] = 1
    lab[ax2 & ~both] = 2
    lab[both & deeper1] = 1
    lab[both & ~deeper1] = 2
    if det > 0:
        inner = (U22 * t1 - U12 * t2 > 0) & (U11 * t2 - U12 * t1 > 0)
        lab[inner] = 3
    return lab


def raw_pointwise_fixed_mu(U, mu1, mu2, V1, V2, window, samples=16385):
    """Raw-unit pointwise minimizer with phase boundaries refined by bisection."""
    lo, hi = window
    xs = np.unique(np.concatenate([np.linspace(lo, hi, samples), [k for k in V1.kinks() + V2.kinks() if lo < k < hi]]))
    win = _winner(xs, mu1, mu2, U, V1, V2)
    cuts, labels = [lo], [int(win[0])]
    for i in np.nonzero(win[1:] != win[:-1])[0]:
        a, b = xs[i], xs[i + 1]
        wa = win[i]
        for _ in range(200):
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            if _winner(np.array([m]), mu1, mu2, U, V1, V2)[0] == wa:
                a = m
            else:
                b = m
        cuts.append(b)
        labels.append(int(win[i + 1]))
    cuts.append(hi)
    return RawProfile(np.array(cuts), np.array(labels), mu1, mu2, tuple(U), V1, V2)


def _raw_single_mu(Ukk, N, V, window):
    """mu with integral of max(0, mu - V) / Ukk = N, by bracketing on a fine grid."""
    from scipy.optimize import brentq

    x = np.linspace(window[0], window[1], 20001)
    v = V.value(x)
    vmin = float(np.min(v[np.isfinite(v)]))

    def mass(mu):
        return float(np.trapezoid(np.maximum(mu - np.where(np.isfinite(v), v, np.inf), 0.0), x)) / Ukk - N

    hi = vmin + 1.0
    while mass(hi) < 0:
        hi = vmin + 2.0 * (hi - vmin)
    return brentq(mass, vmin, hi)


def raw_fixed_N(U, N1, N2, V1, V2, window, mu_guess=None):
    """Raw-unit fixed-N solve by root finding on the chemical potentials.

    Without ``mu_guess`` the start is each species alone at its own N.
    """
    if mu_guess is None:
        mu_guess = [_raw_single_mu(U[0], N1, V1, window), _raw_single_mu(U[1], N2, V2, window)]

    def resid(mu):
        prof = raw_pointwise_fixed_mu(U, mu[0], mu[1], V1, V2, window)
        return prof.numbers() - np.array([N1, N2])

    sol = root(resid, np.asarray(mu_guess, dtype=float), method="hybr", options={"xtol": 1e-15})
    return raw_pointwise_fixed_mu(U, sol.x[0], sol.x[1], V1, V2, window), sol
