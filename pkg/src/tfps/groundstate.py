"""Ground-state selection: regime, candidates, stability, exclusion, ranking."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, oracle, squarewell
from .errors import (
    ConvergenceError,
    DegenerateContinuumError,
    DegenerateThresholdError,
    InfeasibleTopologyError,
    NonPhysicalError,
    PreconditionError,
    TFPSError,
    ValidationError,
)
from .potential import SquareWell
from .profiles import (
    MIXED,
    SINGLE1,
    SINGLE2,
    common_window,
    mixed_profile,
    optimal_profile,
    share_profile,
    single_profile,
    window_for_mu,
)
from .scaling import FIXED_MU, FIXED_N, ReducedParams, Solution, from_reduced, to_reduced
from .stability import assemble_hessian, excluded, nonmax_exclusion_fixed_mu, nonmax_exclusion_fixed_N
from .tolerances import DEFAULT, Tolerances
from .walls import (
    PhiFunction,
    _single_mu,
    enumerate_topologies,
    fixed_n_window,
    solve_fixed_mu,
    solve_fixed_N,
)

MIXED_FAVORED = squarewell.MIXED_FAVORED
SEPARATED_FAVORED = squarewell.SEPARATED_FAVORED
DEGENERATE = squarewell.DEGENERATE

STABLE, UNSTABLE, EXCLUDED = "stable", "unstable", "excluded"
NOT_STATIONARY = "not_stationary"
CROSS_CHECK_ITER = 5000


def classify_regime(alpha):
    if not alpha >= 0 or not math.isfinite(alpha):
        raise ValidationError(f"alpha must be a nonnegative finite number, got {alpha!r}")
    if alpha < 1.0:
        return MIXED_FAVORED
    if alpha > 1.0:
        return SEPARATED_FAVORED
    return DEGENERATE


@dataclass(frozen=True)
class Problem:
    """Reduced-unit problem plus solver options."""

    alpha: float
    V1: object
    V2: object
    ensemble: str
    N1: float | None = None
    N2: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    beta: float | None = None
    window: tuple | None = None
    max_walls: int | None = None
    tol: Tolerances = DEFAULT
    cross_check: bool = True
    oracle_M: int = oracle.DEFAULT_M
    seed: int = oracle.DEFAULT_SEED
    workers: int | None = None
    include_separated: bool = False

    def __post_init__(self):
        classify_regime(self.alpha)
        if self.ensemble == FIXED_N:
            if self.N1 is None or self.N2 is None or self.N1 < 0 or self.N2 < 0 or self.N1 + self.N2 <= 0:
                raise ValidationError("fixed-N problem needs N1, N2 >= 0, not both zero")
        elif self.ensemble == FIXED_MU:
            if self.mu1 is None or self.mu2 is None:
                raise ValidationError("fixed-mu problem needs mu1 and mu2")
        else:
            raise ValidationError(f"unknown ensemble {self.ensemble!r}")

    @classmethod
    def from_reduced(cls, params: ReducedParams, **options):
        return cls(
            alpha=params.alpha, V1=params.V1, V2=params.V2, ensemble=params.ensemble,
            N1=params.N1, N2=params.N2, mu1=params.mu1, mu2=params.mu2, beta=params.beta, **options,
        )

    def with_alpha(self, alpha):
        from dataclasses import replace

        return replace(self, alpha=alpha)

    def solve_window(self):
        if self.window is not None:
            return common_window(self.V1, self.V2, self.window)
        if self.ensemble == FIXED_N:
            return fixed_n_window(self.V1, self.V2, self.N1, self.N2)
        return window_for_mu(self.V1, self.V2, self.mu1, self.mu2)


@dataclass
class Candidate:
    kind: str
    label: str
    profile: object
    energy: float
    config: object = None
    verdict: str = STABLE
    hessian: object = None
    exclusions: list = field(default_factory=list)

    @property
    def walls(self):
        return tuple(self.config.R) if self.config is not None else ()

    @property
    def n_walls(self):
        return len(self.walls)

    @property
    def eligible(self):
        return self.verdict == STABLE

    def to_dict(self):
        p = self.profile
        n1, n2 = p.particle_numbers()
        return {
            "kind": self.kind,
            "label": self.label,
            "energy": self.energy,
            "verdict": self.verdict,
            "walls": list(self.walls),
            "orientations": list(self.config.s) if self.config is not None else [],
            "maximal": bool(self.config.is_maximal) if self.config is not None else None,
            "mu1": p.mu1,
            "mu2": p.mu2,
            "N1": n1,
            "N2": n2,
            "S1": [list(iv) for iv in p.S1.intervals],
            "S2": [list(iv) for iv in p.S2.intervals],
            "mixed_measure": p.mixed_measure(),
            "segments": [[s.lo, s.hi, s.form] for s in p.segments],
            "hessian": self.hessian.to_dict() if self.hessian is not None else None,
            "exclusions": list(self.exclusions),
        }


@dataclass
class SolveReport:
    regime: str
    ensemble: str
    alpha: float
    candidates: list
    ground_state: list
    status: str = "ok"
    mu1: float = math.nan
    mu2: float = math.nan
    N1: float = math.nan
    N2: float = math.nan
    oracle: dict | None = None
    flags: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def winners(self):
        return [self.candidates[i] for i in self.ground_state]

    @property
    def winner(self):
        return self.candidates[self.ground_state[0]] if self.ground_state else None

    @property
    def degeneracy(self):
        return len(self.ground_state)

    @property
    def energy(self):
        return self.winner.energy if self.winner is not None else math.nan

    @property
    def oracle_disagreement(self):
        return bool(self.oracle and self.oracle.get("disagreement"))

    def to_dict(self):
        return {
            "regime": self.regime,
            "ensemble": self.ensemble,
            "alpha": self.alpha,
            "status": self.status,
            "mu1": self.mu1,
            "mu2": self.mu2,
            "N1": self.N1,
            "N2": self.N2,
            "energy": self.energy,
            "ground_state": list(self.ground_state),
            "degeneracy": self.degeneracy,
            "candidates": [c.to_dict() for c in self.candidates],
            "oracle": self.oracle,
            "flags": list(self.flags),
            "provenance": dict(self.provenance),
        }

    def solution(self, samples=400, index=None):
        """The selected profile sampled on a grid, as a reduced-unit Solution."""
        cand = self.winner if index is None else self.candidates[index]
        if cand is None:
            raise PreconditionError("report has no ground state")
        p = cand.profile
        x = np.unique(np.concatenate([np.linspace(p.window[0], p.window[1], samples), [v for s in p.segments for v in (s.lo, s.hi)]]))
        r1, r2 = p.rho(x)
        n1, n2 = p.particle_numbers()
        return Solution(
            x, r1, r2, p.mu1, p.mu2, n1, n2, cand.walls, p.S1.intervals, p.S2.intervals, cand.energy,
            provenance=self.provenance.get("problem", ""),
        )


# -- mixed construction at fixed particle numbers ----------------------------------------


def _measures(profile):
    m = {MIXED: 0.0, SINGLE1: 0.0, SINGLE2: 0.0}
    for s in profile.segments:
        if s.form in m:
            m[s.form] += s.hi - s.lo
    return m[MIXED], m[SINGLE1], m[SINGLE2]


def mixed_fixed_N(N1, N2, alpha, V1, V2, window=None, tol=DEFAULT, max_iter=200):
    """Pointwise-optimal profile whose particle numbers are (N1, N2), alpha < 1.

    Newton on (mu1, mu2) with the exact Jacobian dN/dmu, which is piecewise
    constant in the measures of the mixed and single-species regions.
    """
    if not alpha < 1.0:
        raise PreconditionError("mixed construction needs alpha < 1")
    win0 = fixed_n_window(V1, V2, N1, N2) if window is None else common_window(V1, V2, window)
    if N1 == 0 or N2 == 0:
        k = 1 if N1 > 0 else 2
        V = V1 if k == 1 else V2
        mu = _single_mu(V, N1 + N2, win0)
        return single_profile(k, mu, V1, V2, window)
    target = np.array([N1, N2], dtype=float)
    mu = np.array([_single_mu(V1, N1, win0), _single_mu(V2, N2, win0)])

    def state(m):
        p = optimal_profile(m[0], m[1], alpha, V1, V2, window)
        return p, np.asarray(p.particle_numbers()) - target

    p, r = state(mu)
    scale = max(1.0, float(np.max(target)))
    best = float(np.max(np.abs(r)))
    stall = 0
    d = 1.0 - alpha * alpha
    for _ in range(max_iter):
        if best <= 4 * np.finfo(float).eps * scale or stall >= 3:
            break
        M, S11, S22 = _measures(p)
        J = np.array([[M / d + S11, -alpha * M / d], [-alpha * M / d, M / d + S22]])
        if abs(np.linalg.det(J)) <= 1e-300 or np.any(np.diag(J) <= 0):
            # a species has no support yet: raise its chemical potential
            step = np.where(np.diag(J) <= 0, np.maximum(1.0, np.abs(mu)) * 0.5, 0.0)
            if not np.any(step):
                raise ConvergenceError("singular normalization Jacobian", [best])
        else:
            step = np.linalg.solve(J, -r)
        t = 1.0
        # once within tolerance, only a full step is worth trying
        t_min = 1.0 if best <= tol.tol_norm * scale else 1e-8
        while True:
            cand = mu + t * step
            pc, rc = state(cand)
            rn = float(np.max(np.abs(rc)))
            if rn < best or t <= t_min:
                break
            t *= 0.5
        if rn < best:
            stall = 0 if rn < 0.5 * best else stall + 1
            mu, p, r, best = cand, pc, rc, rn
        else:
            stall += 1
    if best > tol.tol_norm * scale:
        raise ConvergenceError(f"mixed normalization did not converge (residual {best:.3e})", [best])
    return p


# -- candidate generation ---------------------------------------------------------------


def _pmap(fn, items, workers):
    workers = oracle.worker_count(workers)
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _solve_skeleton(job):
    sk, prob, window = job
    try:
        if prob.ensemble == FIXED_N:
            cfgs = solve_fixed_N(sk, prob.N1, prob.N2, prob.V1, prob.V2, window, prob.beta, prob.tol)
        else:
            cfgs = solve_fixed_mu(sk, prob.mu1, prob.mu2, prob.V1, prob.V2, window, prob.beta, prob.tol)
        return cfgs, None
    except DegenerateContinuumError as e:
        return [], f"wall_continuum: {e}"
    except InfeasibleTopologyError:
        return [], None


def _judge(cfg, prob):
    prof = cfg.profile(prob.alpha)
    energy = prof.internal_energy() if prob.ensemble == FIXED_N else prof.grand_canonical_energy()
    cand = Candidate("separated", cfg.label(), prof, energy, cfg)
    if cfg.n == 0:
        return cand
    try:
        rep = assemble_hessian(cfg, prob.ensemble, prob.tol)
    except PreconditionError:
        cand.verdict = NOT_STATIONARY
        return cand
    cand.hessian = rep
    if not rep.positive_definite:
        cand.verdict = UNSTABLE
        return cand
    fn = nonmax_exclusion_fixed_N if prob.ensemble == FIXED_N else nonmax_exclusion_fixed_mu
    cand.exclusions = fn(cfg, prob.beta)
    if excluded(cand.exclusions):
        cand.verdict = EXCLUDED
    return cand


def separated_candidates(prob: Problem, window=None):
    """All separated stationary configurations with stability and exclusion verdicts."""
    window = prob.solve_window() if window is None else window
    skeletons = enumerate_topologies(prob.V1, prob.V2, prob.max_walls, window)
    results = _pmap(_solve_skeleton, [(sk, prob, window) for sk in skeletons], prob.workers)
    flags, cfgs, seen = [], [], set()
    for found, flag in results:
        if flag and flag not in flags:
            flags.append(flag)
        for c in found:
            if c.key() not in seen:
                seen.add(c.key())
                cfgs.append(c)
    cfgs.sort(key=lambda c: c.sort_key())
    return [_judge(c, prob) for c in cfgs], flags


def _phi_constant(prob, window):
    return PhiFunction(prob.V1, prob.V2).is_constant(window)


def _share_candidate(prob, window):
    """Co-minimizer at alpha = 1 when V1 - V2 is constant."""
    c = prob.V1.scalar(0.5 * (window[0] + window[1])) - prob.V2.scalar(0.5 * (window[0] + window[1]))
    if prob.ensemble == FIXED_N:
        total = prob.N1 + prob.N2
        mu = _single_mu(prob.V1, total, window)
        prof = share_profile(mu, prob.V1, prob.V2, (prob.N1 / total, prob.N2 / total), window, mu2=mu - c)
        return Candidate("share", "share", prof, prof.internal_energy())
    if abs((prob.mu1 - prob.mu2) - c) > prob.tol.tol_root * max(1.0, abs(c)):
        return None
    prof = share_profile(prob.mu1, prob.V1, prob.V2, (0.5, 0.5), window, mu2=prob.mu2)
    if not prof.segments:
        return None
    return Candidate("share", "share", prof, prof.grand_canonical_energy())


def _rank(cands, tol, fewest_walls=True):
    elig = [i for i, c in enumerate(cands) if c.eligible]
    if not elig:
        return []
    emin = min(cands[i].energy for i in elig)
    band = tol.tol_energy * max(1.0, abs(emin))
    group = [i for i in elig if cands[i].energy <= emin + band]
    if fewest_walls:
        nmin = min(cands[i].n_walls for i in group)
        group = [i for i in group if cands[i].n_walls == nmin]
    return sorted(group, key=lambda i: (cands[i].energy, i))


def _cross_check(prob, report, window):
    win = report.winner
    if win is None:
        return None
    grid = oracle.make_grid(window, prob.oracle_M, prob.V1, prob.V2)
    if prob.ensemble == FIXED_MU:
        res = oracle.pointwise_minimize_fixed_mu(grid, prob.mu1, prob.mu2, prob.alpha)
        method = "pointwise"
    else:
        # convex for alpha <= 1: the structured starts suffice
        starts = oracle.RANDOM_STARTS if prob.alpha > 1.0 else 0
        res = oracle.projected_descent_fixed_N(
            grid, prob.N1, prob.N2, prob.alpha, max_iter=CROSS_CHECK_ITER, seed=prob.seed,
            random_starts=starts, workers=prob.workers, phi_sorted=True,
        )
        method = "projected_descent"
    out = oracle.compare(win.profile, res, grid, win.energy)
    gap = win.energy - res.energy
    bound = prob.tol.tol_oracle * max(1.0, abs(win.energy))
    out.update(
        method=method,
        M=prob.oracle_M,
        seed=prob.seed,
        window=list(window),
        disagreement=bool(gap > bound),
        oracle_above=bool(-gap > bound),
        converged=res.converged,
        monotone=res.monotone,
    )
    return out


def solve_ground_state(prob: Problem) -> SolveReport:
    regime = classify_regime(prob.alpha)
    window = prob.solve_window()
    cands, flags = [], []
    sep_needed = regime != MIXED_FAVORED or prob.include_separated

    if regime == MIXED_FAVORED:
        if prob.ensemble == FIXED_MU:
            prof = optimal_profile(prob.mu1, prob.mu2, prob.alpha, prob.V1, prob.V2, prob.window)
            energy = prof.grand_canonical_energy()
        else:
            prof = mixed_fixed_N(prob.N1, prob.N2, prob.alpha, prob.V1, prob.V2, prob.window, prob.tol)
            energy = prof.internal_energy()
        if prof.segments:
            cands.append(Candidate("mixed", "mixed", prof, energy))

    if sep_needed:
        seps, f = separated_candidates(prob, window)
        flags += f
        cands += seps
    if regime == DEGENERATE and _phi_constant(prob, window):
        share = _share_candidate(prob, window)
        if share is not None:
            cands.append(share)

    if regime == MIXED_FAVORED:
        ground = [0] if cands and cands[0].kind == "mixed" else []
        if ground:
            e = cands[0].energy
            slack = prob.tol.tol_energy * max(1.0, abs(e))
            if any(c.eligible and c.energy < e - slack for c in cands[1:]):
                flags.append("regime_inconsistency")
    else:
        ground = _rank(cands, prob.tol, fewest_walls=regime == SEPARATED_FAVORED)
        if regime == DEGENERATE and len(ground) > 1:
            flags.append("co_minimizers")

    report = SolveReport(regime, prob.ensemble, prob.alpha, cands, ground, flags=flags)
    if not ground:
        report.status = "empty"
    else:
        w = report.winner.profile
        n1, n2 = w.particle_numbers()
        report.mu1, report.mu2 = w.mu1, w.mu2
        report.N1, report.N2 = n1, n2
        if prob.ensemble == FIXED_N:
            report.N1, report.N2 = prob.N1, prob.N2
        else:
            report.mu1, report.mu2 = prob.mu1, prob.mu2
    if prob.cross_check and ground:
        owin = window if prob.ensemble == FIXED_N else _oracle_window(prob, report)
        report.oracle = _cross_check(prob, report, owin)
        if report.oracle_disagreement:
            report.status = "oracle_disagreement"
    report.provenance = {
        "version": __version__,
        "tolerances": prob.tol.to_dict(),
        "seed": prob.seed,
        "oracle_M": prob.oracle_M,
        "window": list(window),
        "max_walls": prob.max_walls,
    }
    return report


def _oracle_window(prob, report):
    lo, hi = report.winner.profile.window
    for c in report.candidates:
        lo, hi = min(lo, c.profile.window[0]), max(hi, c.profile.window[1])
    return common_window(prob.V1, prob.V2, (lo, hi))


# -- raw units -----------------------------------------------------------------------------


def solve_raw(raw, ratio=1.0, samples=400, **options):
    """Solve a raw-unit problem through the reduced map.

    Returns (report, raw_solution); the report is in reduced units.
    """
    red = to_reduced(raw, ratio, options.get("window"))
    prob = Problem.from_reduced(red, **options)
    report = solve_ground_state(prob)
    report.provenance["problem"] = red.provenance
    if not report.ground_state:
        return report, None
    return report, from_reduced(report.solution(samples), raw)


# -- alpha sweeps ------------------------------------------------------------------------


def _square_well(prob):
    V1, V2 = prob.V1, prob.V2
    return (
        isinstance(V1, SquareWell)
        and isinstance(V2, SquareWell)
        and V1.finite_interval() == V2.finite_interval()
    )


def _verdict(em, es, tol):
    if not (math.isfinite(em) and math.isfinite(es)):
        return "separated" if math.isfinite(es) else "mixed" if math.isfinite(em) else "undetermined"
    band = tol.tol_energy * max(1.0, abs(em), abs(es))
    if em < es - band:
        return "mixed"
    if es < em - band:
        return "separated"
    return "degenerate"


def _sweep_point(job):
    prob, alpha, e_sep, sw = job
    row = {"alpha": alpha, "E_mixed": math.nan, "E_separated_min": e_sep, "forbidden": False, "error": ""}
    try:
        if prob.ensemble == FIXED_MU:
            if sw:
                L = prob.V1.length
                well = squarewell.WellProblem(L, alpha, mu1=prob.mu1, mu2=prob.mu2)
                try:
                    row["E_mixed"] = squarewell.mixed_grand_energy(well)
                except NonPhysicalError as e:
                    row["forbidden"] = True
                    row["error"] = str(e)
            else:
                row["E_mixed"] = mixed_profile(prob.mu1, prob.mu2, alpha, prob.V1, prob.V2, prob.window).grand_canonical_energy()
        else:
            if sw:
                L = prob.V1.length
                row["E_mixed"] = squarewell.mixed_internal_energy(squarewell.WellProblem(L, alpha, prob.N1, prob.N2))
            elif alpha < 1.0:
                row["E_mixed"] = mixed_fixed_N(prob.N1, prob.N2, alpha, prob.V1, prob.V2, prob.window, prob.tol).internal_energy()
            else:
                row["error"] = "no mixed construction at fixed N for alpha >= 1"
    except (TFPSError, DegenerateThresholdError) as e:
        row["error"] = str(e)
    row["verdict"] = _verdict(row["E_mixed"], row["E_separated_min"], prob.tol)
    return row


def separated_minimum(prob):
    """Lowest energy among stable, non-excluded separated configurations."""
    if _square_well(prob):
        L = prob.V1.length
        if prob.ensemble == FIXED_MU:
            return squarewell.separated_grand_minimum(squarewell.WellProblem(L, 2.0, mu1=prob.mu1, mu2=prob.mu2))[0]
        if prob.N1 + prob.N2 > 0:
            return squarewell.separated_internal_optimum(squarewell.WellProblem(L, 2.0, prob.N1, prob.N2))[0]
    cands, _ = separated_candidates(prob)
    vals = [c.energy for c in cands if c.eligible]
    return min(vals) if vals else math.nan


def sweep_alpha(prob: Problem, alphas):
    """Rows (alpha, E_mixed, E_separated_min, verdict) and the crossing locations.

    Separated energies do not depend on alpha, so they are computed once.
    """
    alphas = [float(a) for a in alphas]
    if any(a < 0 for a in alphas):
        raise ValidationError("alpha values must be nonnegative")
    sw = _square_well(prob)
    try:
        e_sep = separated_minimum(prob)
    except TFPSError as e:
        e_sep = math.nan
        err = str(e)
    else:
        err = ""
    rows = _pmap(_sweep_point, [(prob, a, e_sep, sw) for a in alphas], prob.workers)
    if err:
        for r in rows:
            r["error"] = (r["error"] + "; " if r["error"] else "") + err
    if sw and prob.ensemble == FIXED_MU:
        lo, hi = squarewell.alpha_bounds(prob.mu1, prob.mu2)
        for r in rows:
            r["alpha_l"], r["alpha_u"] = lo, hi
    return rows, crossings(rows)


def crossings(rows):
    """alpha values where E_mixed - E_separated_min changes sign (linear interpolation)."""
    out = []
    pts = [(r["alpha"], r["E_mixed"] - r["E_separated_min"]) for r in rows]
    pts = [(a, d) for a, d in pts if math.isfinite(d)]
    pts.sort()
    for i, (a, d) in enumerate(pts):
        if d == 0.0:
            out.append(a)
        elif i and pts[i - 1][1] != 0.0 and (d > 0) != (pts[i - 1][1] > 0):
            a0, d0 = pts[i - 1]
            out.append(a0 + (a - a0) * d0 / (d0 - d))
    return out
