"""Command-line entry point ``tfps``."""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, groundstate, oracle, report
from .config import parse_config
from .errors import PreconditionError, TFPSError, ValidationError
from .potential import check_proportional
from .scaling import FIXED_N, to_reduced
from .stability import nonmax_exclusion_fixed_mu, nonmax_exclusion_fixed_N
from .walls import enumerate_topologies

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_ORACLE = 0, 2, 3, 4
COMMANDS = ("solve", "enumerate", "stability", "sweep", "oracle", "plot-data")


def worker_cap(requested=None):
    """Requested worker count, capped by TFPS_WORKERS when set."""
    env = os.environ.get("TFPS_WORKERS")
    cap = int(env) if env else None
    n = requested if requested is not None else (cap or 1)
    return max(1, min(n, cap) if cap else n)


class Run:
    def __init__(self, cfg, out, samples, seed):
        self.cfg = cfg
        self.out = Path(out)
        self.samples = samples
        self.seed = seed
        self.workers = worker_cap(cfg.solver.workers)
        self.tol = cfg.tolerances()

    def raw(self, **kw):
        return self.cfg.raw_params(**kw)

    def reduced(self, raw, ratio=None):
        ratio = ratio if ratio is not None else self.cfg.problem.ratio or 1.0
        return to_reduced(raw, ratio, self.cfg.solver.window)

    def problem(self, raw, ratio=None):
        s = self.cfg.solver
        red = self.reduced(raw, ratio)
        prob = groundstate.Problem.from_reduced(
            red, window=s.window, max_walls=s.max_walls, tol=self.tol, cross_check=s.cross_check,
            oracle_M=s.oracle_M, seed=self.seed, workers=self.workers, include_separated=s.include_separated,
        )
        return prob, red

    def provenance(self, **extra):
        return {
            "config_hash": self.cfg.digest,
            "tolerances": self.tol.to_dict(),
            "version": __version__,
            "seed": self.seed,
            "workers": self.workers,
            **extra,
        }

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name


def _raw_samples(raw, profile, samples):
    lo, hi = profile.window
    edges = [v for s in profile.segments for v in (s.lo, s.hi)]
    x = np.unique(np.concatenate([np.linspace(lo, hi, samples), edges]))
    r1, r2 = profile.rho(x)
    return x, r1 / math.sqrt(raw.U11), r2 / math.sqrt(raw.U22), raw.V1.value(x), raw.V2.value(x)


def _raw_summary(rep, raw):
    s1, s2 = math.sqrt(raw.U11), math.sqrt(raw.U22)
    return {
        "U": [raw.U11, raw.U22, raw.U12],
        "mu1": rep.mu1 * s1,
        "mu2": rep.mu2 * s2,
        "N1": rep.N1 / s1,
        "N2": rep.N2 / s2,
    }


def cmd_solve(run):
    raw = run.raw()
    prob, red = run.problem(raw)
    rep = groundstate.solve_ground_state(prob)
    body = {"report": rep.to_dict(), "raw": _raw_summary(rep, raw), "beta": red.beta}
    report.write_json(run.path("report.json"), report.envelope("solve", body, run.provenance()))
    for k, c in enumerate(rep.winners):
        name = "density.csv" if k == 0 else f"density_{k}.csv"
        report.write_density_csv(run.path(name), *_raw_samples(raw, c.profile, run.samples))
    return EXIT_ORACLE if rep.oracle_disagreement else EXIT_OK


def cmd_enumerate(run):
    raw = run.raw()
    prob, _ = run.problem(raw)
    window = prob.solve_window()
    skeletons = enumerate_topologies(prob.V1, prob.V2, prob.max_walls, window)
    cands, flags = groundstate.separated_candidates(prob, window)
    body = {
        "window": list(window),
        "topologies": [{"n": s.n, "leading": s.leading, "maximal": s.maximal} for s in skeletons],
        "configurations": [
            {"label": c.label, "walls": list(c.walls), "energy": c.energy, "verdict": c.verdict} for c in cands
        ],
        "flags": flags,
    }
    report.write_json(run.path("topologies.json"), report.envelope("enumerate", body, run.provenance()))
    return EXIT_OK


def cmd_stability(run):
    if not run.cfg.walls:
        raise ValidationError("the stability command needs a 'walls' list in the config")
    raw = run.raw()
    prob, _ = run.problem(raw)
    target = sorted(run.cfg.walls)
    cands, _ = groundstate.separated_candidates(prob)
    matches = [c for c in cands if c.n_walls == len(target) and c.hessian is not None]
    if not matches:
        raise groundstate.ConvergenceError(f"no stationary configuration with {len(target)} walls", [])
    best = min(matches, key=lambda c: max(abs(a - b) for a, b in zip(c.walls, target)))
    dist = max(abs(a - b) for a, b in zip(best.walls, target))
    fn = nonmax_exclusion_fixed_N if prob.ensemble == FIXED_N else nonmax_exclusion_fixed_mu
    body = {
        "requested_walls": target,
        "matched": best.label,
        "walls": list(best.walls),
        "distance": dist,
        "energy": best.energy,
        "verdict": best.verdict,
        "hessian": best.hessian.to_dict(),
        "exclusions": fn(best.config, prob.beta),
    }
    report.write_json(run.path("stability.json"), report.envelope("stability", body, run.provenance()))
    return EXIT_OK


def cmd_sweep(run):
    sw = run.cfg.sweep
    if sw is None:
        raise ValidationError("the sweep command needs a 'sweep' block in the config")
    raw = run.raw()
    if sw.parameter == "alpha":
        prob, _ = run.problem(raw)
        prob = replace(prob, cross_check=False)
        rows, cross = groundstate.sweep_alpha(prob, sw.values)
        header = ["alpha", "E_mixed", "E_separated_min", "verdict", "forbidden", "error"]
        table = [[r["alpha"], r["E_mixed"], r["E_separated_min"], r["verdict"], str(r["forbidden"]).lower(), r["error"]] for r in rows]
        extra = {"crossings": cross}
        if rows and "alpha_l" in rows[0]:
            extra["forbidden_interval"] = [rows[0]["alpha_l"], rows[0]["alpha_u"]]
    else:
        if not run.cfg.problem.proportional:
            raise ValidationError("a beta sweep needs proportional potentials")
        rows, table, status = [], [], EXIT_OK
        r1, r2 = math.sqrt(raw.U11), math.sqrt(raw.U22)
        for b in sw.values:
            ratio = b * r2 / r1
            V2 = raw.V1.scaled(ratio)
            rb = replace(raw, V2=V2)
            try:
                prob, _ = run.problem(rb, ratio)
                rep = groundstate.solve_ground_state(prob)
                w = rep.winner
                row = [b, rep.energy, rep.regime, w.label if w else "", w.n_walls if w else 0, rep.status]
                if rep.oracle_disagreement:
                    status = EXIT_ORACLE
            except TFPSError as e:
                row = [b, math.nan, "", "", 0, f"error: {e}"]
            table.append(row)
        header = ["beta", "energy", "regime", "ground_label", "n_walls", "status"]
        extra = {}
    report.write_csv(run.path("sweep.csv"), header, table)
    report.write_json(run.path("sweep.json"), report.envelope("sweep", {"parameter": sw.parameter, **extra}, run.provenance()))
    return EXIT_OK if sw.parameter == "alpha" else status


def cmd_oracle(run):
    raw = run.raw()
    prob, _ = run.problem(raw)
    window = prob.solve_window()
    grid = oracle.make_grid(window, prob.oracle_M, prob.V1, prob.V2)
    if prob.ensemble == FIXED_N:
        res = oracle.projected_descent_fixed_N(grid, prob.N1, prob.N2, prob.alpha, seed=run.seed, workers=run.workers)
        method = "projected_descent"
    else:
        res = oracle.pointwise_minimize_fixed_mu(grid, prob.mu1, prob.mu2, prob.alpha)
        method = "pointwise"
    body = {
        "method": method,
        "M": prob.oracle_M,
        "window": list(window),
        "energy": res.energy,
        "mu1": res.mu1,
        "mu2": res.mu2,
        "mu_spread": list(res.mu_spread),
        "iterations": res.iterations,
        "converged": res.converged,
        "monotone": res.monotone,
        "mass_error": res.mass_error,
        "grad_norm": res.grad_norm,
        "restarts": res.restarts,
    }
    report.write_json(run.path("oracle.json"), report.envelope("oracle", body, run.provenance()))
    s1, s2 = math.sqrt(raw.U11), math.sqrt(raw.U22)
    report.write_density_csv(
        run.path("oracle_density.csv"), grid.x, res.rho1 / s1, res.rho2 / s2, raw.V1.value(grid.x), raw.V2.value(grid.x)
    )
    return EXIT_OK if res.converged else EXIT_SOLVER


def cmd_plot_data(run):
    raw = run.raw()
    prob, _ = run.problem(raw)
    rep = groundstate.solve_ground_state(prob)
    index = []
    for k, c in enumerate(rep.candidates):
        name = f"plot_{k:02d}_{c.label}.csv"
        x, r1, r2, v1, _ = _raw_samples(raw, c.profile, run.samples)
        report.write_csv(run.path(name), ["x", "V", "rho1", "rho2"], zip(x, v1, r1, r2))
        index.append({"file": name, "label": c.label, "energy": c.energy, "verdict": c.verdict, "ground": k in rep.ground_state})
    body = {"regime": rep.regime, "files": index}
    report.write_json(run.path("plot_index.json"), report.envelope("plot-data", body, run.provenance()))
    return EXIT_ORACLE if rep.oracle_disagreement else EXIT_OK


HANDLERS = {
    "solve": cmd_solve,
    "enumerate": cmd_enumerate,
    "stability": cmd_stability,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "plot-data": cmd_plot_data,
}


def build_parser():
    p = argparse.ArgumentParser(prog="tfps", description="Ground states of two-species Thomas-Fermi mixtures in 1-D.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--samples", type=int, help="density samples per profile")
    p.add_argument("--seed", type=int, help="oracle restart seed")
    p.add_argument("--version", action="version", version=f"tfps {__version__}")
    return p


def run(command, cfg, out=None, samples=None, seed=None):
    """Execute ``command``; returns the exit status."""
    r = Run(cfg, out or cfg.output.dir, samples or cfg.output.samples, cfg.seed if seed is None else seed)
    if cfg.problem.proportional:
        V1, V2 = cfg.potentials()
        check_proportional(V1, V2, cfg.problem.ratio, cfg.solver.window or V1.domain_hint)
    return HANDLERS[command](r)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.samples is not None and args.samples < 2:
            raise ValidationError("--samples must be at least 2")
        cfg = parse_config(args.config)
        return run(args.command, cfg, args.out, args.samples, args.seed)
    except (ValidationError, PreconditionError) as e:
        print(f"tfps: validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except TFPSError as e:
        print(f"tfps: solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
