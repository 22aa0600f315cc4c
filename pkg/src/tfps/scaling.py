"""Reduction of raw interaction strengths to unit self-interactions.

With rho~_k = sqrt(U_kk) rho_k the energy density becomes
1/2 (rho~_1^2 + rho~_2^2 + 2 alpha rho~_1 rho~_2) + V~_1 rho~_1 + V~_2 rho~_2
where V~_k = V_k / sqrt(U_kk).  The energy is unchanged, so particle numbers
scale like densities and chemical potentials like potentials.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError
from .potential import check_proportional

FIXED_N = "FixedN"
FIXED_MU = "FixedMu"


@dataclass(frozen=True)
class RawParams:
    U11: float
    U22: float
    U12: float
    V1: object
    V2: object
    N1: float | None = None
    N2: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    proportional: bool = False

    def __post_init__(self):
        for name in ("U11", "U22", "U12"):
            u = getattr(self, name)
            if not (isinstance(u, (int, float)) and math.isfinite(u) and u > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {u!r}")
        has_n = self.N1 is not None or self.N2 is not None
        has_mu = self.mu1 is not None or self.mu2 is not None
        if has_n == has_mu:
            raise ValidationError("exactly one ensemble (N1, N2) or (mu1, mu2) must be given")
        if has_n:
            if self.N1 is None or self.N2 is None or self.N1 < 0 or self.N2 < 0:
                raise ValidationError("fixed-N ensemble needs N1 >= 0 and N2 >= 0")
        elif self.mu1 is None or self.mu2 is None:
            raise ValidationError("fixed-mu ensemble needs both mu1 and mu2")

    @property
    def ensemble(self):
        return FIXED_N if self.N1 is not None else FIXED_MU

    def fingerprint(self):
        payload = {
            "U": [self.U11, self.U22, self.U12],
            "V1": self.V1.to_dict(),
            "V2": self.V2.to_dict(),
            "N": [self.N1, self.N2],
            "mu": [self.mu1, self.mu2],
            "proportional": self.proportional,
        }
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ReducedParams:
    alpha: float
    beta: float | None
    V1: object
    V2: object
    ensemble: str
    N1: float | None = None
    N2: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    provenance: str = ""


@dataclass(frozen=True)
class Solution:
    """Solver output in a fixed unit system (densities sampled at ``x``)."""

    x: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    mu1: float
    mu2: float
    N1: float
    N2: float
    walls: tuple = ()
    S1: tuple = ()
    S2: tuple = ()
    energy: float = math.nan
    provenance: str = ""
    extra: dict = field(default_factory=dict)


def interaction_ratio(U11, U22, U12):
    return U12 / math.sqrt(U11 * U22)


def to_reduced(raw: RawParams, ratio=1.0, window=None) -> ReducedParams:
    """Map raw parameters to the reduced problem.

    ``ratio`` is the declared raw proportionality V2 = ratio * V1 (used only if
    ``raw.proportional``); it is verified at 64 points of ``window``.
    """
    r1, r2 = math.sqrt(raw.U11), math.sqrt(raw.U22)
    alpha = interaction_ratio(raw.U11, raw.U22, raw.U12)
    beta = None
    if raw.proportional:
        win = window if window is not None else raw.V1.domain_hint
        check_proportional(raw.V1, raw.V2, ratio, win)
        beta = ratio * r1 / r2
    kw = {}
    if raw.ensemble == FIXED_N:
        kw = {"N1": raw.N1 * r1, "N2": raw.N2 * r2}
    else:
        kw = {"mu1": raw.mu1 / r1, "mu2": raw.mu2 / r2}
    return ReducedParams(
        alpha=alpha,
        beta=beta,
        V1=raw.V1.scaled(1.0 / r1),
        V2=raw.V2.scaled(1.0 / r2),
        ensemble=raw.ensemble,
        provenance=raw.fingerprint(),
        **kw,
    )


def from_reduced(res: Solution, raw: RawParams) -> Solution:
    """Map a reduced-unit solution back to raw units."""
    if res.provenance != raw.fingerprint():
        raise ValidationError("solution was not produced from these raw parameters")
    r1, r2 = math.sqrt(raw.U11), math.sqrt(raw.U22)
    return replace(
        res,
        rho1=np.asarray(res.rho1) / r1,
        rho2=np.asarray(res.rho2) / r2,
        mu1=res.mu1 * r1,
        mu2=res.mu2 * r2,
        N1=res.N1 / r1,
        N2=res.N2 / r2,
        provenance="raw:" + res.provenance,
    )


def reduce_solution(res: Solution, raw: RawParams) -> Solution:
    """Inverse of :func:`from_reduced`."""
    if res.provenance != "raw:" + raw.fingerprint():
        raise ValidationError("solution is not a raw-unit image of these parameters")
    r1, r2 = math.sqrt(raw.U11), math.sqrt(raw.U22)
    return replace(
        res,
        rho1=np.asarray(res.rho1) * r1,
        rho2=np.asarray(res.rho2) * r2,
        mu1=res.mu1 / r1,
        mu2=res.mu2 / r2,
        N1=res.N1 * r1,
        N2=res.N2 * r2,
        provenance=raw.fingerprint(),
    )
