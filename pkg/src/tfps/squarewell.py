"""Closed forms for the infinite square well (flat potential on |S|)."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DegenerateThresholdError, NonPhysicalError, ValidationError

MIXED_FAVORED = "MixedFavored"
SEPARATED_FAVORED = "SeparatedFavored"
DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class WellProblem:
    length: float
    alpha: float
    N1: float | None = None
    N2: float | None = None
    mu1: float | None = None
    mu2: float | None = None
    a: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValidationError("well length must be positive")
        if self.alpha < 0:
            raise ValidationError("alpha must be nonnegative")
        fixed_n = self.N1 is not None and self.N2 is not None
        fixed_mu = self.mu1 is not None and self.mu2 is not None
        if fixed_n == fixed_mu:
            raise ValidationError("give exactly one of (N1, N2) or (mu1, mu2)")
        if fixed_n and (self.N1 < 0 or self.N2 < 0):
            raise ValidationError("particle numbers must be nonnegative")
        if fixed_mu and not (self.mu1 > 0 and self.mu2 > 0):
            raise ValidationError("chemical potentials must be positive in a square well")

    @property
    def b(self):
        return self.a + self.length


def mixed_internal_energy(w: WellProblem):
    return (w.N1**2 + w.N2**2 + 2.0 * w.alpha * w.N1 * w.N2) / (2.0 * w.length)


def separated_internal_optimum(w: WellProblem):
    """(energy, |S1|, (c, d)); c is the wall with species 1 on the left."""
    n = w.N1 + w.N2
    if not n > 0:
        raise ValidationError("need N1 + N2 > 0")
    s1 = w.length * w.N1 / n
    energy = n * n / (2.0 * w.length)
    c = (w.a * w.N2 + w.b * w.N1) / n
    d = (w.a * w.N1 + w.b * w.N2) / n
    return energy, s1, (c, d)


def threshold_verdict(w: WellProblem):
    um = mixed_internal_energy(w)
    us = separated_internal_optimum(w)[0]
    if w.N1 * w.N2 == 0:
        diff = w.alpha - 1.0
    else:
        diff = um - us
    if diff < 0:
        return MIXED_FAVORED
    if diff > 0:
        return SEPARATED_FAVORED
    return DEGENERATE


def alpha_bounds(mu1, mu2):
    if not (mu1 > 0 and mu2 > 0):
        raise ValidationError("chemical potentials must be positive")
    r = mu1 / mu2
    return min(r, 1.0 / r), max(r, 1.0 / r)


def mixed_grand_energy(w: WellProblem):
    mu1, mu2, a = w.mu1, w.mu2, w.alpha
    if mu1 == mu2:
        return -w.length * mu1 * mu1 / (1.0 + a)
    if a == 1.0:
        raise DegenerateThresholdError("alpha = 1 with mu1 != mu2 has no mixed configuration")
    lo, hi = alpha_bounds(mu1, mu2)
    if lo < a < hi:
        raise NonPhysicalError(f"alpha={a} lies in the forbidden interval ({lo}, {hi})")
    return w.length * (mu1 * mu1 + mu2 * mu2 - 2.0 * mu1 * mu2 * a) / (2.0 * (a * a - 1.0))


def separated_grand_energy(w: WellProblem, s1_len):
    if not 0.0 <= s1_len <= w.length:
        raise ValidationError("s1_len must lie in [0, |S|]")
    return -0.5 * s1_len * w.mu1**2 - 0.5 * (w.length - s1_len) * w.mu2**2


def separated_grand_minimum(w: WellProblem):
    """(energy, s1_len); s1_len is None when every split is optimal (mu1 == mu2)."""
    energy = -0.5 * w.length * max(w.mu1, w.mu2) ** 2
    if w.mu1 == w.mu2:
        return energy, None
    return energy, (w.length if w.mu1 > w.mu2 else 0.0)
