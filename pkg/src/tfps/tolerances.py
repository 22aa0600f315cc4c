"""Solver tolerances shared by all modules."""

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Tolerances:
    tol_root: float = 1e-12
    tol_stat: float = 1e-10
    tol_norm: float = 1e-10
    tol_energy: float = 1e-9
    tol_oracle: float = 1e-4

    def to_dict(self):
        return asdict(self)


DEFAULT = Tolerances()
