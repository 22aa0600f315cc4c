"""Run configuration: a JSON file validated with pydantic."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError as PydanticError, field_validator, model_validator

from . import potential
from .errors import ValidationError
from .scaling import RawParams
from .tolerances import Tolerances


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PotentialSpec(_Strict):
    family: str
    params: dict = Field(default_factory=dict)
    scale: float = 1.0

    def build(self, base_dir=None):
        params = dict(self.params)
        if self.family == "Tabulated" and "path" in params and base_dir is not None:
            p = Path(params["path"])
            params["path"] = str(p if p.is_absolute() else Path(base_dir) / p)
        return potential.from_dict({"family": self.family, "params": params, "scale": self.scale})


class Interactions(_Strict):
    U11: float
    U22: float
    U12: float

    @field_validator("U11", "U22", "U12")
    @classmethod
    def _positive(cls, v):
        if not (math.isfinite(v) and v > 0):
            raise ValueError("interaction strengths must be positive and finite")
        return v


class NBlock(_Strict):
    N1: float = Field(ge=0)
    N2: float = Field(ge=0)


class MuBlock(_Strict):
    mu1: float
    mu2: float


class ProblemBlock(_Strict):
    V1: PotentialSpec
    V2: Optional[PotentialSpec] = None
    interactions: Interactions
    N: Optional[NBlock] = None
    mu: Optional[MuBlock] = None
    proportional: bool = False
    ratio: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if (self.N is None) == (self.mu is None):
            raise ValueError("exactly one ensemble block ('N' or 'mu') must be given")
        if self.V2 is None and not (self.proportional and self.ratio is not None):
            raise ValueError("V2 may be omitted only for proportional potentials with a ratio")
        if self.proportional and self.ratio is None:
            raise ValueError("proportional potentials need 'ratio' (raw V2 = ratio * V1)")
        return self


class TolBlock(_Strict):
    tol_root: float = Field(default=1e-12, gt=0)
    tol_stat: float = Field(default=1e-10, gt=0)
    tol_norm: float = Field(default=1e-10, gt=0)
    tol_energy: float = Field(default=1e-9, gt=0)
    tol_oracle: float = Field(default=1e-4, gt=0)


class SolverBlock(_Strict):
    tolerances: TolBlock = Field(default_factory=TolBlock)
    max_walls: Optional[int] = Field(default=None, ge=0)
    window: Optional[tuple[float, float]] = None
    oracle_M: int = Field(default=4001, ge=2)
    workers: Optional[int] = Field(default=None, ge=1)
    cross_check: bool = True
    include_separated: bool = False

    @field_validator("window")
    @classmethod
    def _window(cls, v):
        if v is not None and not v[0] < v[1]:
            raise ValueError("window must satisfy lo < hi")
        return v


class SweepBlock(_Strict):
    parameter: Literal["alpha", "beta"] = "alpha"
    values: list[float] = Field(min_length=1)


class OutputBlock(_Strict):
    dir: str = "out"
    samples: int = Field(default=400, ge=2)
    formats: list[Literal["json", "csv"]] = Field(default_factory=lambda: ["json", "csv"])


class RunConfig(_Strict):
    problem: ProblemBlock
    solver: SolverBlock = Field(default_factory=SolverBlock)
    sweep: Optional[SweepBlock] = None
    walls: Optional[list[float]] = None
    output: OutputBlock = Field(default_factory=OutputBlock)
    seed: int = 42

    base_dir: Optional[str] = Field(default=None, exclude=True)
    digest: str = Field(default="", exclude=True)

    def tolerances(self):
        return Tolerances(**self.solver.tolerances.model_dump())

    def potentials(self):
        p = self.problem
        V1 = p.V1.build(self.base_dir)
        V2 = p.V2.build(self.base_dir) if p.V2 is not None else V1.scaled(p.ratio)
        return V1, V2

    def raw_params(self, U12=None, V2=None):
        p = self.problem
        V1, V2d = self.potentials()
        kw = {"N1": p.N.N1, "N2": p.N.N2} if p.N is not None else {"mu1": p.mu.mu1, "mu2": p.mu.mu2}
        return RawParams(
            p.interactions.U11, p.interactions.U22, p.interactions.U12 if U12 is None else U12,
            V1, V2d if V2 is None else V2, proportional=p.proportional, **kw,
        )


def _line_of(text, loc):
    """Best-effort line number of a key path in JSON text."""
    pos = 0
    for key in loc:
        if isinstance(key, int):
            continue
        i = text.find(f'"{key}"', pos)
        if i < 0:
            break
        pos = i
    return text.count("\n", 0, pos) + 1


def parse_config_text(text, base_dir=None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"line {e.lineno}: invalid JSON: {e.msg}") from None
    try:
        cfg = RunConfig.model_validate(data)
    except PydanticError as e:
        msgs = []
        for err in e.errors():
            loc = tuple(err["loc"])
            path = ".".join(str(k) for k in loc) or "<root>"
            msgs.append(f"line {_line_of(text, loc)}: {path}: {err['msg']}")
        raise ValidationError("; ".join(msgs)) from None
    cfg.base_dir = base_dir
    cfg.digest = hashlib.sha256(text.encode()).hexdigest()
    return cfg


def parse_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ValidationError(f"cannot read {path}: {e}") from None
    return parse_config_text(text, base_dir=str(path.parent))
