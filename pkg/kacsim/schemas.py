import math
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .settings import (
    BIN_TILING_TOL,
    DEFAULT_BINS,
    DEFAULT_SEED,
    DT_DIVISIBILITY_RTOL,
    ORACLE_LAMBDA,
    ORACLE_LAMBDA_RTOL,
)


class ConfigError(ValueError):
    """A configuration rule was violated; the message names the rule."""


class OracleUnavailableError(ConfigError):
    """The Krook-Wu oracle was requested for a collision rate it does not describe."""


class Algorithm(str, Enum):
    nanbu = "nanbu"
    nanbu_babovsky = "nanbu_babovsky"
    bird = "bird"
    poisson = "poisson"


STEPPED_ALGORITHMS = (Algorithm.nanbu, Algorithm.nanbu_babovsky)
ORACLE = "oracle"
ALGORITHM_NAMES = tuple(a.value for a in Algorithm) + (ORACLE,)


def convert_string_to_boolean(value):
    if isinstance(value, str):
        value_lower = value.strip().lower()
        if value_lower in ("true", "1", "yes"):
            return True
        elif value_lower in ("false", "0", "no", ""):
            return False
    return value


def convert_string_to_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


def convert_string_to_time(value):
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    return value


def oracle_applies(lam: float) -> bool:
    return math.isclose(lam, ORACLE_LAMBDA, rel_tol=ORACLE_LAMBDA_RTOL)


def time_steps(t_final: float, dt: float) -> int:
    """Number of steps of width dt in [0, t_final]; dt must divide t_final."""
    ratio = t_final / dt
    steps = round(ratio)
    if abs(ratio - steps) > DT_DIVISIBILITY_RTOL * max(1.0, ratio):
        raise ValueError(f"time step dt={dt} does not divide t_final={t_final}")
    return int(steps)


class BaseModelForbidExtra(BaseModel, extra='forbid'):
    pass


class SimConfig(BaseModelForbidExtra):
    """Parameters of one finite-time sampler run."""
    n_particles: int = Field(..., ge=2, description="Number of particles N.")
    lam: float = Field(..., gt=0, description="Collision rate lambda per unit time.")
    t_final: float = Field(..., ge=0, description="Time at which particle 1 is sampled.")
    dt: Optional[float] = Field(default=None, gt=0, description="Time step (Nanbu variants only).")
    algorithm: Algorithm

    @field_validator('lam', 't_final')
    def must_be_finite(cls, v):
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @model_validator(mode='after')
    def check_time_step(self):
        if self.algorithm not in STEPPED_ALGORITHMS:
            return self
        if self.dt is None:
            raise ValueError(f"algorithm '{self.algorithm.value}' requires a time step dt")
        if self.lam * self.dt > 1.0 + 1e-12:
            raise ValueError(
                f"lambda*dt <= 1 is required, got lambda*dt = {self.lam * self.dt:.6g}"
            )
        time_steps(self.t_final, self.dt)
        if self.algorithm is Algorithm.nanbu_babovsky:
            n = self.n_particles
            if self.lam * n * self.dt / 2 + 1 > n / 2:
                raise ValueError(
                    "lambda*N*dt/2 + 1 <= N/2 is required so the rounded pair count "
                    f"fits disjointly, got {self.lam * n * self.dt / 2 + 1:.6g} > {n / 2:g}"
                )
        return self


class BinGeometry(BaseModelForbidExtra, frozen=True):
    """Fixed-width bins tiling [lo, hi)."""
    lo: float
    hi: float
    width: float = Field(..., gt=0)

    @classmethod
    def parse(cls, text: str) -> "BinGeometry":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected 'lo:hi:width', got '{text}'")
        lo, hi, width = (float(p) for p in parts)
        return cls(lo=lo, hi=hi, width=width)

    @model_validator(mode='after')
    def check_tiling(self):
        if not self.lo < self.hi:
            raise ValueError(f"bins need lo < hi, got lo={self.lo}, hi={self.hi}")
        ratio = (self.hi - self.lo) / self.width
        if abs(ratio - round(ratio)) > BIN_TILING_TOL * max(1.0, ratio):
            raise ValueError(
                f"(hi - lo)/width must be an integer, got {ratio:.12g}"
            )
        return self

    @property
    def n_bins(self) -> int:
        return int(round((self.hi - self.lo) / self.width))

    @property
    def edges(self):
        edges = self.lo + self.width * np.arange(self.n_bins + 1)
        edges[-1] = self.hi
        return edges

    def label(self) -> str:
        return f"{self.lo:g}:{self.hi:g}:{self.width:g}"


class Cell(BaseModel, frozen=True):
    """One (algorithm, N, dt) combination of an experiment."""
    algorithm: str
    n_particles: int
    dt: Optional[float] = None


class ExperimentSpec(BaseModelForbidExtra):
    """A fully resolved experiment as given on the command line or in a recipe file."""
    command: Literal["density", "sample", "compare", "perfect"]
    algorithms: List[str] = Field(default_factory=lambda: [Algorithm.bird.value])
    n_particles: List[int] = Field(default_factory=lambda: [50])
    lam: float = Field(default=ORACLE_LAMBDA, gt=0)
    t_final: Optional[float] = Field(default=None, ge=0)
    dt: List[float] = Field(default_factory=list)
    replicates: int = Field(default=100_000, ge=1)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    bins: BinGeometry = Field(default_factory=lambda: BinGeometry(
        lo=DEFAULT_BINS[0], hi=DEFAULT_BINS[1], width=DEFAULT_BINS[2]))
    out: Optional[Path] = None
    workers: int = Field(default=1, ge=1)
    epsilon: float = Field(default=1e-6, gt=0)
    energy: Optional[float] = Field(default=None, gt=0)
    tvn_repeats: int = Field(default=1, ge=1)
    tail_from: Optional[float] = None
    step_back: Literal["doubling", "linear"] = "doubling"
    harvest_all: bool = False
    curve: Optional[Literal["initial", "exact", "limit"]] = None
    grid: Optional[BinGeometry] = None

    @field_validator('algorithms', 'n_particles', 'dt', mode='before')
    def split_lists(cls, value):
        return convert_string_to_list(value)

    @field_validator('bins', 'grid', mode='before')
    def parse_geometry(cls, value):
        if isinstance(value, str):
            try:
                return BinGeometry.parse(value)
            except ValidationError as e:
                raise ValueError(validation_message(e)) from None
        return value

    @field_validator('t_final', mode='before')
    def parse_time(cls, value):
        return convert_string_to_time(value)

    @field_validator('harvest_all', mode='before')
    def parse_flag(cls, value):
        return convert_string_to_boolean(value)

    @field_validator('algorithms')
    def known_algorithms(cls, value):
        unknown = [a for a in value if a not in ALGORITHM_NAMES]
        if unknown:
            raise ValueError(
                f"unknown algorithm(s) {unknown}, expected any of {', '.join(ALGORITHM_NAMES)}"
            )
        if not value:
            raise ValueError("at least one algorithm is required")
        return value

    @field_validator('n_particles')
    def at_least_two(cls, value):
        if not value or any(n < 2 for n in value):
            raise ValueError(f"every N must satisfy N >= 2, got {value}")
        return value

    @model_validator(mode='after')
    def check_command(self):
        if self.command == "density":
            if self.curve is None:
                raise ValueError("the density command requires a curve")
            if self.grid is None:
                raise ValueError("the density command requires a grid 'lo:hi:step'")
            if self.curve == "exact" and self.t_final is None:
                raise ValueError("the exact curve requires a time t")
            return self
        if self.command == "perfect":
            if len(self.n_particles) != 1:
                raise ValueError("perfect runs exactly one N")
            return self
        if self.t_final is None:
            raise ValueError(f"the {self.command} command requires a time t")
        if not math.isfinite(self.t_final):
            raise ValueError("finite-time samplers need a finite t")
        if self.command == "sample":
            if len(self.algorithms) != 1 or len(self.n_particles) != 1 or len(self.dt) > 1:
                raise ValueError("sample runs exactly one algorithm, one N and at most one dt")
        if self.command == "compare" and not oracle_applies(self.lam):
            raise ValueError(
                f"compare needs the Krook-Wu oracle, which requires lambda = sqrt(pi)/2, got {self.lam}"
            )
        for cell in self.cells():
            if cell.algorithm == ORACLE:
                continue
            try:
                self.sim_config(cell)
            except ValidationError as e:
                raise ValueError(
                    f"{cell.algorithm} with N={cell.n_particles}, dt={cell.dt}: "
                    f"{e.errors()[0]['msg']}"
                ) from None
        return self

    def cells(self) -> List[Cell]:
        """Every (algorithm, N, dt) combination, dt only for stepped algorithms."""
        out = []
        stepped = {a.value for a in STEPPED_ALGORITHMS}
        for algorithm in self.algorithms:
            for n in self.n_particles:
                if algorithm in stepped:
                    if not self.dt:
                        raise ValueError(f"algorithm '{algorithm}' requires a time step dt")
                    out.extend(Cell(algorithm=algorithm, n_particles=n, dt=dt) for dt in self.dt)
                else:
                    out.append(Cell(algorithm=algorithm, n_particles=n))
        return out

    def sim_config(self, cell: Cell) -> SimConfig:
        return SimConfig(
            n_particles=cell.n_particles,
            lam=self.lam,
            t_final=self.t_final,
            dt=cell.dt,
            algorithm=Algorithm(cell.algorithm),
        )

    def summary(self) -> dict:
        data = self.model_dump(mode='json')
        data['bins'] = self.bins.label()
        data['grid'] = self.grid.label() if self.grid else None
        return data


def validation_message(error: ValidationError) -> str:
    """Flatten a pydantic error into one line naming each violated rule."""
    parts = []
    for item in error.errors():
        where = ".".join(str(loc) for loc in item['loc'])
        msg = item['msg'].removeprefix("Value error, ")
        parts.append(f"{where}: {msg}" if where else msg)
    return "; ".join(parts)
