"""Scenario configuration files (JSON, ``schema_version`` 1)."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from chebylab.harness import Scenario, Tolerances
from chebylab.normed_space import NormSpec
from chebylab.rng import stream
from chebylab.sets import ClosedSet, set_from_dict

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """A scenario file could not be read or validated."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NormConfig(_Strict):
    kind: Literal["lp", "weighted_lp", "max"]
    dim: int = Field(ge=1, le=8)
    p: Optional[Union[float, Literal["inf"]]] = None
    weights: Optional[List[float]] = None

    def build(self) -> NormSpec:
        return NormSpec.from_dict(self.model_dump(exclude_none=True))


class PointCloudConfig(_Strict):
    kind: Literal["point_cloud"]
    points: List[List[float]]


class PolytopeConfig(_Strict):
    kind: Literal["convex_polytope"]
    vertices: List[List[float]]


class HalfSpaceConfig(_Strict):
    kind: Literal["half_space"]
    a: List[float]
    b: float


class BallConfig(_Strict):
    kind: Literal["ball"]
    center: List[float]
    radius: float


class SphereConfig(_Strict):
    kind: Literal["sphere"]
    center: List[float]
    radius: float


class GraphConfig(_Strict):
    kind: Literal["function_graph"]
    lo: float
    hi: float
    values: List[float]


class UnionConfig(_Strict):
    kind: Literal["union"]
    members: List["SetConfig"]


SetConfig = Annotated[
    Union[PointCloudConfig, PolytopeConfig, HalfSpaceConfig, BallConfig, SphereConfig,
          GraphConfig, UnionConfig],
    Field(discriminator="kind"),
]
UnionConfig.model_rebuild()


class LatticeConfig(_Strict):
    lo: List[float]
    hi: List[float]
    counts: List[int]


class GridConfig(_Strict):
    """Either explicit ``points`` or a ``lattice`` with optional seeded jitter."""

    points: Optional[List[List[float]]] = None
    lattice: Optional[LatticeConfig] = None
    jitter: float = Field(default=0.0, ge=0.0)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.points is None) == (self.lattice is None):
            raise ValueError("grid needs exactly one of 'points' or 'lattice'")
        return self

    def build(self, dim: int, seed: int) -> np.ndarray:
        if self.points is not None:
            G = np.array(self.points, dtype=float)
            if G.ndim != 2 or G.shape[1] != dim or G.shape[0] == 0:
                raise ValueError(f"grid.points must be a nonempty list of {dim}-vectors")
            return G
        lat = self.lattice
        if not (len(lat.lo) == len(lat.hi) == len(lat.counts) == dim):
            raise ValueError(f"grid.lattice entries must have length {dim}")
        if any(c < 1 for c in lat.counts):
            raise ValueError("grid.lattice.counts must be positive")
        axes = [np.linspace(a, b, c) for a, b, c in zip(lat.lo, lat.hi, lat.counts)]
        G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        if self.jitter:
            rng = stream(seed if self.seed is None else self.seed, "config/grid-jitter")
            G = G + rng.uniform(-self.jitter, self.jitter, G.shape)
        return G


class TolerancesConfig(_Strict):
    limit_tol: float = Field(default=1e-3, gt=0)
    sub_tol: float = Field(default=1e-6, gt=0)
    convexity_tol: float = Field(default=1e-6, gt=0)


class OutputsConfig(_Strict):
    report: Optional[str] = None
    csv: Optional[str] = None


class ScenarioConfig(_Strict):
    schema_version: Literal[1]
    name: str = "scenario"
    description: str = ""
    norm: NormConfig
    set: SetConfig
    bounding_box: List[List[float]]
    grid: GridConfig
    pair_samples: int = Field(default=200, ge=1)
    seed: int = 0
    tolerances: TolerancesConfig = TolerancesConfig()
    outputs: OutputsConfig = OutputsConfig()

    @field_validator("bounding_box")
    @classmethod
    def _box(cls, v):
        for pair in v:
            if len(pair) != 2 or not all(math.isfinite(t) for t in pair) or pair[0] >= pair[1]:
                raise ValueError("each bounding_box entry must be a finite [lo, hi] with lo < hi")
        return v

    def build_set(self) -> ClosedSet:
        return set_from_dict(self.set.model_dump())

    def to_scenario(self) -> Scenario:
        norm = self.norm.build()
        K = self.build_set()
        if len(self.bounding_box) != norm.dim:
            raise ValueError(f"bounding_box needs {norm.dim} entries")
        return Scenario(
            norm=norm, set=K, grid=self.grid.build(norm.dim, self.seed),
            bbox=np.array(self.bounding_box), pair_samples=self.pair_samples, seed=self.seed,
            tolerances=Tolerances(**self.tolerances.model_dump()), name=self.name)

    def echo(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        loc = ".".join(str(t) for t in e["loc"]) or "<root>"
        parts.append(f"{loc}: {e['msg']}")
    return "; ".join(parts)


def parse_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    return parse_config(data)


def load_scenario(path, seed: Optional[int] = None, tol: Optional[float] = None):
    """Config and built Scenario; ``seed`` and ``tol`` override the file."""
    cfg = load_config(path)
    updates = {}
    if seed is not None:
        updates["seed"] = seed
    if tol is not None:
        updates["tolerances"] = cfg.tolerances.model_copy(update={"limit_tol": tol})
    if updates:
        cfg = cfg.model_copy(update=updates)
    try:
        return cfg, cfg.to_scenario()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
