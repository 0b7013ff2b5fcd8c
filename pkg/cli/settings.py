"""
Run configuration

A run is described by one JSON document mirroring RunConfig; command-line
flags override individual fields.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from emcheck.config import EnergyConfig, QuadratureSpec
from emcheck.errors import DomainError
from emcheck.manifold import ModelSpace

logger = logging.getLogger(__name__)

SUITES = (
    "route-equivalence",
    "trace",
    "contraction",
    "metric-variation",
    "conservation",
    "ymhe",
    "adjointness",
)


class RadiusGrid(BaseModel):
    """Radii from ``min`` to ``max`` with ``count`` samples, geometric when ``log`` is set"""
    min: float
    max: float
    count: int = 20
    log: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RadiusGrid":
        if not 0 < self.min < self.max:
            raise ValueError(f"radius grid needs 0 < min < max, got min={self.min}, max={self.max}")
        if self.count < 2:
            raise ValueError(f"radius grid needs at least 2 radii, got {self.count}")
        return self

    @classmethod
    def parse(cls, text: str) -> "RadiusGrid":
        """Parse ``min:max:count[:log]``"""
        parts = text.split(":")
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise DomainError(f"radii must look like min:max:count[:log], got '{text}'")
        return cls(min=float(parts[0]), max=float(parts[1]), count=int(parts[2]), log=len(parts) == 4)

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.min, self.max, self.count)
        return np.linspace(self.min, self.max, self.count)


class SpaceSettings(BaseModel):
    kind: str = "euclidean"
    dim: int = 3
    kappa: float = 1.0

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value not in ("euclidean", "hyperbolic"):
            raise ValueError(f"space kind must be 'euclidean' or 'hyperbolic', got '{value}'")
        return value

    @classmethod
    def parse(cls, text: str) -> "SpaceSettings":
        """Parse ``euclidean:n`` or ``hyperbolic:n[:kappa]``"""
        parts = text.split(":")
        if len(parts) < 2:
            raise DomainError(f"space must look like euclidean:n or hyperbolic:n[:kappa], got '{text}'")
        kappa = float(parts[2]) if len(parts) > 2 else 1.0
        return cls(kind=parts[0], dim=int(parts[1]), kappa=kappa)

    def build(self) -> ModelSpace:
        if self.kind == "hyperbolic":
            return ModelSpace.hyperbolic(self.dim, self.kappa)
        return ModelSpace.euclidean(self.dim)


class QuadratureSettings(BaseModel):
    radial_nodes: int = 12
    sphere_nodes: int = 8
    periodic_nodes: int = 16
    rotate: bool = False
    workers: int = 1

    def build(self, seed: int) -> QuadratureSpec:
        return QuadratureSpec(
            radial_nodes=self.radial_nodes,
            sphere_nodes=self.sphere_nodes,
            periodic_nodes=self.periodic_nodes,
            seed=seed,
            rotate=self.rotate,
            workers=self.workers,
        )


class RunConfig(BaseModel):
    """Everything a pointwise or profile run needs"""
    suite: str = "all"
    examples: List[str] = Field(default_factory=list)
    space: Optional[SpaceSettings] = None  # random-field suites only
    k: Optional[int] = None
    p: Optional[float] = None
    center: Optional[List[float]] = None
    radii: Optional[RadiusGrid] = None
    quadrature: QuadratureSettings = Field(default_factory=QuadratureSettings)
    points: int = 100
    seed: int = 0
    out: Path = Path("emcheck-out")
    with_identity: bool = True
    include_runtime: bool = False

    @field_validator("points")
    @classmethod
    def _positive_points(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"points must be positive, got {value}")
        return value

    @property
    def selected_suites(self) -> List[str]:
        return list(SUITES) if self.suite == "all" else [self.suite]

    def energy_config(self, default_space: ModelSpace, default_k: int, default_p: float) -> EnergyConfig:
        """
        (k, p, n) for random-field suites, with overrides applied

        Raises:
            StandingAssumptionError: n <= kp
        """
        space = self.model_space(default_space)
        return EnergyConfig(
            p=self.p if self.p is not None else default_p,
            k=self.k if self.k is not None else default_k,
            n=space.dim,
        )

    def model_space(self, default: ModelSpace) -> ModelSpace:
        return default if self.space is None else self.space.build()

    def quadrature_spec(self) -> QuadratureSpec:
        return self.quadrature.build(self.seed)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy with every non-None override applied and validated"""
        data = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            if isinstance(value, dict) and isinstance(data.get(key), dict):
                data[key] = {**data[key], **value}
            else:
                data[key] = value
        return RunConfig.model_validate(data)


def load_run_config(path: Optional[Path]) -> RunConfig:
    """
    Load a RunConfig from JSON; a missing file falls back to defaults

    Raises:
        pydantic.ValidationError: the document does not describe a RunConfig
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        logger.warning(f"Run config {path} not found, using defaults")
        return RunConfig()
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    logger.info(f"Loaded run config from {path}")
    return RunConfig.model_validate(data)
