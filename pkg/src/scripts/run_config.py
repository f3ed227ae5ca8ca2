import logging
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt, model_validator

from config import settings
from manifold.conformal_factor import parse_upsilon

logger = logging.getLogger(__name__)

COMMANDS = ("fg-expand", "renorm-volume", "renorm-area", "anomaly", "identities")

DEFAULT_MODELS = {
    "fg-expand": "sphere",
    "renorm-volume": "hyperbolic",
    "renorm-area": "totally-geodesic",
    "anomaly": "sphere",
    "identities": "sphere",
}

MODELS = {
    "fg-expand": ("sphere", "torus", "conformal"),
    "renorm-volume": ("hyperbolic",),
    "renorm-area": ("totally-geodesic", "geodesic", "latitude", "torus"),
    "anomaly": ("sphere", "torus", "geodesic", "totally-geodesic"),
    "identities": ("sphere", "torus"),
}

# Boundary dimension of the minimal surface each anomaly model uses
ANOMALY_K = {"geodesic": 0, "totally-geodesic": 2}


class RunConfig(BaseModel):
    """Validated options of one CLI run; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal["fg-expand", "renorm-volume", "renorm-area", "anomaly", "identities"]
    model: Optional[str] = None
    n: PositiveInt = 2
    k: Optional[int] = None
    upsilon: Optional[str] = None
    angle: Optional[PositiveFloat] = None
    grid: Optional[PositiveInt] = None
    eps_lo: Optional[PositiveFloat] = None
    eps_hi: Optional[PositiveFloat] = None
    eps_count: Optional[PositiveInt] = None
    order: Optional[int] = None
    format: Literal["table", "csv", "json"] = "table"
    out: Optional[str] = None
    tol: PositiveFloat = settings.TOLERANCE

    @model_validator(mode="after")
    def validate_ranges(self) -> "RunConfig":
        if self.n > 6:
            raise ValueError(f"n must be at most 6, got {self.n}")
        if self.k is not None and not 0 <= self.k <= self.n - 1:
            raise ValueError(f"k must lie in [0, n-1], got k={self.k} for n={self.n}")
        if self.model is not None and self.model not in MODELS[self.command]:
            raise ValueError(f"Model '{self.model}' is not available for {self.command}; choose from {MODELS[self.command]}")
        if self.command == "anomaly":
            self._validate_anomaly_k()
        if self.upsilon is not None:
            parse_upsilon(self.upsilon, self.n)
        if self.order is not None and self.order < 0:
            raise ValueError(f"order must be non-negative, got {self.order}")
        if self.eps_lo is not None and self.eps_hi is not None and self.eps_lo >= self.eps_hi:
            raise ValueError("eps_lo must be smaller than eps_hi")
        return self

    def _validate_anomaly_k(self):
        if self.k is not None and self.k not in (0, 2):
            raise ValueError(f"The area anomaly is available for k=0 and k=2, got k={self.k}")
        if self.model is not None and self.k is not None and ANOMALY_K.get(self.model) != self.k:
            raise ValueError(f"Model '{self.model}' does not carry a k={self.k} submanifold")
        if self.anomaly_k is not None and self.anomaly_k > self.n - 1:
            raise ValueError(f"Model '{self.model_name}' needs k={self.anomaly_k} <= n-1, got n={self.n}")

    @property
    def model_name(self) -> str:
        return self.model or DEFAULT_MODELS[self.command]

    @property
    def anomaly_k(self) -> Optional[int]:
        """Explicit ``k``, else the one implied by the model; ``None`` selects the volume anomaly."""
        return self.k if self.k is not None else ANOMALY_K.get(self.model_name)


def read_config_file(path: str) -> Dict[str, Any]:
    """``key = value`` lines; ``#`` starts a comment and dashes in keys become underscores."""
    values: Dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{number}: expected 'key = value', got '{raw.strip()}'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    logger.debug(f"Read {len(values)} keys from {path}")
    return values


def merge_config(flags: Dict[str, Any], file_values: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Flags override the config file, which overrides the defaults."""
    merged: Dict[str, Any] = dict(file_values or {})
    merged.update({key: value for key, value in flags.items() if value is not None})
    return RunConfig(**merged)
