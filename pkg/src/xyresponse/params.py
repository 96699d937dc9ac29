"""Physical parameter points of the transverse-field XY chain."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

from .errors import InvalidParameters

#: Sentinel for the thermodynamic limit (chain length) and for infinite separation.
INF = math.inf

CRITICAL_FIELD = 1.0


class Sector(str, enum.Enum):
    SYMMETRIC = "symmetric"
    BROKEN = "broken"


def is_infinite(value) -> bool:
    return isinstance(value, float) and math.isinf(value)


def parse_size(value) -> float | int:
    """Parse a chain length or separation; accepts ints, ``inf`` and ``"inf"``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinite", "infinity"):
            return INF
        value = float(value)
    if is_infinite(value):
        return INF
    if float(value) != int(value):
        raise InvalidParameters(f"size must be an integer or 'inf', got {value!r}")
    return int(value)


def format_size(value) -> str:
    return "inf" if is_infinite(value) else str(int(value))


@dataclass(frozen=True)
class ModelParams:
    """A point of the XY chain phase diagram.

    ``size`` is the chain length N, or :data:`INF` for the thermodynamic limit.
    The broken sector only exists for an infinite chain at zero temperature in
    the ordered phase with nonzero anisotropy.
    """

    gamma: float
    h: float
    temperature: float = 0.0
    size: float | int = INF
    sector: Sector = Sector.SYMMETRIC

    def __post_init__(self):
        object.__setattr__(self, "sector", Sector(self.sector))
        object.__setattr__(self, "size", parse_size(self.size))
        for name in ("gamma", "h", "temperature"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidParameters(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParameters(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.h < 0.0:
            raise InvalidParameters(f"h must be >= 0, got {self.h}")
        if self.temperature < 0.0:
            raise InvalidParameters(f"temperature must be >= 0, got {self.temperature}")
        if not self.infinite and self.size < 2:
            raise InvalidParameters(f"chain length must be >= 2, got {self.size}")
        if self.sector is Sector.BROKEN:
            if not self.infinite:
                raise InvalidParameters("broken sector requires an infinite chain (N = inf)")
            if self.temperature != 0.0:
                raise InvalidParameters("broken sector requires temperature = 0")
            if self.gamma <= 0.0:
                raise InvalidParameters("broken sector requires gamma > 0")
            if self.h >= 1.0:
                raise InvalidParameters("broken sector requires h < 1")

    @property
    def infinite(self) -> bool:
        return is_infinite(self.size)

    @property
    def factorizing_field(self) -> float:
        return math.sqrt(1.0 - self.gamma**2)

    @property
    def critical_field(self) -> float:
        return CRITICAL_FIELD

    @property
    def beta(self) -> float:
        return math.inf if self.temperature == 0.0 else 1.0 / self.temperature

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def symmetric(self) -> "ModelParams":
        return replace(self, sector=Sector.SYMMETRIC)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["size"] = format_size(self.size)
        d["sector"] = self.sector.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(
            gamma=d["gamma"],
            h=d["h"],
            temperature=d.get("temperature", 0.0),
            size=d.get("size", INF),
            sector=d.get("sector", Sector.SYMMETRIC),
        )
