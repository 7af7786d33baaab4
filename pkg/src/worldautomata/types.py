"""Static value types and symbol identity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(x):
    """x modulo 2pi in [0, 2pi); np.mod of a tiny negative number rounds up to 2pi itself."""
    out = np.mod(x, TWO_PI)
    if isinstance(out, np.ndarray):
        out[out >= TWO_PI] = 0.0
        return out
    return 0.0 if out >= TWO_PI else float(out)


class Key(NamedTuple):
    """Identity of a variable or action: a name at a level."""

    name: str
    level: int

    def lifted(self, by: int = 1) -> "Key":
        return Key(self.name, self.level + by)

    def __str__(self) -> str:
        return f"{self.name}@{self.level}"

    @classmethod
    def parse(cls, text: str) -> "Key":
        name, _, level = text.rpartition("@")
        if not name:
            return cls(text, 0)
        return cls(name, int(level))


class StaticType:
    """Base class of the value domains a variable may range over."""


    def default(self):
        raise NotImplementedError

    def coerce(self, value):
        return value

    def contains(self, value) -> bool:
        return True

    @property
    def field_dtype(self):
        return object

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class RealType(StaticType):
    name: str = "Real"

    def default(self):
        return 0.0

    def coerce(self, value):
        return float(value)

    def contains(self, value) -> bool:
        return isinstance(value, (int, float, np.floating, np.integer)) and not isinstance(value, bool)

    @property
    def field_dtype(self):
        return np.float64


@dataclass(frozen=True)
class AngleType(StaticType):
    """Real numbers modulo 2*pi, kept in [0, 2*pi)."""

    name: str = "Rad"

    def default(self):
        return 0.0

    def coerce(self, value):
        return float(wrap_angle(float(value)))

    def contains(self, value) -> bool:
        return RealType().contains(value) and 0.0 <= float(value) < TWO_PI

    @property
    def field_dtype(self):
        return np.float64


@dataclass(frozen=True)
class Vec2Type(StaticType):
    name: str = "Real^2"

    def default(self):
        return np.zeros(2)

    def coerce(self, value):
        arr = np.asarray(value, dtype=np.float64)
        if arr.shape != (2,):
            raise TypeError(f"expected a 2-vector, got shape {arr.shape}")
        return arr

    def contains(self, value) -> bool:
        return isinstance(value, np.ndarray) and value.shape == (2,)


@dataclass(frozen=True)
class BoolType(StaticType):
    name: str = "Bool"

    def default(self):
        return False

    def coerce(self, value):
        return bool(value)

    def contains(self, value) -> bool:
        return isinstance(value, (bool, np.bool_))

    @property
    def field_dtype(self):
        return np.bool_


@dataclass(frozen=True)
class EnumType(StaticType):
    name: str
    variants: Tuple[str, ...]
    neutral: Optional[str] = None

    def default(self):
        return self.neutral if self.neutral is not None else self.variants[0]

    def coerce(self, value):
        value = str(value)
        if value not in self.variants:
            raise TypeError(f"{value!r} is not a variant of {self.name}")
        return value

    def contains(self, value) -> bool:
        return isinstance(value, str) and value in self.variants

    def problems(self) -> list:
        out = []
        if not self.variants:
            out.append(f"enum {self.name} has no variants")
        if len(set(self.variants)) != len(self.variants):
            out.append(f"enum {self.name} has duplicate variants")
        if self.neutral is not None and self.neutral not in self.variants:
            out.append(f"enum {self.name}: neutral {self.neutral!r} is not a variant")
        return out


@dataclass(frozen=True)
class GridMapType(StaticType):
    """Per-cell map carried by an automaton variable; cells hold arbitrary values."""

    name: str = "Map"

    def default(self):
        return None

    def contains(self, value) -> bool:
        return isinstance(value, np.ndarray) and value.ndim == 2


REAL = RealType()
ANGLE = AngleType()
VEC2 = Vec2Type()
BOOL = BoolType()
GRIDMAP = GridMapType()

BUILTIN_TYPES = {
    "Real": REAL,
    "ℝ": REAL,
    "Rad": ANGLE,
    "Angle": ANGLE,
    "Real^2": VEC2,
    "ℝ^2": VEC2,
    "ℝ²": VEC2,
    "Real2": VEC2,
    "Bool": BOOL,
    "Map": GRIDMAP,
}


def type_label(st: StaticType) -> str:
    if isinstance(st, EnumType):
        return st.name
    return st.name


def color_type() -> EnumType:
    return EnumType("Color", ("green", "χ1", "χ2", "χ3"), neutral="green")
