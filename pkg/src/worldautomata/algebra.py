"""Perturbation algebras: how overlapping world-variable contributions add up.

Every operation works elementwise on scalars or on whole per-cell fields.
Real values form an abelian group. Bool (OR) and enums with a neutral
variant (override) are monoids whose ``remove`` is only a partial inverse;
``invertible`` reports where ``remove(combine(a, b), b) == a`` is guaranteed.
"""
from __future__ import annotations

import numpy as np

from .types import (
    AngleType,
    BoolType,
    EnumType,
    GridMapType,
    RealType,
    StaticType,
    Vec2Type,
    wrap_angle,
)


class EnumCollision(ValueError):
    """Two distinct non-neutral enum values meet at the same time and place."""


class AlgebraUndefined(TypeError):
    pass


class TypeAlgebra:
    is_group = False

    def combine(self, a, b):
        raise NotImplementedError

    def remove(self, a, b):
        raise NotImplementedError

    def neutral(self):
        raise NotImplementedError

    def invertible(self, a, b):
        return np.ones(np.broadcast(np.asarray(a, dtype=object), np.asarray(b, dtype=object)).shape, dtype=bool)


class RealAlgebra(TypeAlgebra):
    is_group = True

    def combine(self, a, b):
        return np.add(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else float(a) + float(b)

    def remove(self, a, b):
        return np.subtract(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else float(a) - float(b)

    def neutral(self):
        return 0.0


class AngleAlgebra(RealAlgebra):
    def combine(self, a, b):
        return wrap_angle(super().combine(a, b))

    def remove(self, a, b):
        return wrap_angle(super().remove(a, b))


class Vec2Algebra(TypeAlgebra):
    is_group = True

    def combine(self, a, b):
        return np.add(a, b)

    def remove(self, a, b):
        return np.subtract(a, b)

    def neutral(self):
        return np.zeros(2)


class BoolAlgebra(TypeAlgebra):
    def combine(self, a, b):
        out = np.logical_or(a, b)
        return out if isinstance(out, np.ndarray) and out.ndim else bool(out)

    def remove(self, a, b):
        out = np.logical_and(a, np.logical_not(b))
        return out if isinstance(out, np.ndarray) and out.ndim else bool(out)

    def neutral(self):
        return False

    def invertible(self, a, b):
        # (a or b) and not b == a  unless a and b are both set
        return np.logical_not(np.logical_and(a, b))


class EnumAlgebra(TypeAlgebra):
    def __init__(self, st: EnumType):
        if st.neutral is None:
            raise AlgebraUndefined(f"enum {st.name} declares no neutral variant")
        self.st = st

    def neutral(self):
        return self.st.neutral

    def combine(self, a, b):
        n = self.st.neutral
        if not isinstance(a, np.ndarray) and not isinstance(b, np.ndarray):
            if a == n:
                return b
            if b == n or a == b:
                return a
            raise EnumCollision(f"{self.st.name}: {a} meets {b}")
        a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
        clash = (a_arr != n) & (b_arr != n) & (a_arr != b_arr)
        if np.any(clash):
            idx = tuple(int(i) for i in np.argwhere(clash)[0])
            raise EnumCollision(f"{self.st.name}: {a_arr[idx]} meets {b_arr[idx]} at cell {idx}")
        return np.where(a_arr == n, b_arr, a_arr).astype(object)

    def remove(self, a, b):
        n = self.st.neutral
        if not isinstance(a, np.ndarray) and not isinstance(b, np.ndarray):
            return n if a == b else a
        a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
        return np.where(a_arr == b_arr, n, a_arr).astype(object)

    def invertible(self, a, b):
        a_arr, b_arr = np.broadcast_arrays(np.asarray(a, dtype=object), np.asarray(b, dtype=object))
        n = self.st.neutral
        return np.asarray(~((a_arr == b_arr) & (a_arr != n)), dtype=bool)


class PerturbationAlgebra:
    """Registry choosing a per-type algebra."""

    def for_type(self, st: StaticType) -> TypeAlgebra:
        if isinstance(st, AngleType):
            return AngleAlgebra()
        if isinstance(st, GridMapType):
            raise AlgebraUndefined("maps carry no perturbation algebra")
        if isinstance(st, RealType):
            return RealAlgebra()
        if isinstance(st, Vec2Type):
            return Vec2Algebra()
        if isinstance(st, BoolType):
            return BoolAlgebra()
        if isinstance(st, EnumType):
            return EnumAlgebra(st)
        raise AlgebraUndefined(f"no algebra for {st}")

    def combine(self, st, a, b):
        return self.for_type(st).combine(a, b)

    def remove(self, st, a, b):
        return self.for_type(st).remove(a, b)

    def neutral(self, st):
        return self.for_type(st).neutral()


DEFAULT_ALGEBRA = PerturbationAlgebra()
