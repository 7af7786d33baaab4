"""Sampled trajectories and the operators on them.

A trajectory holds ``n`` samples at times 0, dt, ..., (n-1)*dt. Each variable
maps to an array whose first axis is time: shape (n,) for scalar automaton
variables, (n, 2) for vectors, (n, ny, nx) for world fields. Enum values and
maps are stored in object arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

from .algebra import DEFAULT_ALGEBRA, PerturbationAlgebra
from .types import EnumType, GridMapType, Key, StaticType, Vec2Type

REAL_TOL = 1e-9


class TrajectoryError(ValueError):
    pass


class DomainError(TrajectoryError):
    """Requested interval or time lies outside the trajectory's domain."""


class LatticeError(TrajectoryError):
    """A time that is not a multiple of the sampling step."""


class SamplingMismatch(TrajectoryError):
    pass


def lattice_index(t: float, dt: float) -> int:
    k = int(round(t / dt))
    if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise LatticeError(f"time {t} is not on the {dt} lattice")
    return k


@dataclass(frozen=True, eq=False)
class Trajectory:
    dt: float
    n: int
    schema: Mapping[Key, StaticType]
    data: Mapping[Key, np.ndarray]
    world: frozenset = frozenset()
    closed: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise TrajectoryError("dt must be positive")
        if self.n < 1:
            raise TrajectoryError("a trajectory has at least its initial sample")
        if set(self.schema) != set(self.data):
            raise TrajectoryError("schema and data disagree on the variable set")
        for key, arr in self.data.items():
            if arr.shape[0] != self.n:
                raise TrajectoryError(f"{key} has {arr.shape[0]} samples, expected {self.n}")

    # -- basic accessors -----------------------------------------------------
    @property
    def keys(self) -> frozenset:
        return frozenset(self.schema)

    @property
    def duration(self) -> float:
        return (self.n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def value(self, key: Key, i: int):
        return self.data[key][i]

    def state(self, i: int) -> Dict[Key, Any]:
        return {k: arr[i] for k, arr in self.data.items()}

    def fstate(self) -> Dict[Key, Any]:
        return self.state(0)

    def lstate(self) -> Dict[Key, Any]:
        if not self.closed:
            raise DomainError("an open trajectory has no last state")
        return self.state(self.n - 1)

    def index(self, t: float) -> int:
        k = lattice_index(t, self.dt)
        if not 0 <= k < self.n:
            raise DomainError(f"time {t} outside [0, {self.duration}]")
        return k

    def _with(self, data: Mapping[Key, np.ndarray], n: int, closed: Optional[bool] = None, schema=None, world=None):
        return Trajectory(
            self.dt,
            n,
            dict(self.schema if schema is None else schema),
            dict(data),
            self.world if world is None else world,
            self.closed if closed is None else closed,
        )

    # -- the operators ---------------------------------------------------------
    def restrict(self, stop: float, start: float = 0.0) -> "Trajectory":
        """Samples on [start, stop]; with start = 0 this is a prefix."""
        i, j = lattice_index(start, self.dt), lattice_index(stop, self.dt)
        return self.window(i, j)

    def prefix(self, last: int) -> "Trajectory":
        return self.window(0, last)

    def window(self, first: int, last: int) -> "Trajectory":
        """Samples first..last inclusive, re-based to start at time 0."""
        if not (0 <= first <= last < self.n):
            raise DomainError(f"sample range [{first}, {last}] outside [0, {self.n - 1}]")
        closed = True if last < self.n - 1 else self.closed
        return self._with({k: a[first : last + 1] for k, a in self.data.items()}, last - first + 1, closed)

    def suffix(self, t: float) -> "Trajectory":
        return self.window(self.index(t), self.n - 1)

    def suffix_at(self, i: int) -> "Trajectory":
        return self.window(i, self.n - 1)

    def concat(self, other: "Trajectory") -> "Trajectory":
        """Join at lstate(self); other's first sample is dropped in its favour."""
        if not self.closed:
            raise TrajectoryError("concatenation needs a closed first trajectory")
        _check_compatible(self, other)
        data = {k: np.concatenate([a, other.data[k][1:]], axis=0) for k, a in self.data.items()}
        return self._with(data, self.n + other.n - 1, other.closed)

    def project(self, keys: Iterable[Key]) -> "Trajectory":
        keys = list(keys)
        unknown = [k for k in keys if k not in self.schema]
        if unknown:
            raise TrajectoryError(f"unknown variables {sorted(map(str, unknown))}")
        keep = set(keys)
        return self._with(
            {k: a for k, a in self.data.items() if k in keep},
            self.n,
            schema={k: s for k, s in self.schema.items() if k in keep},
            world=frozenset(self.world & keep),
        )

    def rename_keys(self, mapping: Mapping[Key, Key]) -> "Trajectory":
        m = lambda k: mapping.get(k, k)  # noqa: E731
        return self._with(
            {m(k): a for k, a in self.data.items()},
            self.n,
            schema={m(k): s for k, s in self.schema.items()},
            world=frozenset(m(k) for k in self.world),
        )

    def merge(self, other: "Trajectory") -> "Trajectory":
        """Union of two trajectories over disjoint variable sets with one domain."""
        _check_same_domain(self, other)
        clash = self.keys & other.keys
        if clash:
            raise TrajectoryError(f"merge of overlapping variables {sorted(map(str, clash))}")
        data = dict(self.data)
        data.update(other.data)
        schema = dict(self.schema)
        schema.update(other.schema)
        return self._with(data, self.n, schema=schema, world=self.world | other.world)

    def replace_values(self, updates: Mapping[Key, np.ndarray]) -> "Trajectory":
        data = dict(self.data)
        data.update(updates)
        return self._with(data, self.n)

    # -- comparison --------------------------------------------------------------
    def first_difference(self, other: "Trajectory", tol: float = REAL_TOL) -> Optional[Tuple[int, Key]]:
        """(sample index, variable) of the earliest disagreement, or None."""
        if self.keys != other.keys:
            raise TrajectoryError("trajectories over different variable sets")
        if abs(self.dt - other.dt) > 1e-12:
            raise SamplingMismatch("different time steps")
        n = min(self.n, other.n)
        best = None
        for key in sorted(self.keys):
            bad = _mismatch_rows(self.schema[key], self.data[key][:n], other.data[key][:n], tol)
            if bad is not None and (best is None or bad < best[0]):
                best = (bad, key)
        if best is None and self.n != other.n:
            best = (n, min(self.keys) if self.keys else None)
        return best

    def equals(self, other: "Trajectory", tol: float = REAL_TOL) -> bool:
        if self.n != other.n or self.keys != other.keys:
            return False
        return self.first_difference(other, tol) is None

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.closed == other.closed and self.world == other.world and self.equals(other, 0.0)

    __hash__ = None

    def __repr__(self):
        return f"Trajectory(n={self.n}, dt={self.dt}, vars={sorted(map(str, self.schema))})"


def _check_compatible(a: Trajectory, b: Trajectory):
    if abs(a.dt - b.dt) > 1e-12:
        raise SamplingMismatch(f"time steps differ: {a.dt} vs {b.dt}")
    if a.keys != b.keys:
        raise SamplingMismatch("variable sets differ")
    for k in a.keys:
        if a.data[k].shape[1:] != b.data[k].shape[1:]:
            raise SamplingMismatch(f"{k} sampled on different grids")


def _check_same_domain(a: Trajectory, b: Trajectory):
    if abs(a.dt - b.dt) > 1e-12 or a.n != b.n:
        raise DomainError(f"domains differ: {a.n} samples vs {b.n}")


def values_equal(st: StaticType, a, b, tol: float = REAL_TOL) -> bool:
    return _mismatch_rows(st, np.asarray([a], dtype=object if _is_obj(st) else None), np.asarray([b], dtype=object if _is_obj(st) else None), tol) is None


def _is_obj(st: StaticType) -> bool:
    return isinstance(st, (EnumType, GridMapType))


def _mismatch_rows(st: StaticType, a: np.ndarray, b: np.ndarray, tol: float) -> Optional[int]:
    if a.shape != b.shape:
        return 0
    if isinstance(st, GridMapType):
        for i in range(a.shape[0]):
            if not _map_equal(a[i], b[i]):
                return i
        return None
    if a.dtype.kind == "f" or b.dtype.kind == "f":
        with np.errstate(invalid="ignore"):
            diff = np.abs(a.astype(float) - b.astype(float))
            same_inf = np.isinf(a) & np.isinf(b) & (np.sign(a) == np.sign(b))
            bad = ~((diff <= tol) | same_inf)
    else:
        bad = a != b
    bad = np.asarray(bad, dtype=bool).reshape(a.shape[0], -1).any(axis=1)
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def _map_equal(x, y) -> bool:
    if x is None or y is None:
        return x is None and y is None
    if x.shape != y.shape:
        return False
    for u, v in zip(x.ravel(), y.ravel()):
        if isinstance(u, float) and isinstance(v, float):
            if abs(u - v) > REAL_TOL:
                return False
        elif isinstance(u, np.ndarray) or isinstance(v, np.ndarray):
            if not np.allclose(u, v, atol=REAL_TOL):
                return False
        elif u != v:
            return False
    return True


# --------------------------------------------------------------------------- builders


def empty_array(st: StaticType, n: int, field_shape: Optional[Tuple[int, int]] = None) -> np.ndarray:
    shape = (n,) + (field_shape or ())
    if isinstance(st, Vec2Type):
        return np.zeros(shape + (2,))
    dtype = st.field_dtype
    if dtype is object:
        return np.empty(shape, dtype=object)
    return np.zeros(shape, dtype=dtype)


def from_samples(
    dt: float,
    schema: Mapping[Key, StaticType],
    samples: Iterable[Mapping[Key, Any]],
    world: Iterable[Key] = (),
    closed: bool = True,
) -> Trajectory:
    """Stack a list of valuations into a trajectory."""
    samples = list(samples)
    if not samples:
        raise TrajectoryError("no samples")
    data = {}
    for key, st in schema.items():
        column = [s[key] for s in samples]
        if _is_obj(st):
            arr = np.empty((len(column),) + np.shape(column[0]) if isinstance(st, EnumType) else (len(column),), dtype=object)
            for i, v in enumerate(column):
                arr[i] = v
        else:
            arr = np.asarray(column, dtype=float if st.field_dtype is not np.bool_ else bool)
        data[key] = arr
    return Trajectory(dt, len(samples), dict(schema), data, frozenset(world), closed)


def point(dt: float, schema: Mapping[Key, StaticType], state: Mapping[Key, Any], world: Iterable[Key] = ()) -> Trajectory:
    """The one-sample trajectory at a valuation."""
    return from_samples(dt, schema, [state], world)


# --------------------------------------------------------------------------- algebra


def _apply_on(op: str, t1: Trajectory, t2: Trajectory, keys: Iterable[Key], algebra: PerturbationAlgebra) -> Trajectory:
    keys = list(keys)
    _check_same_domain(t1, t2)
    for k in keys:
        if k not in t1.schema or k not in t2.schema:
            raise TrajectoryError(f"{k} missing from one operand")
        if k not in t1.world or k not in t2.world:
            raise TrajectoryError(f"{k} is not a world variable")
    out = {}
    for k in keys:
        alg = algebra.for_type(t1.schema[k])
        fn = alg.combine if op == "combine" else alg.remove
        out[k] = np.asarray(fn(t1.data[k], t2.data[k]))
        if isinstance(t1.schema[k], EnumType):
            out[k] = out[k].astype(object)
    return t1.project(keys).replace_values(out)


def combine_on(t1: Trajectory, t2: Trajectory, keys: Iterable[Key], algebra: PerturbationAlgebra = DEFAULT_ALGEBRA) -> Trajectory:
    """Per sample and cell, t1 (+) t2 on the given world variables."""
    return _apply_on("combine", t1, t2, keys, algebra)


def remove_on(t1: Trajectory, t2: Trajectory, keys: Iterable[Key], algebra: PerturbationAlgebra = DEFAULT_ALGEBRA) -> Trajectory:
    return _apply_on("remove", t1, t2, keys, algebra)


def invertible_on(t1: Trajectory, t2: Trajectory, key: Key, algebra: PerturbationAlgebra = DEFAULT_ALGEBRA) -> np.ndarray:
    return algebra.for_type(t1.schema[key]).invertible(t1.data[key], t2.data[key])
