"""Executions, traces, level traces and paddings."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import WorldAutomaton
from .trajectory import REAL_TOL, DomainError, Trajectory, lattice_index
from .types import Key

EPSILON = None  # the stutter action inserted by padding


class ExecutionError(ValueError):
    pass


@dataclass
class Execution:
    """tau0 a1 tau1 a2 ... ; an action of None is a padding stutter."""

    trajectories: List[Trajectory]
    actions: List[Optional[Key]]
    dt: float

    def __post_init__(self):
        if not self.trajectories:
            raise ExecutionError("an execution has at least one trajectory")
        if len(self.actions) != len(self.trajectories) - 1:
            raise ExecutionError("actions must sit between consecutive trajectories")

    @property
    def duration(self) -> float:
        return self.steps * self.dt

    @property
    def steps(self) -> int:
        return sum(t.n - 1 for t in self.trajectories)

    def starts(self) -> List[int]:
        """Lattice index at which each trajectory begins."""
        out, k = [], 0
        for tau in self.trajectories:
            out.append(k)
            k += tau.n - 1
        return out

    def occurrences(self) -> List[Tuple[Optional[Key], float]]:
        starts = self.starts()
        return [(a, starts[i + 1] * self.dt) for i, a in enumerate(self.actions)]

    def cut_indices(self) -> List[int]:
        return self.starts()[1:]

    def lengths(self) -> List[float]:
        return [t.duration for t in self.trajectories]

    def padding_ok(self) -> bool:
        for i, a in enumerate(self.actions):
            if a is EPSILON:
                before, after = self.trajectories[i], self.trajectories[i + 1]
                if not before.window(before.n - 1, before.n - 1).equals(after.window(0, 0)):
                    return False
        return True

    def flatten(self) -> Trajectory:
        """One trajectory on the whole lattice; at a cut the earlier piece's value is kept."""
        out = self.trajectories[0]
        for tau in self.trajectories[1:]:
            out = out.concat(tau)
        return out

    def project(self, keys: Iterable[Key]) -> "Execution":
        keys = list(keys)
        return Execution([t.project(keys) for t in self.trajectories], list(self.actions), self.dt)

    def equals(self, other: "Execution", tol: float = REAL_TOL) -> bool:
        if self.actions != other.actions or len(self.trajectories) != len(other.trajectories):
            return False
        return all(a.equals(b, tol) for a, b in zip(self.trajectories, other.trajectories))


@dataclass
class Trace:
    trajectories: List[Trajectory]
    actions: List[Key]
    dt: float

    @property
    def steps(self) -> int:
        return sum(t.n - 1 for t in self.trajectories)

    def as_execution(self) -> Execution:
        return Execution(self.trajectories, list(self.actions), self.dt)

    def occurrences(self) -> List[Tuple[Key, float]]:
        return self.as_execution().occurrences()

    def flatten(self) -> Trajectory:
        return self.as_execution().flatten()

    def first_divergence(self, other: "Trace", tol: float = REAL_TOL) -> Optional[Tuple[float, str]]:
        """(time, description) of the earliest disagreement, or None if the traces match."""
        if self.trajectories[0].keys != other.trajectories[0].keys:
            return (0.0, "interface")
        found: List[Tuple[float, str]] = []
        mine, theirs = self.occurrences(), other.occurrences()
        for i in range(max(len(mine), len(theirs))):
            a = mine[i] if i < len(mine) else None
            b = theirs[i] if i < len(theirs) else None
            if a is None or b is None or a[0] != b[0] or abs(a[1] - b[1]) > 1e-9:
                t = min(x[1] for x in (a, b) if x is not None)
                label = f"action {a[0] if a else '-'} vs {b[0] if b else '-'}"
                found.append((t, label))
                break
        f1, f2 = self.flatten(), other.flatten()
        diff = f1.first_difference(f2, tol)
        if diff is not None:
            found.append((diff[0] * self.dt, f"variable {diff[1]}"))
        if not found:
            for p, q in zip(self.trajectories, other.trajectories):
                d = p.first_difference(q, tol)
                if d is not None or p.n != q.n:
                    found.append((0.0, "piece structure"))
                    break
        return min(found) if found else None

    def matches(self, other: "Trace", tol: float = REAL_TOL) -> bool:
        return self.first_divergence(other, tol) is None


def _restrict(alpha: Execution, keep_action, keys) -> Trace:
    keys = list(keys)
    pieces = [alpha.trajectories[0].project(keys)]
    actions: List[Key] = []
    for a, tau in zip(alpha.actions, alpha.trajectories[1:]):
        proj = tau.project(keys)
        if a is not EPSILON and keep_action(a):
            actions.append(a)
            pieces.append(proj)
        else:
            pieces[-1] = pieces[-1].concat(proj)
    return Trace(pieces, actions, alpha.dt)


def _check_alphabet(alpha: Execution, wa: WorldAutomaton):
    known = wa.A
    for a in alpha.actions:
        if a is not EPSILON and a not in known:
            raise ExecutionError(f"action {a} is not in the alphabet of {wa.name}")
    missing = wa.Z - alpha.trajectories[0].keys
    if missing:
        raise ExecutionError(f"execution lacks external variables {sorted(map(str, missing))}")


def trace(alpha: Execution, wa: WorldAutomaton) -> Trace:
    """External actions and external variables of an execution."""
    _check_alphabet(alpha, wa)
    E = wa.E
    return _restrict(alpha, lambda a: a in E, sorted(wa.Z))


def level_trace(alpha: Execution, wa: WorldAutomaton, level: int) -> Trace:
    _check_alphabet(alpha, wa)
    E = {a for a in wa.E if a.level == level}
    Z = sorted(k for k in wa.Z if k.level == level)
    return _restrict(alpha, lambda a: a in E, Z)


# --------------------------------------------------------------------------- padding


def _split(alpha: Execution, k: int) -> Execution:
    """Insert a stutter at lattice index k (before any action already at k)."""
    if not 0 <= k <= alpha.steps:
        raise DomainError(f"padding point {k * alpha.dt} outside [0, {alpha.duration}]")
    starts = alpha.starts()
    for i, tau in enumerate(alpha.trajectories):
        if starts[i] <= k <= starts[i] + tau.n - 1:
            j = k - starts[i]
            left, right = tau.window(0, j), tau.window(j, tau.n - 1)
            trajs = alpha.trajectories[:i] + [left, right] + alpha.trajectories[i + 1 :]
            acts = alpha.actions[:i] + [EPSILON] + alpha.actions[i:]
            return Execution(trajs, acts, alpha.dt)
    raise DomainError(f"no trajectory covers sample {k}")


def pad(alpha: Execution, positions: Iterable[float]) -> Execution:
    """Padding of alpha with a stutter at each given time (repeats allowed)."""
    out = alpha
    for t in sorted(positions):
        out = _split(out, lattice_index(t, alpha.dt))
    return out


def align_paddings(executions: Sequence[Execution]) -> List[Execution]:
    """Paddings whose j-th trajectories all have the same length."""
    if not executions:
        return []
    steps = {e.steps for e in executions}
    if len(steps) > 1:
        raise ExecutionError("executions of different durations cannot be aligned")
    counts = [Counter(e.cut_indices()) for e in executions]
    merged: Counter = Counter()
    for c in counts:
        for k, m in c.items():
            merged[k] = max(merged[k], m)
    out = []
    for e, c in zip(executions, counts):
        extra = []
        for k, m in merged.items():
            extra.extend([k * e.dt] * (m - c.get(k, 0)))
        out.append(pad(e, extra))
    return out


# --------------------------------------------------------------------------- interfaces


def comparable(a1: WorldAutomaton, a2: WorldAutomaton) -> bool:
    """Same external variables (name, level, class, direction, type) and external actions."""
    v1, act1 = a1.signature()
    v2, act2 = a2.signature()
    return v1 == v2 and act1 == act2


def interface_difference(a1: WorldAutomaton, a2: WorldAutomaton) -> List[str]:
    v1, act1 = a1.signature()
    v2, act2 = a2.signature()
    out = []
    for k in sorted(set(v1) | set(v2)):
        if v1.get(k) != v2.get(k):
            out.append(f"variable {k}: {_sig(v1.get(k))} vs {_sig(v2.get(k))}")
    for k in sorted(set(act1) | set(act2)):
        if act1.get(k) != act2.get(k):
            out.append(f"action {k}: {_sig(act1.get(k))} vs {_sig(act2.get(k))}")
    return out


def _sig(x) -> str:
    if x is None:
        return "absent"
    if isinstance(x, tuple):
        return " ".join(getattr(p, "value", str(p)) for p in x)
    return getattr(x, "value", str(x))
