"""Bounded, battery-driven implementation checking by trace inclusion."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .execution import Trace, comparable, interface_difference, trace
from .model import WorldAutomaton
from .schedule import Stimulus
from .sim import SimConfig, simulate
from .trajectory import REAL_TOL


class NotComparable(ValueError):
    pass


@dataclass
class Counterexample:
    stimulus: str
    time: float
    what: str
    trace: Trace


@dataclass
class Verdict:
    passed: bool
    runs: int = 0
    counterexample: Optional[Counterexample] = None
    label: str = "bounded evidence"

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return f"pass ({self.label}, {self.runs} runs)"
        ce = self.counterexample
        return f"counterexample on {ce.stimulus}: first divergence at t={ce.time:g} ({ce.what})"


def enumerate_traces(wa: WorldAutomaton, cfg: SimConfig, budget: int = 1) -> List[Trace]:
    """Traces under up to `budget` scheduler choice vectors, explored depth first."""
    out: List[Trace] = []
    pending: List[Tuple[int, ...]] = [()]
    while pending and len(out) < max(1, budget):
        prefix = pending.pop()
        decisions: List[int] = []

        def chooser(t, candidates, _prefix=prefix, _log=decisions):
            i = len(_log)
            pick = _prefix[i] if i < len(_prefix) else 0
            _log.append(len(candidates))
            return pick

        result = simulate(wa, cfg, chooser)
        out.append(trace(result.execution, wa))
        branches = []
        for d in range(len(prefix), len(decisions)):
            for alt in range(1, decisions[d]):
                branches.append(prefix + (0,) * (d - len(prefix)) + (alt,))
        pending.extend(reversed(branches))
    return out


def implements_bounded(
    a1: WorldAutomaton,
    a2: WorldAutomaton,
    battery: Sequence[Stimulus],
    horizon: float,
    tol: float = REAL_TOL,
    cfg: Optional[SimConfig] = None,
    budget: int = 1,
) -> Verdict:
    """Every trace of a1 under each stimulus is matched by some trace of a2."""
    if not comparable(a1, a2):
        raise NotComparable("; ".join(interface_difference(a1, a2)))
    base = (cfg or SimConfig()).with_(horizon=horizon)
    runs = 0
    for stim in battery:
        run_cfg = base.with_(stimulus=stim)
        mine = enumerate_traces(a1, run_cfg, budget)
        theirs = enumerate_traces(a2, run_cfg, budget)
        runs += len(mine) + len(theirs)
        for tr in mine:
            if any(tr.matches(other, tol) for other in theirs):
                continue
            div = min((tr.first_divergence(other, tol) for other in theirs), key=lambda d: d[0])
            return Verdict(False, runs, Counterexample(stim.name, div[0], div[1], tr))
    return Verdict(True, runs)
