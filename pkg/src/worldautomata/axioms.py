"""Checking prefix, suffix and concatenation closure of generated trajectories.

A trajectory counts as generated when re-simulating the dynamics from its
first state, under its own inputs and with time restarted at 0, reproduces it.
Leaf variables hidden by the composition are seeded from the recording.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Sequence, Tuple

from .network import Network, Node, StepState
from .sim import SimResult, regenerate
from .trajectory import REAL_TOL, Trajectory


@dataclass
class Member:
    tau: Trajectory
    hints: List[Mapping[Node, Any]]  # leaf values at every sample, for hidden variables


@dataclass
class AxiomReport:
    checked: dict = field(default_factory=lambda: {"T1": 0, "T2": 0, "T3": 0})
    violations: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        counts = ", ".join(f"{k}: {v} checked" for k, v in self.checked.items())
        if self.ok:
            return f"all axioms hold ({counts})"
        lines = [f"{len(self.violations)} violation(s) ({counts})"]
        lines += [f"  {ax}: {msg}" for ax, msg in self.violations[:20]]
        return "\n".join(lines)


def family_from(results: Sequence[SimResult]) -> Tuple[Network, List[Member]]:
    members: List[Member] = []
    net = None
    for res in results:
        net = net or res.network
        alpha = res.execution
        starts = [0] + [post for post, _ in res.cuts]
        for tau, first in zip(alpha.trajectories, starts):
            hints = [res.rows[first + j].state.nodes for j in range(tau.n)]
            members.append(Member(tau, hints))
    if net is None:
        raise ValueError("empty family")
    return net, members


def check_trajectory_axioms(
    results: Sequence[SimResult],
    tol: float = REAL_TOL,
    suffix_stride: int = 1,
    max_concats: int = 40,
) -> AxiomReport:
    net, members = family_from(results)
    report = AxiomReport()
    regenerated: List[Optional[List[StepState]]] = []

    # T1: one re-simulation per member decides every prefix (the dynamics are causal).
    for idx, m in enumerate(members):
        regen, states = regenerate(net, m.tau, hint=m.hints[0])
        diff = m.tau.first_difference(regen, tol)
        report.checked["T1"] += m.tau.n
        if diff is not None:
            report.violations.append(("T1", f"member {idx}: prefix ending at sample {diff[0]} not generated ({diff[1]})"))
            regenerated.append(None)
        else:
            regenerated.append(states)

    # T2: every suffix regenerates from its own first state.
    for idx, m in enumerate(members):
        for j in range(1, m.tau.n, max(1, suffix_stride)):
            suffix = m.tau.suffix_at(j)
            regen, _ = regenerate(net, suffix, hint=m.hints[j])
            report.checked["T2"] += 1
            diff = suffix.first_difference(regen, tol)
            if diff is not None:
                report.violations.append(
                    ("T2", f"member {idx}: suffix from sample {j} differs at its sample {diff[0]} ({diff[1]})")
                )
                break

    # T3: a member followed by a fresh piece started from its last state, and splits of members.
    done = 0
    for idx, m in enumerate(members):
        if done >= max_concats or regenerated[idx] is None:
            continue
        donor = members[(idx + 1) % len(members)]
        if donor.tau.n < 2:
            donor = m if m.tau.n >= 2 else None
        if donor is None:
            continue
        fresh, _ = regenerate(net, donor.tau, start=regenerated[idx][-1])
        joined = m.tau.concat(fresh)
        regen, _ = regenerate(net, joined, hint=m.hints[0])
        report.checked["T3"] += 1
        done += 1
        diff = joined.first_difference(regen, tol)
        if diff is not None:
            report.violations.append(("T3", f"member {idx}: concatenation differs at sample {diff[0]} ({diff[1]})"))
        j = m.tau.n // 2
        if not m.tau.prefix(j).concat(m.tau.suffix_at(j)).equals(m.tau, 0.0):
            report.violations.append(("T3", f"member {idx}: split at sample {j} does not reassemble"))
    return report
