"""Splitting a composite execution into component executions, and checking the split.

The split is reconstructed from the composite execution alone: visible leaf
variables are read off the valuation, invisible ones are recomputed from the
component dynamics. The checker then only uses the trajectory operators
(project, combine_on, remove_on) to confirm the coupling equations.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

import numpy as np

from .algebra import DEFAULT_ALGEBRA
from .execution import EPSILON, Execution
from .model import WorldAutomaton
from .network import Network, StepState
from .trajectory import REAL_TOL, Trajectory, combine_on, remove_on
from .types import Key, RealType

Path = Tuple[int, ...]


class NotDecomposable(ValueError):
    pass


def _leaf_states(alpha: Execution, net: Network) -> List[List[StepState]]:
    init = net.initial_nodes()
    dt = alpha.dt
    pieces: List[List[StepState]] = []
    last: Optional[StepState] = None
    last_k = -1
    final_prev: Optional[StepState] = None
    starts = alpha.starts()
    for tau, k0 in zip(alpha.trajectories, starts):
        states = []
        for j in range(tau.n):
            k = k0 + j
            valuation = tau.state(j)
            if k != last_k:
                final_prev = last
            same = last if k == last_k else None
            if k == 0:
                ext0 = {key: valuation[key] for key in net.root.U if key in valuation}
                prev = StepState(dict(init), ext0, 0.0, None)
                state = net.load(valuation, 0.0, prev=prev, same_time=same, initial=None if same else init)
            else:
                state = net.load(valuation, k * dt, prev=final_prev, same_time=same, dt=dt)
            states.append(state)
            last, last_k = state, k
        pieces.append(states)
    return pieces


def decompose_execution(
    alpha: Execution,
    wa: WorldAutomaton,
    cfg=None,
    network: Optional[Network] = None,
) -> Dict[Path, Execution]:
    """Executions of every node of the composition tree (the root included), keyed by path.

    Actions outside a component's alphabet appear as padding stutters in its execution.
    """
    if network is None:
        from .sim import SimConfig

        cfg = cfg or SimConfig()
        network = Network(wa, cfg.grid, cfg.functions(), cfg.env())
    from .sim import trajectory_from_states

    pieces = _leaf_states(alpha, network)
    out = {}
    for path, (view_wa, _) in network.views.items():
        alphabet = view_wa.A
        trajs = [trajectory_from_states(network, states, alpha.dt, path) for states in pieces]
        actions = [a if a in alphabet else EPSILON for a in alpha.actions]
        out[path] = Execution(trajs, actions, alpha.dt)
    return out


def _differ(a: Trajectory, b: Trajectory, tol: float) -> Optional[str]:
    d = a.first_difference(b, tol)
    if d is None:
        return None
    return f"sample {d[0]}, {d[1]}"


def check_coupling(
    wa: WorldAutomaton,
    components: Dict[Path, Execution],
    tol: float = REAL_TOL,
    path: Path = (),
) -> List[str]:
    """Violations of the composition equations at every composite node; empty when all hold."""
    problems: List[str] = []
    if wa.composite is None:
        return problems
    alpha = components[path]
    b = wa.composite.binding
    parts = wa.composite.parts
    V = wa.V
    kids = [components[path + (i,)] for i in range(len(parts))]
    where = wa.name

    for i, (part, kid) in enumerate(zip(parts, kids)):
        expected = [a if a in part.A else EPSILON for a in alpha.actions]
        if kid.actions != expected:
            problems.append(f"{where}: actions of {part.name} disagree with the composite")

    for j, tau in enumerate(alpha.trajectories):
        if b.kind == "parallel":
            S = sorted(b.shared)
            for part, kid in zip(parts, kids):
                keys = sorted((part.V & V) - b.shared)
                msg = _differ(tau.project(keys), kid.trajectories[j].project(keys), tol)
                if msg:
                    problems.append(f"{where}: piece {j} projection onto {part.name}: {msg}")
            if S:
                combined = combine_on(kids[0].trajectories[j], kids[1].trajectories[j], S)
                msg = _differ(tau.project(S), combined, tol)
                if msg:
                    problems.append(f"{where}: piece {j} shared outputs are not the combination: {msg}")
        elif b.kind == "inplace":
            C = sorted(b.shared)
            outer, inner = parts
            t1, t3 = kids[0].trajectories[j], kids[1].trajectories[j]
            for part, tk in ((outer, t1), (inner, t3)):
                keys = sorted((part.V & V) - b.shared)
                msg = _differ(tau.project(keys), tk.project(keys), tol)
                if msg:
                    problems.append(f"{where}: piece {j} projection onto {part.name}: {msg}")
            if C:
                outside = tau.project(C)
                inside = t3.project(C)
                msg = _differ(t1.project(C), combine_on(outside, inside, C), tol)
                if msg:
                    problems.append(f"{where}: piece {j} captured inputs are not the combination: {msg}")
                removed = remove_on(t1.project(C), inside, C)
                for key in C:
                    alg = DEFAULT_ALGEBRA.for_type(tau.schema[key])
                    mask = np.asarray(alg.invertible(outside.data[key], inside.data[key]), dtype=bool)
                    if isinstance(tau.schema[key], RealType):
                        ok = np.abs(removed.data[key].astype(float) - outside.data[key].astype(float)) <= tol
                    else:
                        ok = removed.data[key] == outside.data[key]
                    if np.any(mask & ~np.asarray(ok, dtype=bool)):
                        problems.append(f"{where}: piece {j} subtraction form fails for {key}")
            for key in sorted(b.zeroed):
                st = t3.schema[key]
                neutral = DEFAULT_ALGEBRA.neutral(st)
                col = t3.data[key]
                if isinstance(st, RealType):
                    bad = np.any(np.abs(col.astype(float) - float(neutral)) > tol)
                else:
                    bad = np.any(col != neutral)
                if bad:
                    problems.append(f"{where}: piece {j} uncaptured inner input {key} is not neutral")
        elif b.kind == "closed":
            (part,), (kid,) = parts, kids
            keys = sorted(part.V & V)
            msg = _differ(tau.project(keys), kid.trajectories[j].project(keys), tol)
            if msg:
                problems.append(f"{where}: piece {j} harness projection: {msg}")
            for key, value in b.closures:
                col = kid.trajectories[j].data[key]
                if np.any(col != value):
                    problems.append(f"{where}: piece {j} closed input {key} departs from {value}")

    for i, part in enumerate(parts):
        problems.extend(check_coupling(part, components, tol, path + (i,)))
    return problems
