"""The case-study experiments: Field[Target] against FalseField, and the engage run."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..composition import inplace
from ..execution import trace
from ..export import sample_rows
from ..grid import Region, SpatialGrid
from ..refinement import Verdict, implements_bounded
from ..schedule import Pulse, SignalSpec, Stimulus
from ..sim import SimConfig, SimResult, simulate
from ..types import Key, RealType, Vec2Type
from .builders import NEUTRAL, CaseStudyParams, build_falsefield, build_uav, field_target, harnessed, two_uavs

E1 = Key("e", 1)
C1 = Key("c", 1)
K1 = Key("k", 1)
ENGAGE_ORDER = ("confirm", "compete", "commit", "engage", "delete")


def default_config(params: CaseStudyParams = CaseStudyParams(), horizon: float = 5.0) -> SimConfig:
    return SimConfig(grid=SpatialGrid(nx=10, ny=10), dt=0.1, horizon=horizon, params=params.globals())


def target_cell(params: CaseStudyParams, grid: SpatialGrid) -> Tuple[int, int]:
    return grid.cell_of(params.target_pose)


def e_schedule(name: str, *pulses: Pulse) -> Stimulus:
    return Stimulus(name, (SignalSpec(E1, False, tuple(pulses)),))


def default_battery(params: CaseStudyParams = CaseStudyParams(), grid: Optional[SpatialGrid] = None) -> List[Stimulus]:
    """Engage-signal schedules: onsets on the target, elsewhere, bounded, repeated and field-wide."""
    grid = grid or SpatialGrid(nx=10, ny=10)
    star = (target_cell(params, grid),)
    out = [e_schedule("never")]
    for t_e in (0.0, 0.5, 1.0, 2.0, 2.5, 3.5):
        out.append(e_schedule(f"target from {t_e}", Pulse(True, t_e, cells=star)))
    out += [
        e_schedule("target 1.0 until 1.5", Pulse(True, 1.0, 1.5, cells=star)),
        e_schedule("target twice", Pulse(True, 0.5, 1.2, cells=star), Pulse(True, 2.0, 2.6, cells=star)),
        e_schedule("elsewhere", Pulse(True, 0.0, cells=((2, 2), (7, 1)))),
        e_schedule("whole field from 1.5", Pulse(True, 1.5)),
        e_schedule("square around target", Pulse(True, 0.7, region=Region(params.target_pose, 0.0, 3.0))),
        e_schedule("target after 2.0", Pulse(True, 2.0, cells=star, strict=True)),
    ]
    return out


# -- equivalence ----------------------------------------------------------------------


@dataclass
class Deviation:
    variable: str
    kind: str  # "real" (max abs difference) or "discrete" (mismatching samples)
    value: float


@dataclass
class EquivalenceReport:
    forward: Verdict
    backward: Verdict
    deviations: List[Deviation]
    ramp: List[Tuple[str, bool]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.forward) and bool(self.backward) and all(ok for _, ok in self.ramp)

    def table(self) -> str:
        lines = [f"{'variable':<10} {'kind':<9} max deviation", f"{'-' * 10} {'-' * 9} {'-' * 13}"]
        for d in self.deviations:
            lines.append(f"{d.variable:<10} {d.kind:<9} {d.value:.3g}")
        return "\n".join(lines)

    def __str__(self) -> str:
        parts = [self.table(), "", f"Field[Target] <= FalseField: {self.forward.summary()}"]
        parts.append(f"FalseField <= Field[Target]: {self.backward.summary()}")
        for what, ok in self.ramp:
            parts.append(f"{'ok  ' if ok else 'FAIL'} {what}")
        return "\n".join(parts)


def max_deviations(runs: Sequence[Tuple[SimResult, SimResult]], keys: Sequence[Key]) -> List[Deviation]:
    out = []
    for key in keys:
        worst, kind = 0.0, "discrete"
        for ra, rb in runs:
            a = trace(ra.execution, ra.wa).flatten()
            b = trace(rb.execution, rb.wa).flatten()
            st = a.schema[key]
            x, y = a.data[key], b.data[key]
            if isinstance(st, (RealType, Vec2Type)):
                kind = "real"
                worst = max(worst, float(np.max(np.abs(x.astype(float) - y.astype(float)))))
            else:
                worst = max(worst, float(np.count_nonzero(x != y)))
        out.append(Deviation(str(key), kind, worst))
    return out


def ramp_checks(params: CaseStudyParams, cfg: SimConfig, systems, t_e: float = 2.0) -> List[Tuple[str, bool]]:
    """Closed form k(t, p*) = t - t_e up to k_max; both fire there; c(p*) is green afterwards."""
    star = target_cell(params, cfg.grid)
    stim = e_schedule(f"ramp from {t_e}", Pulse(True, t_e, cells=(star,)))
    t_fire = t_e + params.k_max
    checks = []
    for wa in systems:
        res = simulate(wa, cfg.with_(stimulus=stim))
        keys, post = sample_rows(res.execution)
        times = np.arange(res.execution.steps + 1) * cfg.dt
        k = post[K1][:, star[0], star[1]]
        upto = times <= t_fire + 1e-9
        expected = np.maximum(times - t_e, 0.0)
        checks.append((f"{wa.name}: k(t,p*) = max(0, t - {t_e}) up to k_max", bool(np.all(np.abs(k[upto] - expected[upto]) <= 1e-9))))
        fired = [e.time for e in res.events]
        checks.append((f"{wa.name}: its internal action fires once, at t = {t_fire:g}", len(fired) == 1 and abs(fired[0] - t_fire) < 1e-9))
        after = times >= t_fire - 1e-9
        c = post[C1][:, star[0], star[1]]
        checks.append((f"{wa.name}: c(t,p*) = green for t >= {t_fire:g}", bool(np.all(c[after] == NEUTRAL))))
    return checks


def run_equivalence_experiment(
    params: CaseStudyParams = CaseStudyParams(),
    cfg: Optional[SimConfig] = None,
    battery: Optional[Sequence[Stimulus]] = None,
    chi: Optional[str] = None,
) -> EquivalenceReport:
    """Field[Target] (with ξ held green) against FalseField on a battery of engage schedules.

    `chi` colors the FalseField patch; a color other than the target's yields a
    counterexample at t = 0.
    """
    cfg = cfg or default_config(params)
    battery = list(battery) if battery is not None else default_battery(params, cfg.grid)
    ft = harnessed(field_target(params))
    ff = build_falsefield(params, chi)
    forward = implements_bounded(ft, ff, battery, cfg.horizon, cfg=cfg)
    backward = implements_bounded(ff, ft, battery, cfg.horizon, cfg=cfg)
    runs = [(simulate(ft, cfg.with_(stimulus=s)), simulate(ff, cfg.with_(stimulus=s))) for s in battery]
    deviations = max_deviations(runs, [C1, K1])
    ramp = ramp_checks(params, cfg, (ft, ff)) if chi in (None, params.target_color) else []
    return EquivalenceReport(forward, backward, deviations, ramp)


# -- engage -----------------------------------------------------------------------------


@dataclass
class EngageReport:
    result: SimResult
    checks: List[Tuple[str, bool]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def events(self) -> List[Tuple[float, str]]:
        return [(e.time, e.action.name) for e in self.result.events]

    def __str__(self) -> str:
        lines = [f"{t:>6.2f}  {a}" for t, a in self.events()]
        lines.append("")
        lines += [f"{'ok  ' if ok else 'FAIL'} {what}" for what, ok in self.checks]
        return "\n".join(lines)


def engage_system(params: CaseStudyParams, mode: str = "single"):
    if mode == "two":
        return inplace(harnessed(field_target(params)), two_uavs(params))
    if mode == "wrong_color":
        other = next(c for c in ("χ1", "χ2", "χ3") if c != params.target_color)
        params = dataclasses.replace(params, uav_color=other)
    return inplace(harnessed(field_target(params)), build_uav(params))


def engage_config(params: CaseStudyParams, mode: str, horizon: float = 3.0) -> SimConfig:
    signals = [SignalSpec(E1, False)]
    if mode != "two":
        signals.append(SignalSpec(Key("cost_in", 1), float("inf")))
    return default_config(params, horizon).with_(stimulus=Stimulus(f"engage {mode}", tuple(signals)), pin_neutral=True)


def _base(name: str) -> str:
    return name.rsplit("_", 1)[0] if name.rsplit("_", 1)[-1].isdigit() else name


def _first(events, name) -> Optional[float]:
    for t, a in events:
        if _base(a) == name:
            return t
    return None


def run_engage_scenario(
    params: CaseStudyParams = CaseStudyParams(), cfg: Optional[SimConfig] = None, mode: str = "single"
) -> EngageReport:
    """Simulate (Field[Target])[UAV] and check the engagement narrative.

    `mode` is "single" (one UAV of the target's color), "wrong_color" or "two"
    (two linked UAVs at different distances from the target).
    """
    wa = engage_system(params, mode)
    cfg = cfg or engage_config(params, mode)
    res = simulate(wa, cfg)
    events = [(e.time, e.action.name) for e in res.events]
    names = [a for _, a in events]
    checks: List[Tuple[str, bool]] = []
    if mode == "wrong_color":
        checks.append(("compete never fires", not any(_base(a) == "compete" for a in names)))
        checks.append(("nothing is engaged or deleted", not any(_base(a) in ("engage", "delete") for a in names)))
        return EngageReport(res, checks)
    if mode == "two":
        commits = [a for a in names if _base(a) == "commit"]
        checks.append(("exactly one UAV commits", len(set(commits)) == 1))
        checks.append(("the cheaper UAV (UAV_1) is the one committing", set(commits) == {"commit_1"}))
        checks.append(("only the committed UAV engages", {a for a in names if _base(a) == "engage"} == {"engage_1"}))
        checks.append(("the target is deleted", "delete" in names))
        return EngageReport(res, checks)

    times = [_first(events, n) for n in ENGAGE_ORDER]
    ordered = all(t is not None for t in times) and all(a < b for a, b in zip(times, times[1:]))
    checks.append(("events occur in order " + " < ".join(ENGAGE_ORDER), ordered))
    if not all(t is not None for t in times):
        return EngageReport(res, checks)
    t_confirm, t_compete, t_commit, t_engage, t_delete = times
    dt = cfg.dt
    pre = res.execution.flatten()  # value before any action at a sample
    keys, post = sample_rows(res.execution)
    idx = lambda t: int(round(t / dt))  # noqa: E731
    p_t = pre.data[Key("P_t", 1)]
    checks.append((f"P_t > p_s when confirm fires ({t_confirm:g})", bool(p_t[idx(t_confirm)] > params.p_s)))
    checks.append((f"P_t > p_e when engage fires ({t_engage:g})", bool(p_t[idx(t_engage)] > params.p_e)))
    checks.append(("commit is immediate after compete for a lone UAV", abs(t_commit - t_compete - dt) < 1e-9))
    # the root's e@1 column is the outside perturbation; the UAV's own output sits in its component
    _, uav_rows = sample_rows(res.component_executions[(1,)])
    e_out = uav_rows[E1]
    checks.append(("the UAV's e is true everywhere from engage to delete", bool(np.all(e_out[idx(t_engage) : idx(t_delete)]) and not e_out[0].any())))
    star = target_cell(params, cfg.grid)
    k = post[K1][:, star[0], star[1]]
    ts = np.arange(len(k)) * dt
    window = (ts >= t_engage - 1e-9) & (ts <= t_delete + 1e-9)
    checks.append(("K ramps at rate 1 at the target after engage", bool(np.allclose(k[window], ts[window] - t_engage, atol=1e-9))))
    checks.append((f"delete fires when k reaches k_max ({t_delete:g})", abs(k[idx(t_delete)] - params.k_max) < 1e-9))
    colored = post[C1][0] != NEUTRAL
    later = post[C1][idx(t_delete) :]
    checks.append(("c is green at the target cells after delete", bool(colored.any() and np.all(later[:, colored] == NEUTRAL))))
    checks.append(("final c is green everywhere", bool(np.all(post[C1][-1] == NEUTRAL))))
    return EngageReport(res, checks)
