"""Input stimuli: piecewise signals for input variables and firing times for input actions."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .expr import EPS
from .grid import Region, SpatialGrid
from .types import EnumType, Key, StaticType, Vec2Type


@dataclass(frozen=True)
class Ramp:
    rate: float
    offset: float = 0.0


@dataclass(frozen=True)
class Pulse:
    """`value` on the selected cells while start <= t < until (t > start when strict)."""

    value: Any
    start: float = 0.0
    until: Optional[float] = None
    cells: Optional[Tuple[Tuple[int, int], ...]] = None
    region: Optional[Region] = None
    strict: bool = False

    def active(self, t: float) -> bool:
        if self.strict:
            if not t > self.start + EPS:
                return False
        elif t < self.start - EPS:
            return False
        return self.until is None or t < self.until - EPS

    def level_at(self, t: float):
        if isinstance(self.value, Ramp):
            return self.value.offset + self.value.rate * (t - self.start)
        return self.value


@dataclass(frozen=True)
class SignalSpec:
    key: Key
    default: Any = None
    pulses: Tuple[Pulse, ...] = ()

    def value(self, t: float, st: StaticType, grid: SpatialGrid, is_world: bool):
        base = st.default() if self.default is None else self.default
        if not is_world:
            out = base
            for pulse in self.pulses:
                if pulse.active(t):
                    out = pulse.level_at(t)
            return st.coerce(out) if out is not None else out
        out = _full(grid.shape, st, base)
        for pulse in self.pulses:
            if not pulse.active(t):
                continue
            mask = np.ones(grid.shape, dtype=bool)
            if pulse.cells is not None:
                mask = np.zeros(grid.shape, dtype=bool)
                for r, c in pulse.cells:
                    mask[r, c] = True
            if pulse.region is not None:
                mask &= pulse.region.mask(grid)
            level = pulse.level_at(t)
            out[mask] = level if isinstance(st, Vec2Type) else st.coerce(level)
        return out


def _full(shape, st: StaticType, value):
    if isinstance(st, Vec2Type):
        return np.broadcast_to(np.asarray(value, dtype=float), shape + (2,)).copy()
    if st.field_dtype is object:
        arr = np.empty(shape, dtype=object)
        arr[...] = st.coerce(value) if value is not None else None
        return arr
    return np.full(shape, st.coerce(value), dtype=st.field_dtype)


@dataclass(frozen=True)
class Stimulus:
    name: str = "stimulus"
    signals: Tuple[SignalSpec, ...] = ()
    actions: Tuple[Tuple[Key, Tuple[float, ...]], ...] = ()

    def signal(self, key: Key) -> Optional[SignalSpec]:
        for s in self.signals:
            if s.key == key:
                return s
        return None

    def action_times(self) -> Dict[Key, Tuple[float, ...]]:
        return {k: tuple(ts) for k, ts in self.actions}

    def with_signal(self, spec: SignalSpec) -> "Stimulus":
        rest = tuple(s for s in self.signals if s.key != spec.key)
        return Stimulus(self.name, rest + (spec,), self.actions)

    def lifted(self, by: int = 1) -> "Stimulus":
        return Stimulus(
            self.name,
            tuple(SignalSpec(s.key.lifted(by), s.default, s.pulses) for s in self.signals),
            tuple((k.lifted(by), ts) for k, ts in self.actions),
        )


# --------------------------------------------------------------------------- JSON


def _pulse_from_json(obj: Mapping, grid: Optional[SpatialGrid]) -> Pulse:
    if "ramp" in obj:
        value = Ramp(float(obj["ramp"]["rate"]), float(obj["ramp"].get("offset", 0.0)))
    else:
        value = obj["value"]
    cells = None
    if "cells" in obj:
        cells = tuple((int(r), int(c)) for r, c in obj["cells"])
    region = None
    if "region" in obj:
        reg = obj["region"]
        region = Region(tuple(map(float, reg["center"])), float(reg.get("angle", 0.0)), float(reg.get("size", 1.0)))
    return Pulse(
        value=value,
        start=float(obj.get("from", 0.0)),
        until=None if obj.get("until") is None else float(obj["until"]),
        cells=cells,
        region=region,
        strict=bool(obj.get("strict", False)),
    )


def stimulus_from_json(obj: Mapping, grid: Optional[SpatialGrid] = None) -> Stimulus:
    signals = []
    for s in obj.get("signals", []):
        key = Key(s["var"], int(s.get("level", 0)))
        signals.append(SignalSpec(key, s.get("default"), tuple(_pulse_from_json(p, grid) for p in s.get("pulses", []))))
    actions = []
    for a in obj.get("actions", []):
        actions.append((Key(a["action"], int(a.get("level", 0))), tuple(float(t) for t in a.get("times", []))))
    return Stimulus(obj.get("name", "stimulus"), tuple(signals), tuple(actions))


def load_battery(path) -> List[Stimulus]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    items = data["stimuli"] if isinstance(data, dict) else data
    return [stimulus_from_json(s) for s in items]


def _pulse_to_json(p: Pulse) -> dict:
    out: Dict[str, Any] = {}
    if isinstance(p.value, Ramp):
        out["ramp"] = {"rate": p.value.rate, "offset": p.value.offset}
    else:
        out["value"] = p.value.tolist() if isinstance(p.value, np.ndarray) else p.value
    out["from"] = p.start
    if p.until is not None:
        out["until"] = p.until
    if p.cells is not None:
        out["cells"] = [list(c) for c in p.cells]
    if p.region is not None:
        out["region"] = {"center": list(p.region.center), "angle": p.region.angle, "size": p.region.size}
    if p.strict:
        out["strict"] = True
    return out


def stimulus_to_json(s: Stimulus) -> dict:
    return {
        "name": s.name,
        "signals": [
            {"var": sig.key.name, "level": sig.key.level, "default": sig.default, "pulses": [_pulse_to_json(p) for p in sig.pulses]}
            for sig in s.signals
        ],
        "actions": [{"action": k.name, "level": k.level, "times": list(ts)} for k, ts in s.actions],
    }


def dump_battery(stimuli: Sequence[Stimulus], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"stimuli": [stimulus_to_json(s) for s in stimuli]}, fh, indent=2, ensure_ascii=False)
        fh.write("\n")
