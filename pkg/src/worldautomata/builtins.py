"""Built-in functions available to guards and laws.

The case-study functions (footprint ``f``, estimators ``g``/``h``, cost ``r``
and map ``update``) are deliberately simple; each has named alternatives a
scenario may select with ``bind <fn> = <alternative>``.
"""
from __future__ import annotations

import math
from typing import Callable, Dict, Mapping, Optional

import numpy as np

from .grid import Region

NEUTRAL_COLOR = "green"

# Case-study constants every automaton may mention; scenarios override them.
GLOBAL_DEFAULTS = {"k_max": 1.0, "p_s": 0.5, "p_e": 0.9, "η": 0.5, "eta": 0.5}


def _scalar(v):
    if isinstance(v, np.ndarray) and v.ndim == 0:
        return v.item()
    return v


def footprint_square(size: float = 1.0):
    def f(ctx, angle, center):
        c = np.asarray(center, dtype=float)
        return Region((float(c[0]), float(c[1])), float(angle), size)

    return f


def footprint_point(size: float = 1.0):
    """Degenerate footprint: only the cell containing the centre."""

    def f(ctx, angle, center):
        dx, dy = ctx.grid.cell_size
        c = np.asarray(center, dtype=float)
        return Region((float(c[0]), float(c[1])), 0.0, min(dx, dy) * 0.999)

    return f


def presence_latch(decay: float = 0.1):
    """1 on a non-green observation, else decay towards 0; fused with the broadcast by max."""

    def h(ctx, prev, pin, color):
        own = 1.0 if color != NEUTRAL_COLOR else max(float(prev) - decay, 0.0)
        return max(own, float(pin))

    return h


def orientation_latch(decay: float = 0.1):
    def g(ctx, prev, pin, color, heading=None):
        own = 1.0 if color != NEUTRAL_COLOR else max(float(prev) - decay, 0.0)
        return max(own, float(pin))

    return g


def presence_ignore_broadcast(decay: float = 0.1):
    def h(ctx, prev, pin, color):
        return 1.0 if color != NEUTRAL_COLOR else max(float(prev) - decay, 0.0)

    return h


def cost_identity():
    return lambda ctx, d: float(d)


def cost_square():
    return lambda ctx, d: float(d) ** 2


def map_update():
    return lambda ctx, v: v


REGISTRY: Dict[str, Dict[str, Callable[..., Callable]]] = {
    "f": {"square": footprint_square, "cell": footprint_point},
    "h": {"latch": presence_latch, "own": presence_ignore_broadcast},
    "g": {"latch": orientation_latch},
    "r": {"identity": cost_identity, "square": cost_square},
    "update": {"write": map_update},
}

DEFAULT_CHOICE = {"f": "square", "h": "latch", "g": "latch", "r": "identity", "update": "write"}


def _min(ctx, *args):
    return _fold(np.minimum, args)


def _max(ctx, *args):
    return _fold(np.maximum, args)


def _fold(op, args):
    if not args:
        raise ValueError("min/max need at least one argument")
    out = args[0]
    for a in args[1:]:
        out = op(out, a)
    return _scalar(out)


MATH: Dict[str, Callable] = {
    "min": _min,
    "max": _max,
    "sqrt": lambda ctx, x: _scalar(np.sqrt(x)),
    "sin": lambda ctx, x: _scalar(np.sin(x)),
    "cos": lambda ctx, x: _scalar(np.cos(x)),
    "abs": lambda ctx, x: _scalar(np.abs(x)),
    "norm": lambda ctx, v: float(math.hypot(v[0], v[1])),
}


def make_functions(
    bindings: Optional[Mapping[str, str]] = None,
    target_size: float = 1.0,
    decay: float = 0.1,
) -> Dict[str, Callable]:
    choice = dict(DEFAULT_CHOICE)
    choice.update(bindings or {})
    out = dict(MATH)
    for fn, alt in choice.items():
        try:
            factory = REGISTRY[fn][alt]
        except KeyError:
            raise KeyError(f"no alternative {alt!r} for built-in {fn!r}") from None
        if fn == "f":
            out[fn] = factory(target_size)
        elif fn in ("h", "g"):
            out[fn] = factory(decay)
        else:
            out[fn] = factory()
    return out


BUILTIN_NAMES = frozenset(MATH) | frozenset(REGISTRY)
