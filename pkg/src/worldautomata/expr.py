"""Expression trees for guards, effects and dynamics laws, and their evaluation.

Values are Python scalars for automaton variables and numpy arrays of shape
(ny, nx) for world variables; the two broadcast together. Vectors are numpy
arrays of shape (2,). Enum values are strings (object arrays in fields).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from .grid import Region, SpatialGrid

EPS = 1e-9


class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Name(Expr):
    name: str
    level: Optional[int] = None


@dataclass(frozen=True)
class Prev(Expr):
    """Value of a variable at the previous sample (the left limit)."""

    name: str
    level: Optional[int] = None


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # 'not' | 'neg'
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cond(Expr):
    cond: Expr
    then: Expr
    other: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: Tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Abs(Expr):
    arg: Expr


@dataclass(frozen=True)
class VecLit(Expr):
    x: Expr
    y: Expr


@dataclass(frozen=True)
class At(Expr):
    """World variable sampled at a point, e.g. c(t, s_fp)."""

    name: str
    point: Expr
    level: Optional[int] = None


@dataclass(frozen=True)
class Exists(Expr):
    """exists var in region st body, scanned over grid cells."""

    var: str
    region: Expr
    body: Expr


TRUE = BoolLit(True)

CONSTANTS = {"pi": math.pi, "π": math.pi, "inf": math.inf, "∞": math.inf}
SPECIAL = {"t", "p"}


# --------------------------------------------------------------------------- walking


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, Unary):
        return (e.arg,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Cond):
        return (e.cond, e.then, e.other)
    if isinstance(e, Call):
        return tuple(e.args)
    if isinstance(e, Abs):
        return (e.arg,)
    if isinstance(e, VecLit):
        return (e.x, e.y)
    if isinstance(e, At):
        return (e.point,)
    if isinstance(e, Exists):
        return (e.region, e.body)
    return ()


def references(e: Expr, bound: frozenset = frozenset()) -> Iterator[Tuple[str, Optional[int], bool]]:
    """Yield (name, level, is_prev) for every free symbol occurrence."""
    if isinstance(e, Name):
        if e.name not in bound:
            yield (e.name, e.level, False)
        return
    if isinstance(e, Prev):
        yield (e.name, e.level, True)
        return
    if isinstance(e, At):
        yield (e.name, e.level, False)
        yield from references(e.point, bound)
        return
    if isinstance(e, Exists):
        yield from references(e.region, bound)
        yield from references(e.body, bound | {e.var})
        return
    if isinstance(e, Call):
        for a in e.args:
            yield from references(a, bound)
        return
    for c in children(e):
        yield from references(c, bound)


def functions_called(e: Expr) -> Iterator[str]:
    if isinstance(e, Call):
        yield e.func
    for c in children(e):
        yield from functions_called(c)


def uses_prev(e: Expr) -> bool:
    return any(is_prev for _, _, is_prev in references(e))


def uses_time(e: Expr) -> bool:
    return any(name == "t" for name, _, _ in references(e))


def transform(e: Expr, fn: Callable[[Expr], Optional[Expr]]) -> Expr:
    """Bottom-up rewrite; fn returns a replacement or None to keep the node."""
    if isinstance(e, Unary):
        e = Unary(e.op, transform(e.arg, fn))
    elif isinstance(e, Binary):
        e = Binary(e.op, transform(e.left, fn), transform(e.right, fn))
    elif isinstance(e, Cond):
        e = Cond(transform(e.cond, fn), transform(e.then, fn), transform(e.other, fn))
    elif isinstance(e, Call):
        e = Call(e.func, tuple(transform(a, fn) for a in e.args))
    elif isinstance(e, Abs):
        e = Abs(transform(e.arg, fn))
    elif isinstance(e, VecLit):
        e = VecLit(transform(e.x, fn), transform(e.y, fn))
    elif isinstance(e, At):
        e = At(e.name, transform(e.point, fn), e.level)
    elif isinstance(e, Exists):
        e = Exists(e.var, transform(e.region, fn), transform(e.body, fn))
    out = fn(e)
    return e if out is None else out


def rename_symbols(e: Expr, mapping: Mapping[str, str]) -> Expr:
    def fn(node):
        if isinstance(node, (Name, Prev, At)) and node.name in mapping:
            return replace(node, name=mapping[node.name])
        return None

    return transform(e, fn)


def shift_levels(e: Expr, by: int) -> Expr:
    def fn(node):
        if isinstance(node, (Name, Prev, At)) and node.level is not None:
            return replace(node, level=node.level + by)
        return None

    return transform(e, fn)


# --------------------------------------------------------------------------- printing

_PREC = {"or": 1, "and": 2, "in": 4, "<": 4, "<=": 4, ">": 4, ">=": 4, "==": 4, "!=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6}


def _sym(name, level):
    return name if level is None else f"{name}@{level}"


def format_num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return f"{v:.1f}"
    return repr(float(v))


def format_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Num):
        s = format_num(e.value)
        return f"({s})" if e.value < 0 else s
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Name):
        return _sym(e.name, e.level)
    if isinstance(e, Prev):
        return f"prev({_sym(e.name, e.level)})"
    if isinstance(e, At):
        return f"{_sym(e.name, e.level)}({format_expr(e.point)})"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, Abs):
        return f"|{format_expr(e.arg)}|"
    if isinstance(e, VecLit):
        return f"[{format_expr(e.x)}, {format_expr(e.y)}]"
    if isinstance(e, Unary):
        if e.op == "not":
            s = f"not {format_expr(e.arg, 3)}"
            return f"({s})" if prec > 3 else s
        s = f"-{format_expr(e.arg, 7)}"
        return f"({s})" if prec > 7 else s
    if isinstance(e, Binary):
        p = _PREC[e.op]
        # comparisons are non-associative; parenthesise nested ones
        lp = p + 1 if p == 4 else p
        s = f"{format_expr(e.left, lp)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({s})" if prec > p else s
    if isinstance(e, Cond):
        s = f"{format_expr(e.cond, 1)} ? {format_expr(e.then, 1)} : {format_expr(e.other, 0)}"
        return f"({s})" if prec > 0 else s
    if isinstance(e, Exists):
        s = f"exists {e.var} in {format_expr(e.region, 8)} st {format_expr(e.body, 0)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"cannot format {e!r}")


# --------------------------------------------------------------------------- evaluation


class EvalError(RuntimeError):
    pass


@dataclass(frozen=True)
class Points:
    """The grid's cell centres, used wherever an expression mentions p."""

    xs: np.ndarray
    ys: np.ndarray


@dataclass
class Context:
    grid: SpatialGrid
    t: float
    variables: Callable[[str, Optional[int]], Any]
    previous: Callable[[str, Optional[int]], Any]
    params: Mapping[str, Any]
    literals: Mapping[str, str]
    functions: Mapping[str, Callable]
    bound: Dict[str, Any] = field(default_factory=dict)

    def points(self) -> Points:
        xs, ys = self.grid.centers
        return Points(xs, ys)


def _is_numeric(v) -> bool:
    if isinstance(v, (bool, np.bool_, str)):
        return False
    if isinstance(v, np.ndarray):
        return v.dtype.kind in "fiu"
    return isinstance(v, (int, float, np.floating, np.integer))


def _tidy(v):
    if isinstance(v, np.ndarray):
        if v.ndim == 0:
            return v.item()
        if v.dtype.kind == "U":
            return v.astype(object)
    elif isinstance(v, np.bool_):
        return bool(v)
    elif isinstance(v, np.floating):
        return float(v)
    return v


def _compare(op, a, b):
    if _is_numeric(a) and _is_numeric(b):
        if op == "<=":
            r = np.less_equal(a, np.add(b, EPS))
        elif op == ">=":
            r = np.greater_equal(a, np.subtract(b, EPS))
        elif op == "<":
            r = np.less(a, np.subtract(b, EPS))
        elif op == ">":
            r = np.greater(a, np.add(b, EPS))
        elif op == "==":
            r = np.less_equal(np.abs(np.subtract(a, b)), EPS)
        else:
            r = np.greater(np.abs(np.subtract(a, b)), EPS)
        return _tidy(r)
    if op in ("==", "!="):
        if isinstance(a, np.ndarray) and a.shape == (2,) and isinstance(b, np.ndarray) and b.shape == (2,):
            same = bool(np.all(np.abs(a - b) <= EPS))
            return same if op == "==" else not same
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            a_arr = np.asarray(a, dtype=object) if not isinstance(a, np.ndarray) or a.dtype.kind == "U" else a
            r = np.equal(a_arr, b) if op == "==" else np.not_equal(a_arr, b)
            return np.asarray(r, dtype=bool)
        return (a == b) if op == "==" else (a != b)
    raise EvalError(f"cannot compare {a!r} {op} {b!r}")


def evaluate(e: Expr, ctx: Context):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Name):
        return _lookup(e.name, e.level, ctx)
    if isinstance(e, Prev):
        return ctx.previous(e.name, e.level)
    if isinstance(e, Unary):
        v = evaluate(e.arg, ctx)
        if e.op == "not":
            return _tidy(np.logical_not(v)) if isinstance(v, np.ndarray) else (not v)
        return _tidy(np.negative(v)) if isinstance(v, np.ndarray) else -v
    if isinstance(e, Binary):
        return _binary(e, ctx)
    if isinstance(e, Cond):
        c = evaluate(e.cond, ctx)
        if isinstance(c, np.ndarray):
            a = evaluate(e.then, ctx)
            b = evaluate(e.other, ctx)
            if isinstance(a, str) or isinstance(b, str) or _obj(a) or _obj(b):
                a = np.asarray(a, dtype=object) if not isinstance(a, np.ndarray) else a
                b = np.asarray(b, dtype=object) if not isinstance(b, np.ndarray) else b
                return np.where(c, a, b).astype(object)
            return _tidy(np.where(c, a, b))
        return evaluate(e.then, ctx) if c else evaluate(e.other, ctx)
    if isinstance(e, Abs):
        v = evaluate(e.arg, ctx)
        if isinstance(v, np.ndarray) and v.shape == (2,):
            return float(np.hypot(v[0], v[1]))
        return _tidy(np.abs(v))
    if isinstance(e, VecLit):
        return np.array([float(evaluate(e.x, ctx)), float(evaluate(e.y, ctx))])
    if isinstance(e, At):
        pt = evaluate(e.point, ctx)
        field_value = _lookup(e.name, e.level, ctx)
        return sample_at(field_value, pt, ctx.grid)
    if isinstance(e, Exists):
        region = evaluate(e.region, ctx)
        if not isinstance(region, Region):
            raise EvalError("exists needs a region")
        mask = region.mask(ctx.grid)
        if not mask.any():
            return False
        saved = ctx.bound.get(e.var, _MISSING)
        ctx.bound[e.var] = ctx.points()
        try:
            body = evaluate(e.body, ctx)
        finally:
            if saved is _MISSING:
                del ctx.bound[e.var]
            else:
                ctx.bound[e.var] = saved
        body = np.broadcast_to(np.asarray(body, dtype=bool), mask.shape)
        return bool(np.any(body & mask))
    if isinstance(e, Call):
        fn = ctx.functions.get(e.func)
        if fn is None:
            raise EvalError(f"unknown function {e.func!r}")
        return fn(ctx, *[evaluate(a, ctx) for a in e.args])
    raise EvalError(f"cannot evaluate {e!r}")


_MISSING = object()


def _obj(v) -> bool:
    return isinstance(v, np.ndarray) and v.dtype == object


def _lookup(name, level, ctx: Context):
    if name in ctx.bound:
        return ctx.bound[name]
    if level is None:
        if name == "t":
            return ctx.t
        if name == "p":
            return ctx.points()
    try:
        return ctx.variables(name, level)
    except KeyError:
        pass
    if level is None:
        if name in ctx.params:
            return ctx.params[name]
        if name in ctx.literals:
            return ctx.literals[name]
        if name in CONSTANTS:
            return CONSTANTS[name]
    raise EvalError(f"unresolved symbol {_sym(name, level)}")


def _binary(e: Binary, ctx: Context):
    op = e.op
    if op in ("and", "or"):
        a = evaluate(e.left, ctx)
        if not isinstance(a, np.ndarray):
            if op == "and" and not a:
                return False
            if op == "or" and a:
                return True
        b = evaluate(e.right, ctx)
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            f = np.logical_and if op == "and" else np.logical_or
            return np.asarray(f(a, b), dtype=bool)
        return bool(b)
    a = evaluate(e.left, ctx)
    b = evaluate(e.right, ctx)
    if op == "in":
        if not isinstance(b, Region):
            raise EvalError("right operand of 'in' must be a region")
        if isinstance(a, Points):
            return b.contains(a.xs, a.ys)
        return bool(b.contains(a[0], a[1]))
    if op in ("<", "<=", ">", ">=", "==", "!="):
        return _compare(op, a, b)
    if not (_is_numeric(a) or _is_vec(a)) or not (_is_numeric(b) or _is_vec(b)):
        raise EvalError(f"arithmetic on non-numbers: {a!r} {op} {b!r}")
    if op == "+":
        r = np.add(a, b)
    elif op == "-":
        r = np.subtract(a, b)
    elif op == "*":
        r = np.multiply(a, b)
    elif op == "/":
        r = np.divide(a, b)
    else:
        raise EvalError(f"unknown operator {op}")
    return _tidy(r)


def _is_vec(v) -> bool:
    return isinstance(v, np.ndarray) and v.shape == (2,)


def sample_at(value, point, grid: SpatialGrid):
    """Value of a field at the cell containing point (a field passes through for p)."""
    if isinstance(point, Points):
        return value
    if not isinstance(value, np.ndarray) or value.ndim != 2:
        return value
    cell = grid.cell_of(point)
    if cell is None:
        raise OutsideGrid(f"point {tuple(point)} lies outside the grid")
    return _tidy(value[cell]) if value.dtype != object else value[cell]


class OutsideGrid(EvalError):
    pass
