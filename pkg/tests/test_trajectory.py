import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randomized import SHADE, random_trajectory
from worldautomata.algebra import DEFAULT_ALGEBRA, EnumCollision
from worldautomata.trajectory import (
    DomainError,
    LatticeError,
    Trajectory,
    TrajectoryError,
    combine_on,
    from_samples,
    point,
    remove_on,
)
from worldautomata.types import ANGLE, BOOL, REAL, VEC2, Key, color_type

V = Key("v", 0)
COLOR = color_type()


def ramp(values, dt=1.0, key=V):
    return from_samples(dt, {key: REAL}, [{key: x} for x in values])


def field(value, st, n=1, shape=(2, 2), key=Key("w", 1)):
    arr = np.empty((n,) + shape, dtype=object if st is COLOR else None)
    arr[...] = value
    return Trajectory(0.1, n, {key: st}, {key: arr}, frozenset({key}))


# -- operators -----------------------------------------------------------------------


def test_restrict_is_pointwise():
    tau = ramp([0.0, 1.0, 4.0])
    assert tau.restrict(1.0) == ramp([0.0, 1.0])
    assert tau.restrict(2.0) == tau


def test_restrict_outside_domain_fails():
    with pytest.raises(DomainError):
        ramp([0.0, 1.0, 4.0]).restrict(3.0)


def test_restrict_off_lattice_fails():
    with pytest.raises(LatticeError):
        ramp([0.0, 1.0, 4.0]).restrict(1.5)


def test_suffix_shifts_time():
    tau = ramp([0.0, 1.0, 2.0])
    assert tau.suffix(1.0) == ramp([1.0, 2.0])
    assert tau.suffix(0.0) == tau


def test_suffix_composes():
    tau = ramp([0.0, 1.0, 2.0, 3.0, 4.0])
    assert tau.suffix(1.0).suffix(1.0) == tau.suffix(2.0)


def test_concat_keeps_last_state_of_first():
    t1 = ramp([1.0])
    t2 = ramp([5.0, 6.0])
    assert t1.concat(t2) == ramp([1.0, 6.0])


def test_concat_with_point_is_identity():
    tau = ramp([0.0, 2.0, 3.0])
    assert tau.concat(point(1.0, {V: REAL}, tau.lstate())) == tau


def test_concat_is_associative():
    a, b, c = ramp([0.0, 1.0]), ramp([9.0, 2.0, 3.0]), ramp([7.0, 4.0])
    assert a.concat(b).concat(c) == a.concat(b.concat(c))


def test_concat_needs_closed_first():
    open_tau = Trajectory(1.0, 2, {V: REAL}, {V: np.zeros(2)}, closed=False)
    with pytest.raises(TrajectoryError):
        open_tau.concat(ramp([0.0]))


def test_project():
    k2 = Key("u", 0)
    tau = from_samples(1.0, {V: REAL, k2: BOOL}, [{V: 1.0, k2: True}, {V: 2.0, k2: False}])
    p = tau.project([V])
    assert p.keys == {V}
    assert list(p.data[V]) == [1.0, 2.0]
    assert tau.project(tau.keys) == tau
    empty = tau.project([])
    assert empty.keys == frozenset() and empty.n == tau.n
    with pytest.raises(TrajectoryError):
        tau.project([Key("nope", 0)])


# -- perturbation algebras ---------------------------------------------------------------


def test_real_fields_add():
    out = combine_on(field(1.0, REAL), field(2.0, REAL), [Key("w", 1)])
    assert np.all(out.data[Key("w", 1)] == 3.0)


def test_bool_fields_or_and_remove():
    w = Key("w", 1)
    a = np.zeros((1, 2, 2), dtype=bool)
    b = np.zeros((1, 2, 2), dtype=bool)
    a[0, 0, 0] = True
    b[0, 1, 1] = True
    ta = Trajectory(0.1, 1, {w: BOOL}, {w: a}, frozenset({w}))
    tb = Trajectory(0.1, 1, {w: BOOL}, {w: b}, frozenset({w}))
    both = combine_on(ta, tb, [w])
    assert both.data[w][0].tolist() == [[True, False], [False, True]]
    assert remove_on(both, tb, [w]) == ta


def test_color_neutral():
    w = Key("w", 1)
    out = combine_on(field("green", COLOR), field("χ2", COLOR), [w])
    assert set(out.data[w].ravel()) == {"χ2"}


def test_enum_collision():
    with pytest.raises(EnumCollision):
        combine_on(field("χ1", COLOR), field("χ2", COLOR), [Key("w", 1)])


def test_combine_needs_world_variables():
    with pytest.raises(TrajectoryError):
        combine_on(ramp([1.0]), ramp([2.0]), [V])


reals = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(reals, reals, reals)
def test_real_group_laws(a, b, c):
    alg = DEFAULT_ALGEBRA.for_type(REAL)
    assert alg.combine(a, b) == alg.combine(b, a)
    assert math.isclose(alg.combine(alg.combine(a, b), c), alg.combine(a, alg.combine(b, c)), rel_tol=1e-12, abs_tol=1e-6)
    assert alg.combine(a, alg.neutral()) == a
    assert math.isclose(alg.remove(alg.combine(a, b), b), a, rel_tol=1e-12, abs_tol=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_angles_wrap(a, b):
    alg = DEFAULT_ALGEBRA.for_type(ANGLE)
    s = alg.combine(a, b)
    assert 0.0 <= s < 2 * math.pi
    back = alg.remove(s, b)
    assert math.isclose(math.cos(back), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(back), math.sin(a), abs_tol=1e-9)


@given(st.sampled_from(SHADE.variants), st.sampled_from(SHADE.variants))
def test_enum_monoid(a, b):
    alg = DEFAULT_ALGEBRA.for_type(SHADE)
    assert alg.combine(a, alg.neutral()) == a
    if a == b or "none" in (a, b):
        assert alg.combine(a, b) == alg.combine(b, a)
    if b == "none" or a == b:
        assert alg.remove(alg.combine(a, b), b) in (a, "none")


@given(st.booleans(), st.booleans())
def test_bool_remove_inverts_when_disjoint(a, b):
    alg = DEFAULT_ALGEBRA.for_type(BOOL)
    if not (a and b):
        assert alg.remove(alg.combine(a, b), b) == a


def test_vec2_componentwise():
    alg = DEFAULT_ALGEBRA.for_type(VEC2)
    assert np.allclose(alg.combine(np.array([1.0, 2.0]), np.array([3.0, -1.0])), [4.0, 1.0])


# -- closure of the representation --------------------------------------------------------


@pytest.mark.parametrize("seed", range(30))
def test_operators_stay_well_formed(seed):
    tau = random_trajectory(seed)
    i = tau.n // 2
    for piece in (tau.prefix(i), tau.suffix_at(i), tau.prefix(i).concat(tau.suffix_at(i))):
        assert all(a.shape[0] == piece.n for a in piece.data.values())
    assert tau.prefix(i).concat(tau.suffix_at(i)) == tau
