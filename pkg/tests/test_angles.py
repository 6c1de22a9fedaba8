import math

import pytest
from hypothesis import given, strategies as st

from blindverify.angles import Angle, Z_BASIS, angles, as_basis, basis_to_json, is_z, recover_phi

eighths = st.integers(min_value=-40, max_value=40)


@given(eighths)
def test_reduced_mod_8(k):
    assert 0 <= Angle(k).eighths < 8
    assert Angle(k) == Angle(k + 8)


@given(eighths, eighths)
def test_group_arithmetic(a, b):
    A, B = Angle(a), Angle(b)
    assert (A + B) - B == A
    assert A + (-A) == Angle(0)
    assert A - B == A + (-B)


@given(eighths)
def test_radians_round_trip(k):
    a = Angle(k)
    assert Angle.from_radians(a.radians) == a
    assert Angle.from_radians(a.radians + 2 * math.pi) == a


def test_off_grid_radians_rejected():
    with pytest.raises(ValueError):
        Angle.from_radians(0.1)


@given(eighths, eighths, st.integers(0, 1))
def test_delta_relation_round_trip(theta, phi, r):
    t, f = Angle(theta), Angle(phi)
    delta = t + f + 4 * r
    assert recover_phi(t, delta, r) == f


def test_flip_adds_pi():
    assert Angle(1).flip(1) == Angle(5)
    assert Angle(1).flip(0) == Angle(1)


def test_basis_coercion():
    assert as_basis("z") is Z_BASIS and is_z(as_basis("Z"))
    assert as_basis(3) == Angle(3)
    assert basis_to_json(Z_BASIS) == "Z" and basis_to_json(Angle(-1)) == 7
    assert angles(0, -2) == (Angle(0), Angle(6))
    with pytest.raises(ValueError):
        as_basis("Q")
