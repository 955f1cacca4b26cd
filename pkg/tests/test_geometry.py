import math

import pytest
from hypothesis import given, strategies as st

from ristrack.errors import DomainError, OutOfFieldError
from ristrack.geometry import (Direction, Position, RisGeometry, angular_distance,
                               direction_from_position, position_from_direction)


def test_plus_y_axis():
    d = direction_from_position(Position(0, 1, 0), require_front=False)
    assert d.theta == 0.0 and d.phi == 0.0


def test_boresight():
    d = direction_from_position(Position(0, 0, 1))
    assert d.theta == pytest.approx(math.pi / 2, abs=0) and d.phi == 0.0


def test_unit_diagonal():
    d = direction_from_position(Position(1, 1, 1))
    # mpmath: atan(sqrt(2))
    assert d.theta == pytest.approx(0.9553166181245093, abs=1e-12)
    assert d.phi == pytest.approx(math.pi / 4, abs=1e-15)


def test_below_equator_uses_second_branch():
    d = direction_from_position(Position(0.3, -1.0, 2.0))
    assert d.theta > math.pi / 2


def test_origin_rejected():
    with pytest.raises(DomainError):
        direction_from_position(Position(0, 0, 0))


def test_behind_surface_rejected():
    with pytest.raises(OutOfFieldError):
        direction_from_position(Position(0.5, 0.2, -1.0))


@pytest.mark.parametrize("theta,phi,rng,expected", [
    (math.pi / 2, 0.0, 2.2, (0.0, 0.0, 2.2)),
    (0.0, 0.0, 1.0, (0.0, 1.0, 0.0)),
    (math.pi / 2, math.pi / 6, 1.0, (0.5, 0.0, 0.8660254037844386)),
])
def test_position_from_direction(theta, phi, rng, expected):
    p = position_from_direction(Direction(theta, phi), rng)
    assert (p.x, p.y, p.z) == pytest.approx(expected, abs=1e-12)


def test_position_needs_positive_range():
    with pytest.raises(DomainError):
        position_from_direction(Direction(1.0, 0.0), 0.0)


@given(st.floats(1e-3, math.pi - 1e-3), st.floats(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3),
       st.floats(0.01, 100.0))
def test_round_trip(theta, phi, rng):
    d = direction_from_position(position_from_direction(Direction(theta, phi), rng))
    assert d.theta == pytest.approx(theta, abs=1e-9)
    assert d.phi == pytest.approx(phi, abs=1e-9)


@given(st.floats(-5, 5), st.floats(-5, 5).filter(lambda v: abs(v) > 1e-6), st.floats(0.1, 5),
       st.floats(0.1, 10))
def test_phi_ignores_y(x, y, z, scale):
    a = direction_from_position(Position(x, y, z))
    b = direction_from_position(Position(x, y * scale, z))
    assert a.phi == b.phi
    assert (a.theta < math.pi / 2) == (y > 0)


def test_direction_invariants():
    with pytest.raises(DomainError):
        Direction(-0.1, 0.0)
    with pytest.raises(DomainError):
        Direction(1.0, 2.0)


def test_default_geometry():
    g = RisGeometry()
    assert (g.rows, g.cols) == (20, 20)
    assert g.spacing == pytest.approx(g.wavelength / 4)
    assert g.freq_hz == pytest.approx(5.4e9)
    with pytest.raises(DomainError):
        RisGeometry(0, 20)


def test_angular_distance():
    a = Direction.from_degrees(90, 10)
    b = Direction.from_degrees(90, -20)
    assert angular_distance(a, b) == pytest.approx(math.radians(30))
    assert angular_distance(a, a) == 0.0
