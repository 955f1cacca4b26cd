"""RIS-centered coordinate frame.

z is the outward boresight normal, y the vertical array axis (rows m) and
x the horizontal array axis (columns n). Pitch ``theta`` is measured from
+y, azimuth ``phi`` in the x-z plane from +z.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OutOfFieldError

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_FREQ_HZ = 5.4e9


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise DomainError(f"theta={self.theta!r} outside [0, pi]")
        if not (-math.pi / 2 <= self.phi <= math.pi / 2):
            raise DomainError(f"phi={self.phi!r} outside [-pi/2, pi/2]")

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "Direction":
        return cls(math.radians(theta_deg), math.radians(phi_deg))

    @property
    def degrees(self) -> tuple[float, float]:
        return math.degrees(self.theta), math.degrees(self.phi)

    def unit_vector(self) -> tuple[float, float, float]:
        st = math.sin(self.theta)
        return (st * math.sin(self.phi), math.cos(self.theta), st * math.cos(self.phi))


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise DomainError(f"non-finite position {self!r}")

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class RisGeometry:
    """Planar M x N aperture with uniform element spacing."""

    rows: int = 20
    cols: int = 20
    spacing: float = SPEED_OF_LIGHT / DEFAULT_FREQ_HZ / 4
    wavelength: float = SPEED_OF_LIGHT / DEFAULT_FREQ_HZ

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DomainError("array needs at least one row and one column")
        if not (self.spacing > 0 and self.wavelength > 0):
            raise DomainError("spacing and wavelength must be positive")

    @classmethod
    def from_frequency(cls, rows=20, cols=20, freq_hz=DEFAULT_FREQ_HZ,
                       spacing_over_lambda=0.25) -> "RisGeometry":
        lam = SPEED_OF_LIGHT / freq_hz
        return cls(rows, cols, spacing_over_lambda * lam, lam)

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def freq_hz(self) -> float:
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def spacing_over_lambda(self) -> float:
        return self.spacing / self.wavelength

    @property
    def phase_step(self) -> float:
        """Geometric phase per element of offset, 2*pi*d/lambda."""
        return 2 * math.pi * self.spacing / self.wavelength

    def row_offsets(self):
        """(M+1)/2 - m for m = 1..M."""
        return (self.rows + 1) / 2 - np.arange(1, self.rows + 1)

    def col_offsets(self):
        """n - (1+N)/2 for n = 1..N."""
        return np.arange(1, self.cols + 1) - (1 + self.cols) / 2


def direction_from_position(p: Position, require_front: bool = True) -> Direction:
    """Pitch/azimuth of ``p`` seen from the RIS center.

    ``theta`` follows the two-branch arctan form (y > 0 and y < 0) and is
    pi/2 on the y = 0 plane. Raises OutOfFieldError for z <= 0 unless
    ``require_front`` is False.
    """
    x, y, z = p.x, p.y, p.z
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise DomainError("direction of the origin is undefined")
    if require_front and z <= 0.0:
        raise OutOfFieldError(f"z={z!r}: target is not in front of the surface")
    rho = math.hypot(x, z)
    if y > 0:
        theta = math.atan(rho / y)
    elif y < 0:
        theta = math.pi + math.atan(rho / y)
    else:
        theta = math.pi / 2
    if z == 0.0:
        phi = math.copysign(math.pi / 2, x) if x != 0 else 0.0
    else:
        phi = math.atan(x / z)
    return Direction(theta, phi)


def position_from_direction(d: Direction, range_m: float) -> Position:
    if not range_m > 0:
        raise DomainError(f"range must be positive, got {range_m!r}")
    st = math.sin(d.theta)
    return Position(range_m * st * math.sin(d.phi),
                    range_m * math.cos(d.theta),
                    range_m * st * math.cos(d.phi))


def angular_distance(a: Direction, b: Direction) -> float:
    """Great-circle angle between two directions."""
    ua, ub = a.unit_vector(), b.unit_vector()
    dot = sum(p * q for p, q in zip(ua, ub))
    cross = (ua[1] * ub[2] - ua[2] * ub[1],
             ua[2] * ub[0] - ua[0] * ub[2],
             ua[0] * ub[1] - ua[1] * ub[0])
    return math.atan2(math.sqrt(sum(c * c for c in cross)), dot)
