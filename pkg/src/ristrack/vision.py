"""Stereo rig model, detection oracle and camera-based direction estimate.

The rig sits at the RIS origin with its two cameras displaced by -b/2 and
+b/2 along x. Image y grows downward while world y grows upward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import Direction, Position, direction_from_position

# nominal physical size of the tracked UE, used only to size detection boxes
UE_WIDTH_M = 0.3
UE_HEIGHT_M = 0.5


class BehindCameraError(DomainError):
    pass


class OutOfViewError(DomainError):
    pass


class NoDepthError(DomainError):
    pass


@dataclass(frozen=True)
class StereoRig:
    focal_px: float = 700.0
    baseline: float = 0.12
    width: int = 1280
    height: int = 720
    left_principal: tuple[float, float] | None = None
    right_principal: tuple[float, float] | None = None

    def __post_init__(self):
        if not (self.focal_px > 0 and self.baseline > 0):
            raise DomainError("focal length and baseline must be positive")
        center = (self.width / 2, self.height / 2)
        if self.left_principal is None:
            object.__setattr__(self, "left_principal", center)
        if self.right_principal is None:
            object.__setattr__(self, "right_principal", center)
        for pp in (self.left_principal, self.right_principal):
            if not self.in_image(*pp):
                raise DomainError(f"principal point {pp} outside the image")

    def in_image(self, u: float, v: float) -> bool:
        return 0.0 <= u <= self.width and 0.0 <= v <= self.height


@dataclass(frozen=True)
class StereoObservation:
    left: tuple[float, float]
    right: tuple[float, float]


@dataclass(frozen=True)
class DetectionBox:
    xc: float
    yc: float
    w: float
    h: float
    confidence: float = 1.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise DomainError("box width and height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise DomainError("confidence must lie in [0, 1]")


@dataclass(frozen=True)
class DetectorOracle:
    """Stand-in for the neural detector: true point + Gaussian pixel noise.

    Randomness is drawn from a generator keyed on (seed, tick), so a given
    tick always yields the same detection regardless of call order.
    """

    pixel_noise_sigma: float = 1.0
    miss_probability: float = 0.0
    latency: float = 0.085
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.miss_probability <= 1.0:
            raise DomainError("miss probability must lie in [0, 1]")
        if self.latency < 0 or self.pixel_noise_sigma < 0:
            raise DomainError("latency and noise sigma must be non-negative")


def project(rig: StereoRig, p: Position) -> StereoObservation:
    if p.z <= 0:
        raise BehindCameraError(f"z={p.z!r}: point is behind the rig")
    f, b = rig.focal_px, rig.baseline
    xl, yl = rig.left_principal
    xr, yr = rig.right_principal
    left = (xl + f * (p.x + b / 2) / p.z, yl - f * p.y / p.z)
    right = (xr + f * (p.x - b / 2) / p.z, yr - f * p.y / p.z)
    if not (rig.in_image(*left) and rig.in_image(*right)):
        raise OutOfViewError(f"{p} projects outside the image")
    return StereoObservation(left, right)


def disparity(obs: StereoObservation, rig: StereoRig) -> float:
    return (obs.left[0] - rig.left_principal[0]) + (rig.right_principal[0] - obs.right[0])


def depth(rig: StereoRig, disp: float) -> float:
    if not disp > 0:
        raise NoDepthError(f"disparity {disp!r} gives no finite depth")
    return rig.focal_px * rig.baseline / disp


def estimate_direction(rig: StereoRig, box: DetectionBox, z: float,
                       right_box: DetectionBox | None = None) -> tuple[Direction, Position]:
    """Back-project a detection at depth ``z`` into the RIS frame.

    With only the left box the half-baseline offset of the left camera is
    removed explicitly; with both boxes their back-projections are averaged,
    which lands on the rig center.
    """
    if not z > 0:
        raise DomainError("depth must be positive")
    f, b = rig.focal_px, rig.baseline
    xl, yl = rig.left_principal
    x = (box.xc - xl) * z / f - b / 2
    y = -(box.yc - yl) * z / f
    if right_box is not None:
        xr, yr = rig.right_principal
        x = 0.5 * (x + (right_box.xc - xr) * z / f + b / 2)
        y = 0.5 * (y - (right_box.yc - yr) * z / f)
    p = Position(x, y, z)
    return direction_from_position(p), p


def _box_size(rig: StereoRig, obs: StereoObservation) -> tuple[float, float]:
    d = disparity(obs, rig)
    z = depth(rig, d) if d > 0 else 10.0
    return rig.focal_px * UE_WIDTH_M / z, rig.focal_px * UE_HEIGHT_M / z


def detect(oracle: DetectorOracle, rig: StereoRig, true_obs: StereoObservation,
           tick: int) -> tuple[DetectionBox, DetectionBox] | None:
    """Noisy detection boxes in both images, or None on a miss."""
    rng = np.random.default_rng([oracle.seed, tick, 0xD37EC7])
    miss = rng.random() < oracle.miss_probability
    noise = rng.normal(0.0, 1.0, size=4) * oracle.pixel_noise_sigma
    if miss:
        return None
    w, h = _box_size(rig, true_obs)
    boxes = []
    for (u, v), (du, dv) in zip((true_obs.left, true_obs.right), (noise[:2], noise[2:])):
        u = min(max(u + du, 0.0), float(rig.width))
        v = min(max(v + dv, 0.0), float(rig.height))
        boxes.append(DetectionBox(u, v, w, h))
    return boxes[0], boxes[1]


def locate(rig: StereoRig, boxes: tuple[DetectionBox, DetectionBox]) -> tuple[Direction, Position]:
    """Full stereo chain on a detection pair: disparity, depth, direction."""
    left, right = boxes
    obs = StereoObservation((left.xc, left.yc), (right.xc, right.yc))
    z = depth(rig, disparity(obs, rig))
    return estimate_direction(rig, left, z, right_box=right)
