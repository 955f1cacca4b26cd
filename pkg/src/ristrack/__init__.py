"""Simulation toolkit for camera-aided beam tracking with a 1-bit reconfigurable surface."""

from .codebook import (Codebook, Codeword, FarFieldPlane, NearFieldFeed, generate_codebook,
                       generate_codeword, nearest_codeword)
from .geometry import Direction, Position, RisGeometry, direction_from_position, position_from_direction
from .simulator import ArcTrajectory, Scenario, breakdown_sweep, compare, run

__version__ = "0.1.0"
