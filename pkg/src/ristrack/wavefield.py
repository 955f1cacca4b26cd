"""Scattering pattern, normalized gain and link budget of the surface."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegeneratePatternError, DomainError, ShapeError
from .geometry import Direction, RisGeometry


def wrap_phase(x):
    """Wrap to [-pi, pi)."""
    w = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    # mod can return 2*pi for tiny negative inputs, mapping to +pi
    w = np.where(w >= np.pi, w - 2 * np.pi, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


@dataclass
class ElementStates:
    """Per-element modulation/incident amplitude and phase (M x N arrays)."""

    mod_phase: np.ndarray
    inc_phase: np.ndarray
    mod_amplitude: np.ndarray | None = None
    inc_amplitude: np.ndarray | None = None

    def __post_init__(self):
        self.mod_phase = wrap_phase(np.atleast_2d(np.asarray(self.mod_phase, dtype=float)))
        self.inc_phase = wrap_phase(np.atleast_2d(np.asarray(self.inc_phase, dtype=float)))
        shape = self.mod_phase.shape
        if self.inc_phase.shape != shape:
            raise ShapeError(f"incident phase {self.inc_phase.shape} != modulation phase {shape}")
        if self.mod_amplitude is None:
            self.mod_amplitude = np.ones(shape)
        if self.inc_amplitude is None:
            self.inc_amplitude = np.ones(shape)
        self.mod_amplitude = np.asarray(self.mod_amplitude, dtype=float)
        self.inc_amplitude = np.asarray(self.inc_amplitude, dtype=float)
        for name in ("mod_amplitude", "inc_amplitude"):
            a = getattr(self, name)
            if a.shape != shape:
                raise ShapeError(f"{name} shape {a.shape} != {shape}")
            if np.any(a < 0):
                raise DomainError(f"{name} must be non-negative")

    @property
    def shape(self):
        return self.mod_phase.shape

    def weights(self) -> np.ndarray:
        """Complex per-element excitation A*B*exp(j(alpha+beta))."""
        return (self.mod_amplitude * self.inc_amplitude
                * np.exp(1j * (self.mod_phase + self.inc_phase)))


@dataclass(frozen=True)
class ElementPattern:
    """Unit-cell pattern (sin(theta)cos(phi), clamped at 0) ** q."""

    exponent: float = 0.0

    def __post_init__(self):
        if self.exponent < 0:
            raise DomainError("element pattern exponent must be >= 0")

    def __call__(self, theta, phi):
        if self.exponent == 0:
            return np.ones(np.broadcast(theta, phi).shape)
        base = np.clip(np.sin(theta) * np.cos(phi), 0.0, None)
        return base ** self.exponent


ISOTROPIC = ElementPattern(0.0)


def _field(geom: RisGeometry, states: ElementStates, pattern: ElementPattern,
           theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    if states.shape != (geom.rows, geom.cols):
        raise ShapeError(f"states {states.shape} do not match a {geom.rows}x{geom.cols} array")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    k = geom.phase_step
    w = states.weights()
    # separable sum: rows carry cos(theta), columns carry sin(theta)sin(phi)
    row_ph = np.exp(1j * k * np.multiply.outer(np.cos(theta), geom.row_offsets()))
    col_ph = np.exp(1j * k * np.multiply.outer(np.sin(theta) * np.sin(phi), geom.col_offsets()))
    af = np.einsum("...m,mn,...n->...", row_ph, w, col_ph)
    return pattern(theta, phi) * af


def scattering_field(geom: RisGeometry, states: ElementStates, pattern: ElementPattern,
                     direction: Direction) -> complex:
    """Complex far-field amplitude E(theta, phi) of the surface."""
    return complex(_field(geom, states, pattern, np.float64(direction.theta),
                          np.float64(direction.phi)))


def field_magnitude(geom, states, pattern, theta, phi) -> np.ndarray:
    """|E| on broadcastable arrays of pitch/azimuth (radians)."""
    return np.abs(_field(geom, states, pattern, theta, phi))


def gain_db(magnitude, reference: float | None = None):
    """Normalized gain 20*log10(|E|/|E|max).

    ``reference`` defaults to the maximum of ``magnitude``.
    """
    mag = np.asarray(magnitude, dtype=float)
    if np.any(mag < 0):
        raise DomainError("magnitude must be non-negative")
    ref = float(np.max(mag)) if reference is None else float(reference)
    if not ref > 0:
        raise DegeneratePatternError("reference magnitude is zero")
    with np.errstate(divide="ignore"):
        g = 20 * np.log10(mag / ref)
    return float(g) if g.ndim == 0 else g


@dataclass
class PatternCut:
    """Azimuth cut at fixed pitch."""

    theta: float
    phi: np.ndarray
    magnitude: np.ndarray
    gain_db: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi_deg", "magnitude", "gain_db"])
            for p, m, g in zip(self.phi, self.magnitude, self.gain_db):
                w.writerow([repr(float(np.degrees(p))), repr(float(m)), repr(float(g))])


def pattern_cut(geom: RisGeometry, states: ElementStates, pattern: ElementPattern,
                theta: float, phi_axis: Sequence[float]) -> PatternCut:
    phi = np.asarray(phi_axis, dtype=float)
    if phi.ndim != 1 or phi.size == 0:
        raise DomainError("phi axis must be a non-empty 1-D sequence")
    if np.any(np.diff(phi) <= 0):
        raise DomainError("phi axis must be strictly increasing")
    mag = field_magnitude(geom, states, pattern, np.full_like(phi, theta), phi)
    return PatternCut(theta, phi, mag, gain_db(mag))


@dataclass(frozen=True)
class MainLobe:
    peak: float
    width: float
    censored: bool


def main_lobe(cut: PatternCut, drop_db: float = 3.0) -> MainLobe:
    """Peak azimuth and -3 dB width of the lobe around it.

    Crossings are interpolated linearly in dB. If the lobe runs into either
    end of the axis the width is measured to the boundary and flagged as
    censored.
    """
    phi, g = cut.phi, cut.gain_db
    i = int(np.argmax(g))  # first maximum -> smallest phi on ties
    level = g[i] - drop_db
    censored = i == 0 or i == len(g) - 1

    def edge(step):
        nonlocal censored
        j = i
        while 0 <= j + step < len(g):
            if g[j + step] < level:
                a, b = g[j], g[j + step]
                return phi[j] + (phi[j + step] - phi[j]) * (a - level) / (a - b)
            j += step
        censored = True
        return phi[j]

    lo, hi = edge(-1), edge(+1)
    return MainLobe(float(phi[i]), float(hi - lo), censored)


def fspl_db(wavelength: float, distance: float) -> float:
    """Free-space path loss as a positive dB figure."""
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance!r}")
    return -20 * math.log10(wavelength / (4 * math.pi * distance))


@dataclass
class LinkBudget:
    tx_power_dbm: float = 0.0          # per subcarrier
    tx_antenna_gain_db: float = 7.0
    rx_antenna_gain_db: float = 7.0
    tx_link_gain_db: float = 30.0
    rx_link_gain_db: float = 22.0
    noise_power_dbm: float = 0.0
    subcarriers: int = 52
    snr_calibration_db: float = 0.0

    def __post_init__(self):
        if self.subcarriers < 1:
            raise DomainError("subcarrier count must be >= 1")
        if not math.isfinite(self.noise_power_dbm):
            raise DomainError("noise power must be finite")


def received_snr_db(budget: LinkBudget, g_ris_db: float, path_loss_db: float) -> float:
    terms = (budget.tx_power_dbm, budget.tx_antenna_gain_db, budget.tx_link_gain_db,
             g_ris_db, budget.rx_antenna_gain_db, budget.rx_link_gain_db,
             -path_loss_db, budget.snr_calibration_db, -budget.noise_power_dbm)
    if not all(math.isfinite(t) for t in terms):
        raise DomainError("link budget terms must be finite")
    return sum(terms)


def capacity_bps_hz(snr_db: float | Iterable[float], subcarriers: int = 1) -> float:
    """Sum over subcarriers of log2(1 + snr).

    A scalar ``snr_db`` is applied to all ``subcarriers``; an iterable gives
    one value per subcarrier.
    """
    if subcarriers < 1:
        raise DomainError("subcarrier count must be >= 1")
    snr = np.asarray(snr_db, dtype=float)
    lin = 10 ** (snr / 10)
    if snr.ndim == 0:
        return float(subcarriers * np.log2(1 + lin))
    return float(np.sum(np.log2(1 + lin)))
