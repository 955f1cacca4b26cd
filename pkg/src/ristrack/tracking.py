"""Beam-tracking policies: camera-aided, beam sweeping, genie and static."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .codebook import Codebook, nearest_codeword
from .errors import DomainError
from .geometry import Direction
from .wavefield import ISOTROPIC, ElementPattern

BORESIGHT = Direction(math.pi / 2, 0.0)


@dataclass(frozen=True)
class SweepConfig:
    dwell_ticks: int = 1
    trigger_drop_db: float = 6.0
    local_window: int = 5

    def __post_init__(self):
        if self.dwell_ticks < 1 or self.local_window < 1 or not self.trigger_drop_db > 0:
            raise DomainError("dwell_ticks >= 1, local_window >= 1 and trigger_drop_db > 0 required")


@dataclass(frozen=True)
class VisionConfig:
    latency: float = 0.085
    refresh_period: float | None = None  # defaults to the latency

    def __post_init__(self):
        if self.latency < 0:
            raise DomainError("latency must be non-negative")
        if self.refresh_period is not None and not self.refresh_period > 0:
            raise DomainError("refresh period must be positive")

    @property
    def period(self) -> float:
        return self.refresh_period if self.refresh_period is not None else max(self.latency, 1e-12)


class CodebookEvaluator:
    """|E| of every codebook entry toward a direction, evaluated jointly."""

    def __init__(self, book: Codebook, pattern: ElementPattern = ISOTROPIC):
        self.book = book
        self.pattern = pattern
        g = book.geometry
        self._weights = np.stack([e.states(g).weights() for e in book.entries])
        self._rows = g.phase_step * g.row_offsets()
        self._cols = g.phase_step * g.col_offsets()

    def magnitudes(self, direction: Direction) -> np.ndarray:
        t, p = direction.theta, direction.phi
        row = np.exp(1j * self._rows * math.cos(t))
        col = np.exp(1j * self._cols * math.sin(t) * math.sin(p))
        af = (self._weights @ col) @ row
        return np.abs(af) * float(self.pattern(t, p))

    def best(self, direction: Direction) -> int:
        mags = self.magnitudes(direction)
        # tolerance keeps mirror-image ties on the lower index
        return int(np.flatnonzero(mags >= mags.max() * (1 - 1e-12))[0])


def boresight_index(book: Codebook) -> int:
    return nearest_codeword(book, BORESIGHT)[0]


def genie_policy_step(book: Codebook, true_direction: Direction,
                      evaluator: CodebookEvaluator | None = None) -> int:
    """Entry with the largest |E| toward the true user direction."""
    if evaluator is None:
        evaluator = CodebookEvaluator(book)
    return evaluator.best(true_direction)


def static_policy_step(book: Codebook) -> int:
    return boresight_index(book)


class VisionPolicy:
    """Switches to the nearest codeword whenever a delayed camera estimate matures.

    Missed detections simply submit nothing, so the current codeword is held.
    """

    def __init__(self, book: Codebook, initial_index: int | None = None):
        self.book = book
        self.active = boresight_index(book) if initial_index is None else initial_index
        self.pending: deque[tuple[float, Direction]] = deque()
        self.last_estimate: Direction | None = None

    def submit(self, estimate: Direction, ready_at: float) -> None:
        self.pending.append((ready_at, estimate))

    def step(self, now: float) -> tuple[int, bool]:
        matured = None
        while self.pending and self.pending[0][0] <= now + 1e-9:
            matured = self.pending.popleft()[1]
        if matured is not None:
            self.last_estimate = matured
            self.active = nearest_codeword(self.book, matured)[0]
        return self.active, False


@dataclass
class PolicyState:
    active: int
    mode: str = "full"            # "full" | "local" | "tracking"
    max_snr_db: float = -math.inf
    candidates: list[int] = field(default_factory=list)
    cursor: int = 0               # next candidate slot (counts dwell ticks)
    readings: dict[int, list[float]] = field(default_factory=dict)
    last: tuple[str, int] | None = None  # what was applied on the previous tick


class SweepPolicy:
    """Full sweep at start, then a local re-sweep whenever the fed-back SNR
    drops ``trigger_drop_db`` below the best SNR seen since the last lock.

    ``measured_snr_db`` passed to :meth:`step` is the UE's reading for the
    codeword applied on the previous tick.
    """

    def __init__(self, book: Codebook, cfg: SweepConfig = SweepConfig()):
        self.book = book
        self.cfg = cfg
        self.state = PolicyState(active=boresight_index(book))
        self._start_sweep("full", list(range(len(book))))

    def _start_sweep(self, mode: str, candidates: list[int]) -> None:
        s = self.state
        s.mode, s.candidates, s.cursor, s.readings = mode, candidates, 0, {}

    def _sweep_step(self) -> tuple[int, bool]:
        s = self.state
        dwell = self.cfg.dwell_ticks
        if s.cursor < len(s.candidates) * dwell:
            idx = s.candidates[s.cursor // dwell]
            s.last = ("sweep", idx)
            s.cursor += 1
            return idx, True
        means = {i: float(np.mean(v)) for i, v in s.readings.items()}
        best = max(s.candidates, key=lambda i: (means.get(i, -math.inf), -i))
        s.active, s.mode, s.max_snr_db = best, "tracking", means.get(best, -math.inf)
        s.last = ("track", best)
        return best, False

    def step(self, measured_snr_db: float | None) -> tuple[int, bool]:
        s = self.state
        if measured_snr_db is not None and s.last is not None:
            kind, idx = s.last
            if kind == "sweep":
                s.readings.setdefault(idx, []).append(measured_snr_db)
            elif s.mode == "tracking":
                if measured_snr_db < s.max_snr_db - self.cfg.trigger_drop_db:
                    w = self.cfg.local_window
                    lo, hi = max(0, s.active - w), min(len(self.book) - 1, s.active + w)
                    self._start_sweep("local", list(range(lo, hi + 1)))
                else:
                    s.max_snr_db = max(s.max_snr_db, measured_snr_db)
        if s.mode != "tracking":
            return self._sweep_step()
        s.last = ("track", s.active)
        return s.active, False

