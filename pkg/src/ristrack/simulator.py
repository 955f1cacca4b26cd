"""Time-stepped replay of a user moving on an arc in front of the surface.

Each tick advances the trajectory, lets the policy choose a codeword, pushes
that choice through the control-board emulator and evaluates the SNR at the
true user direction.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import controlplane as cp
from .codebook import (Codebook, FarFieldPlane, IncidentModel, NearFieldFeed,
                       degree_grid, generate_codebook)
from .errors import DomainError
from .geometry import Direction, Position, RisGeometry, position_from_direction
from .tracking import (CodebookEvaluator, SweepConfig, SweepPolicy, VisionConfig,
                       VisionPolicy, boresight_index)
from .vision import DetectorOracle, StereoRig, detect, locate, project
from .wavefield import ElementPattern, LinkBudget, capacity_bps_hz, fspl_db, received_snr_db

POLICIES = ("vision", "sweep", "genie", "static")
CASES = ("I", "II")


def ticks_for(seconds: float, tick_period: float) -> int:
    """Whole ticks needed to cover ``seconds`` (ceiling, tolerant of float noise)."""
    return int(math.ceil(round(seconds / tick_period, 9)))


@dataclass(frozen=True)
class ArcTrajectory:
    """Constant-speed back-and-forth motion in azimuth at fixed pitch and range."""

    radius: float = 2.2
    theta: float = math.pi / 2
    phi_start: float = math.radians(-35.0)
    phi_end: float = math.radians(35.0)
    angular_speed: float = math.radians(28.0)
    phi0: float = 0.0          # azimuth at t = 0
    heading: int = 1           # +1 toward phi_end first, -1 toward phi_start

    def __post_init__(self):
        if not self.phi_start < self.phi_end:
            raise DomainError("phi_start must be below phi_end")
        if not self.angular_speed > 0 or not self.radius > 0:
            raise DomainError("angular speed and radius must be positive")
        if not self.phi_start <= self.phi0 <= self.phi_end:
            raise DomainError("initial azimuth outside the arc")
        if self.heading not in (1, -1):
            raise DomainError("heading must be +1 or -1")

    def phi_at(self, t: float) -> float:
        span = self.phi_end - self.phi_start
        # unfold the reflections onto a triangle wave of period 2*span
        s = self.phi0 - self.phi_start
        s = s + self.angular_speed * t if self.heading > 0 else 2 * span - s + self.angular_speed * t
        s = math.fmod(s, 2 * span)
        return self.phi_start + (s if s <= span else 2 * span - s)

    def direction_at(self, t: float) -> Direction:
        return Direction(self.theta, self.phi_at(t))

    def position_at(self, t: float) -> Position:
        return position_from_direction(self.direction_at(t), self.radius)


@dataclass
class Scenario:
    case: str = "I"
    policy: str = "vision"
    geometry: RisGeometry = field(default_factory=RisGeometry)
    incident: IncidentModel | None = None
    theta_grid: tuple[float, ...] = (math.pi / 2,)
    phi_grid: tuple[float, ...] = tuple(degree_grid(-40, 40, 1))
    trajectory: ArcTrajectory = field(default_factory=ArcTrajectory)
    budget: LinkBudget = field(default_factory=LinkBudget)
    ris_ue_distance: float | None = None   # defaults to the trajectory radius
    bs_ris_distance: float | None = 3.0
    target_snr_db: float | None = None     # genie boresight SNR after calibration
    tick_period: float = 0.01
    duration_ticks: int = 2000
    seed: int = 0
    jitter_db: float = 0.5
    element_pattern: ElementPattern = field(default_factory=ElementPattern)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    rig: StereoRig = field(default_factory=StereoRig)
    pixel_noise: float = 1.0
    miss_probability: float = 0.0
    timing: cp.TimingModel = field(default_factory=cp.TimingModel)

    def __post_init__(self):
        if self.incident is None:
            if self.case == "I":
                self.incident = NearFieldFeed(3 * self.geometry.wavelength)
            else:
                self.incident = FarFieldPlane(Direction(math.radians(45.0), 0.0))
        if self.ris_ue_distance is None:
            self.ris_ue_distance = self.trajectory.radius
        if self.target_snr_db is None:
            self.target_snr_db = 35.0 if self.case == "I" else 25.0

    def validate(self) -> None:
        if self.case not in CASES:
            raise DomainError(f"case must be one of {CASES}, got {self.case!r}")
        if self.policy not in POLICIES:
            raise DomainError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.tick_period > 0:
            raise DomainError("tick period must be positive")
        if self.duration_ticks < 1:
            raise DomainError("duration must be at least one tick")
        if not self.ris_ue_distance > 0:
            raise DomainError("RIS-UE distance must be positive")
        if self.case == "II" and not (self.bs_ris_distance and self.bs_ris_distance > 0):
            raise DomainError("case II needs a positive BS-RIS distance")
        if self.jitter_db < 0:
            raise DomainError("SNR jitter sigma must be non-negative")
        if not self.theta_grid or not self.phi_grid:
            raise DomainError("codebook grids must be non-empty")

    def path_loss_db(self) -> float:
        lam = self.geometry.wavelength
        loss = fspl_db(lam, self.ris_ue_distance)
        if self.case == "II":
            loss += fspl_db(lam, self.bs_ris_distance)
        return loss

    def build_codebook(self) -> Codebook:
        return generate_codebook(self.geometry, self.incident, self.theta_grid, self.phi_grid)


@dataclass(frozen=True)
class TraceSample:
    time_ms: float
    true_phi_deg: float
    est_phi_deg: float | None
    codeword_index: int
    snr_db: float
    overhead: bool
    capacity_bps_hz: float


class Engine:
    """Per-scenario precomputation shared by all ticks (and by compare runs)."""

    def __init__(self, scenario: Scenario, book: Codebook | None = None):
        scenario.validate()
        self.scenario = scenario
        self.book = book if book is not None else scenario.build_codebook()
        self.evaluator = CodebookEvaluator(self.book, scenario.element_pattern)
        self.path_loss = scenario.path_loss_db()
        self.norm = float(scenario.geometry.size)
        bore = self.evaluator.magnitudes(Direction(math.pi / 2, 0.0)).max()
        raw = received_snr_db(replace(scenario.budget, snr_calibration_db=0.0),
                              self._gain_db(bore), self.path_loss)
        self.calibration_db = scenario.target_snr_db - raw
        self.budget = replace(scenario.budget, snr_calibration_db=self.calibration_db)

    def _gain_db(self, magnitude: float) -> float:
        # relative to the ideal coherent sum of M*N unit phasors
        return 20 * math.log10(max(magnitude, 1e-300) / self.norm)

    def snr_db(self, magnitude: float) -> float:
        return received_snr_db(self.budget, self._gain_db(magnitude), self.path_loss)


def run(scenario: Scenario, engine: Engine | None = None) -> list[TraceSample]:
    sc = scenario
    eng = engine if engine is not None else Engine(sc)
    book, ev = eng.book, eng.evaluator
    dt = sc.tick_period
    n = sc.duration_ticks
    jitter = np.random.default_rng([sc.seed, 1]).normal(0.0, 1.0, n) * sc.jitter_db
    oracle = DetectorOracle(sc.pixel_noise, sc.miss_probability, sc.vision.latency, sc.seed)
    latency_ticks = ticks_for(sc.vision.latency, dt)
    refresh_ticks = max(1, ticks_for(sc.vision.period, dt))

    board = cp.BoardState(sc.geometry.rows, sc.geometry.cols,
                          flash_capacity=max(1024, len(book)))
    cp.apply_frame(board, cp.download_frame([e.bits for e in book.entries]), sc.timing)
    active = boresight_index(book)
    cp.apply_frame(board, cp.index_frame(active), sc.timing)
    commanded = active
    switch_at: int | None = None   # tick at which the commanded codeword takes effect

    vision = VisionPolicy(book, active) if sc.policy == "vision" else None
    sweep = SweepPolicy(book, sc.sweep) if sc.policy == "sweep" else None
    measured: float | None = None
    trace = []
    for t in range(n):
        now = t * dt
        true_dir = sc.trajectory.direction_at(now)
        overhead = False
        if vision is not None:
            if t % refresh_ticks == 0:
                est = _camera_estimate(sc, oracle, sc.trajectory.position_at(now), t)
                if est is not None:
                    vision.submit(est, (t + latency_ticks) * dt)
            choice, overhead = vision.step(now)
        elif sweep is not None:
            choice, overhead = sweep.step(measured)
        elif sc.policy == "genie":
            choice = ev.best(true_dir)
        else:
            choice = boresight_index(book)

        if choice != commanded:
            _, lat = cp.apply_frame(board, cp.index_frame(choice), sc.timing)
            commanded = choice
            switch_at = t + (ticks_for(lat, dt) if lat > dt else 0)
        if switch_at is not None and t >= switch_at:
            active, switch_at = commanded, None

        mag = ev.magnitudes(true_dir)[active]
        snr = float(eng.snr_db(mag) + jitter[t])
        measured = snr
        cap = 0.0 if overhead else float(capacity_bps_hz(snr, sc.budget.subcarriers))
        est_phi = None
        if vision is not None and vision.last_estimate is not None:
            est_phi = math.degrees(vision.last_estimate.phi)
        trace.append(TraceSample(round(now * 1000, 6), math.degrees(true_dir.phi), est_phi,
                                 int(active), snr, bool(overhead), cap))
    return trace


def _camera_estimate(sc: Scenario, oracle: DetectorOracle, pos: Position, tick: int) -> Direction | None:
    try:
        obs = project(sc.rig, pos)
    except DomainError:
        return None
    boxes = detect(oracle, sc.rig, obs, tick)
    if boxes is None:
        return None
    try:
        return locate(sc.rig, boxes)[0]
    except DomainError:
        return None


TRACE_COLUMNS = ("time_ms", "true_phi_deg", "est_phi_deg", "codeword_index",
                 "snr_db", "overhead", "capacity_bps_hz")


def write_trace_csv(trace: Sequence[TraceSample], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for s in trace:
            w.writerow([repr(s.time_ms), repr(s.true_phi_deg),
                        "" if s.est_phi_deg is None else repr(s.est_phi_deg),
                        s.codeword_index, repr(s.snr_db), int(s.overhead), repr(s.capacity_bps_hz)])


def read_trace_csv(path) -> list[TraceSample]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TraceSample(float(row["time_ms"]), float(row["true_phi_deg"]),
                                   float(row["est_phi_deg"]) if row["est_phi_deg"] else None,
                                   int(row["codeword_index"]), float(row["snr_db"]),
                                   row["overhead"] == "1", float(row["capacity_bps_hz"])))
    return out


# -- analysis --------------------------------------------------------------------

def snr_array(trace: Sequence[TraceSample]) -> np.ndarray:
    return np.array([s.snr_db for s in trace])


def overhead_episodes(trace: Sequence[TraceSample], reference: Sequence[TraceSample] | None = None):
    """Contiguous overhead runs as (start, stop, worst deficit vs reference in dB)."""
    flags = [s.overhead for s in trace]
    snr = snr_array(trace)
    ref = snr_array(reference) if reference is not None else None
    episodes, i = [], 0
    while i < len(flags):
        if flags[i]:
            j = i
            while j < len(flags) and flags[j]:
                j += 1
            worst = float(np.max(ref[i:j] - snr[i:j])) if ref is not None else float("nan")
            episodes.append((i, j, worst))
            i = j
        else:
            i += 1
    return episodes


def policy_summary(trace, genie=None, threshold_db: float | None = None) -> dict:
    snr = snr_array(trace)
    over = np.array([s.overhead for s in trace])
    out = {
        "ticks": len(trace),
        "snr_db": {"min": float(snr.min()), "p5": float(np.percentile(snr, 5)),
                   "p50": float(np.percentile(snr, 50)), "p95": float(np.percentile(snr, 95)),
                   "max": float(snr.max()), "mean": float(snr.mean())},
        "overhead_fraction": float(over.mean()),
        "mean_capacity_bps_hz": float(np.mean([s.capacity_bps_hz for s in trace])),
    }
    if threshold_db is not None:
        out["threshold_db"] = threshold_db
        out["time_below_threshold_fraction"] = float(np.mean(snr < threshold_db))
    if genie is not None:
        deficit = snr_array(genie) - snr
        eps = overhead_episodes(trace, genie)
        out["within_3db_of_genie_fraction"] = float(np.mean(deficit <= 3.0))
        out["deficit_3db_fraction"] = float(np.mean(deficit >= 3.0))
        out["max_deficit_db"] = float(deficit.max())
        out["overhead_episodes"] = len(eps)
        out["overhead_episodes_6db"] = sum(1 for e in eps if e[2] >= 6.0)
    return out


def compare(base: Scenario, policies: Sequence[str] = ("vision", "sweep"),
            threshold_db: float | None = None) -> dict:
    """Run each policy on the same seed and trajectory, genie as reference."""
    eng = Engine(replace(base, policy="genie"))
    traces = {"genie": run(replace(base, policy="genie"), eng)}
    for p in policies:
        if p not in traces:
            traces[p] = run(replace(base, policy=p), eng)
    if threshold_db is None:
        threshold_db = base.target_snr_db - 6.0
    report = {
        "case": base.case,
        "seed": base.seed,
        "ticks": base.duration_ticks,
        "tick_ms": base.tick_period * 1000,
        "calibration_db": eng.calibration_db,
        "policies": {p: policy_summary(tr, traces["genie"], threshold_db)
                     for p, tr in traces.items() if p in policies or p == "genie"},
    }
    report["_traces"] = traces
    return report


def breakdown_sweep(base: Scenario, speeds_deg_s: Sequence[float], policy: str = "vision",
                    loss_fraction: float = 0.10, deficit_db: float = 3.0) -> dict:
    """Lock-loss fraction (ticks >= ``deficit_db`` below genie) per angular speed."""
    rows = []
    eng = Engine(replace(base, policy="genie"))
    for v in sorted(speeds_deg_s):
        traj = replace(base.trajectory, angular_speed=math.radians(v))
        sc = replace(base, trajectory=traj)
        genie = snr_array(run(replace(sc, policy="genie"), eng))
        snr = snr_array(run(replace(sc, policy=policy), eng))
        frac = float(np.mean(genie - snr >= deficit_db))
        rows.append({"speed_deg_s": v, "lock_loss_fraction": frac, "lock_held": frac < loss_fraction})
    lost = [r["speed_deg_s"] for r in rows if not r["lock_held"]]
    first_lost = lost[0] if lost else None
    held_below = [r["speed_deg_s"] for r in rows
                  if r["lock_held"] and (first_lost is None or r["speed_deg_s"] < first_lost)]
    return {
        "policy": policy,
        "deficit_db": deficit_db,
        "loss_fraction": loss_fraction,
        "speeds": rows,
        "first_lost_speed_deg_s": first_lost,
        "transition_bracket_deg_s": [held_below[-1] if held_below else None, first_lost],
    }


def dumps_report(report: dict) -> str:
    return json.dumps({k: v for k, v in report.items() if not k.startswith("_")},
                      indent=2, sort_keys=True)
