"""JSON run configurations: degrees and milliseconds at this boundary only."""
from __future__ import annotations

import json
import math
from dataclasses import fields
from importlib import resources
from pathlib import Path

from . import controlplane as cp
from .codebook import FarFieldPlane, NearFieldFeed, degree_grid
from .errors import DomainError
from .geometry import Direction, RisGeometry
from .simulator import ArcTrajectory, Scenario
from .tracking import SweepConfig, VisionConfig
from .vision import StereoRig
from .wavefield import ElementPattern, LinkBudget


class ConfigError(ValueError):
    pass


def bundled_configs() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("ristrack.configs").iterdir()
                  if p.name.endswith(".json"))


def load_config(ref: str | Path) -> tuple[dict, Path]:
    """Read a config file, falling back to a bundled config of that name."""
    path = Path(ref)
    if not path.exists():
        name = path.name[:-5] if path.name.endswith(".json") else path.name
        if str(ref) == name or str(ref) == name + ".json":
            candidate = resources.files("ristrack.configs") / f"{name}.json"
            if candidate.is_file():
                path = Path(str(candidate))
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {ref}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc, path.parent


class _Section:
    """Typed reads from one config object with unknown-key detection."""

    def __init__(self, doc, where: str, allowed: set[str]):
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError(f"{where}: expected an object")
        unknown = sorted(set(doc) - allowed)
        if unknown:
            raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
        self.doc, self.where = doc, where

    def num(self, key, default=None, positive=False, integer=False):
        if key not in self.doc:
            if default is None:
                raise ConfigError(f"{self.where}.{key}: required")
            return default
        v = self.doc[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.where}.{key}: expected a number, got {v!r}")
        if integer and (not isinstance(v, int)):
            raise ConfigError(f"{self.where}.{key}: expected an integer, got {v!r}")
        if not math.isfinite(v) or (positive and v <= 0):
            raise ConfigError(f"{self.where}.{key}: must be {'positive' if positive else 'finite'}")
        return v

    def get(self, key, default=None):
        return self.doc.get(key, default)

    def section(self, key, allowed):
        return _Section(self.doc.get(key), f"{self.where}.{key}", allowed)


GEOMETRY_KEYS = {"M", "N", "freq_hz", "spacing_over_lambda"}
INCIDENT_KEYS = {"type", "d_feed_m", "d_feed_wavelengths", "theta_tx_deg", "phi_tx_deg"}
GRID_KEYS = {"theta_deg", "phi_deg", "phi_start_deg", "phi_stop_deg", "phi_step_deg"}


def parse_geometry(doc) -> RisGeometry:
    s = _Section(doc, "geometry", GEOMETRY_KEYS)
    try:
        return RisGeometry.from_frequency(s.num("M", 20, positive=True, integer=True),
                                          s.num("N", 20, positive=True, integer=True),
                                          s.num("freq_hz", 5.4e9, positive=True),
                                          s.num("spacing_over_lambda", 0.25, positive=True))
    except DomainError as exc:
        raise ConfigError(f"geometry: {exc}") from None


def parse_incident(doc, geom: RisGeometry, default_type: str = "near"):
    s = _Section(doc, "incident", INCIDENT_KEYS)
    kind = s.get("type", default_type)
    if kind == "near":
        if "d_feed_m" in s.doc:
            return NearFieldFeed(s.num("d_feed_m", positive=True))
        return NearFieldFeed(s.num("d_feed_wavelengths", 3.0, positive=True) * geom.wavelength)
    if kind == "far":
        try:
            return FarFieldPlane(Direction.from_degrees(s.num("theta_tx_deg", 90.0),
                                                        s.num("phi_tx_deg", 0.0)))
        except DomainError as exc:
            raise ConfigError(f"incident: {exc}") from None
    raise ConfigError(f"incident.type: expected 'near' or 'far', got {kind!r}")


def _angle_list(s: _Section, key: str) -> list[float]:
    v = s.doc[key]
    if not isinstance(v, list) or not all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v):
        raise ConfigError(f"{s.where}.{key}: expected a list of numbers")
    if not v:
        raise ConfigError(f"{s.where}.{key}: grid is empty")
    return [math.radians(a) for a in v]


def parse_grid(doc) -> tuple[tuple[float, ...], tuple[float, ...]]:
    s = _Section(doc, "codebook", GRID_KEYS)
    thetas = _angle_list(s, "theta_deg") if "theta_deg" in s.doc else [math.pi / 2]
    if "phi_deg" in s.doc:
        phis = _angle_list(s, "phi_deg")
    else:
        start = s.num("phi_start_deg", -40.0)
        stop = s.num("phi_stop_deg", 40.0)
        step = s.num("phi_step_deg", 1.0)
        if step <= 0:
            raise ConfigError("codebook.phi_step_deg: must be positive")
        if stop < start:
            raise ConfigError("codebook.phi_stop_deg: grid is empty (stop below start)")
        phis = degree_grid(start, stop, step)
    for grid, key in ((thetas, "theta"), (phis, "phi")):
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"codebook.{key}: grid must be strictly increasing")
    try:
        for t in thetas:
            for p in phis:
                Direction(t, p)
    except DomainError as exc:
        raise ConfigError(f"codebook: {exc}") from None
    return tuple(thetas), tuple(phis)


SCENARIO_KEYS = {"case", "policy", "seed", "geometry", "incident", "codebook", "trajectory",
                 "budget", "ris_ue_distance_m", "bs_ris_distance_m", "target_snr_db", "tick_ms",
                 "duration_s", "jitter_db", "element_exponent", "sweep", "vision", "rig", "timing",
                 "policies", "threshold_db", "speeds_deg_s"}
TRAJECTORY_KEYS = {"radius_m", "theta_deg", "phi_start_deg", "phi_end_deg", "speed_deg_s",
                   "phi0_deg", "heading"}
VISION_KEYS = {"latency_s", "refresh_s", "pixel_noise_px", "miss_probability"}
SWEEP_KEYS = {"dwell_ticks", "trigger_drop_db", "local_window"}
RIG_KEYS = {"focal_px", "baseline_m", "width", "height"}
BUDGET_KEYS = {f.name for f in fields(LinkBudget)}
TIMING_KEYS = {f.name for f in fields(cp.TimingModel)}


def parse_scenario(doc: dict, seed: int | None = None) -> Scenario:
    s = _Section(doc, "config", SCENARIO_KEYS)
    case = s.get("case", "I")
    if case not in ("I", "II"):
        raise ConfigError(f"config.case: expected 'I' or 'II', got {case!r}")
    policy = s.get("policy", "vision")
    geom = parse_geometry(s.get("geometry"))
    incident = None  # Scenario picks the per-case default
    if "incident" in s.doc:
        incident = parse_incident(s.get("incident"), geom, "near" if case == "I" else "far")
    thetas, phis = parse_grid(s.get("codebook"))

    t = s.section("trajectory", TRAJECTORY_KEYS)
    v = s.section("vision", VISION_KEYS)
    w = s.section("sweep", SWEEP_KEYS)
    r = s.section("rig", RIG_KEYS)
    b = s.section("budget", BUDGET_KEYS)
    tm = s.section("timing", TIMING_KEYS)
    tick = s.num("tick_ms", 10.0, positive=True) / 1000
    try:
        traj = ArcTrajectory(radius=t.num("radius_m", 2.2, positive=True),
                             theta=math.radians(t.num("theta_deg", 90.0)),
                             phi_start=math.radians(t.num("phi_start_deg", -35.0)),
                             phi_end=math.radians(t.num("phi_end_deg", 35.0)),
                             angular_speed=math.radians(t.num("speed_deg_s", 28.0, positive=True)),
                             phi0=math.radians(t.num("phi0_deg", 0.0)),
                             heading=int(t.num("heading", 1, integer=True)))
        budget = LinkBudget(**{k: (int(b.doc[k]) if k == "subcarriers" else b.num(k))
                               for k in b.doc})
        timing = cp.TimingModel(**{k: tm.num(k, positive=True) for k in tm.doc})
        rig = StereoRig(r.num("focal_px", 700.0, positive=True), r.num("baseline_m", 0.12, positive=True),
                        int(r.num("width", 1280, positive=True, integer=True)),
                        int(r.num("height", 720, positive=True, integer=True)))
        refresh = v.doc.get("refresh_s")
        sc = Scenario(
            case=case, policy=policy, geometry=geom, incident=incident,
            theta_grid=thetas, phi_grid=phis, trajectory=traj, budget=budget,
            ris_ue_distance=s.num("ris_ue_distance_m", traj.radius, positive=True),
            bs_ris_distance=s.num("bs_ris_distance_m", 3.0, positive=True),
            target_snr_db=s.num("target_snr_db", 35.0 if case == "I" else 25.0),
            tick_period=tick,
            duration_ticks=max(1, int(round(s.num("duration_s", 20.0, positive=True) / tick))),
            seed=int(seed if seed is not None else s.num("seed", 0, integer=True)),
            jitter_db=s.num("jitter_db", 0.5),
            element_pattern=ElementPattern(s.num("element_exponent", 0.0)),
            sweep=SweepConfig(int(w.num("dwell_ticks", 1, integer=True)), w.num("trigger_drop_db", 6.0),
                              int(w.num("local_window", 5, integer=True))),
            vision=VisionConfig(v.num("latency_s", 0.085),
                                None if refresh is None else v.num("refresh_s", positive=True)),
            rig=rig,
            pixel_noise=v.num("pixel_noise_px", 1.0),
            miss_probability=v.num("miss_probability", 0.0),
            timing=timing,
        )
        sc.validate()
    except (DomainError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from None
    return sc


PATTERN_KEYS = {"case", "codebook_path", "geometry", "incident", "codebook", "theta_cut_deg",
                "phi_axis", "element_exponent", "indices"}
AXIS_KEYS = {"start_deg", "stop_deg", "step_deg"}
CODEBOOK_CMD_KEYS = {"geometry", "incident", "codebook", "case"}
