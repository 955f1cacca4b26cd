"""1-bit codeword synthesis, codebook lookup and the codebook file format.

Bit "0" drives an element to modulation phase +pi/2, bit "1" to -pi/2.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DomainError
from .geometry import Direction, RisGeometry, SPEED_OF_LIGHT
from .wavefield import ISOTROPIC, ElementPattern, ElementStates, field_magnitude, wrap_phase

PHASE_BIT0 = math.pi / 2
PHASE_BIT1 = -math.pi / 2
EXHAUSTIVE_LIMIT = 16


@dataclass(frozen=True)
class NearFieldFeed:
    """Feed horn on the boresight axis at ``d_feed`` meters."""

    d_feed: float

    def __post_init__(self):
        if not self.d_feed > 0:
            raise DomainError("feed distance must be positive")


@dataclass(frozen=True)
class FarFieldPlane:
    """Plane wave arriving from ``tx_direction``."""

    tx_direction: Direction = Direction(math.pi / 2, 0.0)


IncidentModel = Union[NearFieldFeed, FarFieldPlane]


def _check_index(geom: RisGeometry, m: int, n: int) -> None:
    if not (1 <= m <= geom.rows and 1 <= n <= geom.cols):
        raise DomainError(f"element ({m}, {n}) outside a {geom.rows}x{geom.cols} array")


def incident_phase_near(geom: RisGeometry, d_feed: float, m: int, n: int) -> float:
    _check_index(geom, m, n)
    if not d_feed > 0:
        raise DomainError("feed distance must be positive")
    d = geom.spacing
    k = 2 * math.pi / geom.wavelength
    r = math.sqrt((d * ((geom.rows + 1) / 2 - m)) ** 2
                  + (d * (n - (1 + geom.cols) / 2)) ** 2 + d_feed ** 2)
    return wrap_phase(k * d_feed - k * r)


def incident_phase_far(geom: RisGeometry, tx: Direction, m: int, n: int) -> float:
    _check_index(geom, m, n)
    k = geom.phase_step
    return wrap_phase(k * ((geom.rows + 1) / 2 - m) * math.cos(tx.theta)
                      + k * (n - (1 + geom.cols) / 2) * math.sin(tx.theta) * math.sin(tx.phi))


def incident_phases(geom: RisGeometry, incident: IncidentModel) -> np.ndarray:
    """M x N matrix of incident phases, wrapped to [-pi, pi)."""
    rows = geom.row_offsets()[:, None]
    cols = geom.col_offsets()[None, :]
    if isinstance(incident, NearFieldFeed):
        k = 2 * math.pi / geom.wavelength
        d = geom.spacing
        r = np.sqrt((d * rows) ** 2 + (d * cols) ** 2 + incident.d_feed ** 2)
        return wrap_phase(k * incident.d_feed - k * r)
    if isinstance(incident, FarFieldPlane):
        t = incident.tx_direction
        k = geom.phase_step
        return wrap_phase(k * rows * math.cos(t.theta)
                          + k * cols * math.sin(t.theta) * math.sin(t.phi))
    raise TypeError(f"unknown incident model {incident!r}")


def steering_phases(geom: RisGeometry, desired: Direction) -> np.ndarray:
    """Geometric phase of each element toward ``desired`` (unwrapped)."""
    k = geom.phase_step
    return (k * geom.row_offsets()[:, None] * math.cos(desired.theta)
            + k * geom.col_offsets()[None, :] * math.sin(desired.theta) * math.sin(desired.phi))


def optimal_phase(geom: RisGeometry, desired: Direction, beta) -> np.ndarray | float:
    """Continuous modulation phase that co-phases every element at ``desired``.

    ``beta`` is either the full M x N incident-phase matrix or, together with
    a scalar result, a single element given as ``(m, n, beta_mn)``.
    """
    if isinstance(beta, tuple):
        m, n, b = beta
        _check_index(geom, m, n)
        k = geom.phase_step
        return wrap_phase(-k * ((geom.rows + 1) / 2 - m) * math.cos(desired.theta)
                          - k * (n - (1 + geom.cols) / 2) * math.sin(desired.theta) * math.sin(desired.phi)
                          - b)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (geom.rows, geom.cols):
        raise DomainError(f"beta shape {beta.shape} != {(geom.rows, geom.cols)}")
    return wrap_phase(-steering_phases(geom, desired) - beta)


# cos(pi/2) is ~6e-17 in floating point; phases this close to the 0 / -pi
# boundaries are treated as sitting exactly on them
BOUNDARY_SNAP = 1e-9


def quantize_1bit(alpha):
    """Map a phase onto the two element states: [0, pi) -> +pi/2, [-pi, 0) -> -pi/2."""
    a = np.asarray(wrap_phase(alpha))
    a = np.where(np.abs(a) < BOUNDARY_SNAP, 0.0, a)
    a = np.where(np.abs(a + np.pi) < BOUNDARY_SNAP, -np.pi, a)
    q = np.where(np.asarray(a) >= 0, PHASE_BIT0, PHASE_BIT1)
    return float(q) if np.ndim(q) == 0 else q


@dataclass
class Codeword:
    bits: np.ndarray
    desired: Direction
    incident: IncidentModel

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise DomainError("codeword bits must be a 2-D matrix")

    def mod_phases(self) -> np.ndarray:
        return np.where(self.bits, PHASE_BIT1, PHASE_BIT0)

    def states(self, geom: RisGeometry) -> ElementStates:
        return ElementStates(self.mod_phases(), incident_phases(geom, self.incident))

    def rows_as_strings(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self.bits]

    def __eq__(self, other):
        if not isinstance(other, Codeword):
            return NotImplemented
        return (np.array_equal(self.bits, other.bits) and self.desired == other.desired
                and self.incident == other.incident)


def generate_codeword(geom: RisGeometry, incident: IncidentModel, desired: Direction) -> Codeword:
    beta = incident_phases(geom, incident)
    alpha = optimal_phase(geom, desired, beta)
    return Codeword(quantize_1bit(alpha) == PHASE_BIT1, desired, incident)


@dataclass
class Codebook:
    geometry: RisGeometry
    incident: IncidentModel
    entries: list[Codeword]
    theta_grid: tuple[float, ...]
    phi_grid: tuple[float, ...]
    _units: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.entries:
            raise DomainError("codebook has no entries")
        if len(self.entries) != len(self.theta_grid) * len(self.phi_grid):
            raise DomainError("one entry per (theta, phi) lattice point required")
        for grid in (self.theta_grid, self.phi_grid):
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise DomainError("angle grids must be strictly increasing")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i) -> Codeword:
        return self.entries[i]

    @property
    def directions(self) -> list[Direction]:
        return [e.desired for e in self.entries]

    def unit_vectors(self) -> np.ndarray:
        if self._units is None:
            self._units = np.array([d.unit_vector() for d in self.directions])
        return self._units

    def index_of(self, direction: Direction) -> int:
        return nearest_codeword(self, direction)[0]


def generate_codebook(geom: RisGeometry, incident: IncidentModel,
                      theta_grid: Sequence[float], phi_grid: Sequence[float]) -> Codebook:
    """One codeword per (theta, phi) lattice point, theta-major."""
    if len(theta_grid) == 0 or len(phi_grid) == 0:
        raise DomainError("codebook grids must be non-empty")
    entries = [generate_codeword(geom, incident, Direction(t, p))
               for t in theta_grid for p in phi_grid]
    return Codebook(geom, incident, entries, tuple(theta_grid), tuple(phi_grid))


def degree_grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive degree range converted to radians, free of float drift."""
    if step <= 0:
        raise DomainError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count < 1:
        raise DomainError(f"empty grid {start}..{stop} step {step}")
    return [math.radians(round(start + i * step, 9)) for i in range(count)]


def nearest_codeword(book: Codebook, estimate: Direction) -> tuple[int, Codeword]:
    """Entry closest in great-circle angle; ties go to the lower index."""
    u = np.array(estimate.unit_vector())
    units = book.unit_vectors()
    cross = np.linalg.norm(np.cross(units, u), axis=1)
    ang = np.arctan2(cross, units @ u)
    best = ang.min()
    idx = int(np.flatnonzero(ang <= best + 1e-12)[0])
    return idx, book.entries[idx]


def exhaustive_best_codeword(geom: RisGeometry, incident: IncidentModel, desired: Direction,
                             pattern: ElementPattern = ISOTROPIC,
                             limit: int = EXHAUSTIVE_LIMIT) -> Codeword:
    """Brute-force the bit matrix that maximizes |E| at ``desired``.

    Ties (every codeword ties with its complement) resolve to the
    lexicographically smallest row-major bit string.
    """
    size = geom.size
    if size > limit:
        raise DomainError(f"exhaustive search over 2^{size} codewords refused (limit {limit} elements)")
    beta = incident_phases(geom, incident).ravel()
    k = geom.phase_step
    geo = (k * np.outer(geom.row_offsets(), np.ones(geom.cols)) * math.cos(desired.theta)
           + k * np.outer(np.ones(geom.rows), geom.col_offsets())
           * math.sin(desired.theta) * math.sin(desired.phi)).ravel()
    base = np.exp(1j * (beta + geo))
    # row i of `all_bits` is the i-th string in lexicographic order
    all_bits = np.array(list(itertools.product((False, True), repeat=size)), dtype=bool)
    phases = np.where(all_bits, PHASE_BIT1, PHASE_BIT0)
    mags = np.abs(np.exp(1j * phases) @ base) * float(pattern(desired.theta, desired.phi))
    best = mags.max()
    i = int(np.flatnonzero(mags >= best * (1 - 1e-12))[0])
    return Codeword(all_bits[i].reshape(geom.rows, geom.cols), desired, incident)


def codeword_gain(geom: RisGeometry, word: Codeword, direction: Direction,
                  pattern: ElementPattern = ISOTROPIC) -> float:
    """|E| of ``word`` toward ``direction``."""
    return float(field_magnitude(geom, word.states(geom), pattern, direction.theta, direction.phi))


# -- file format ---------------------------------------------------------------

class CodebookParseError(ValueError):
    pass


def _incident_to_dict(inc: IncidentModel) -> dict:
    if isinstance(inc, NearFieldFeed):
        return {"type": "near", "d_feed_m": inc.d_feed}
    t, p = inc.tx_direction.degrees
    return {"type": "far", "theta_tx_deg": t, "phi_tx_deg": p}


def codebook_to_dict(book: Codebook) -> dict:
    g = book.geometry
    return {
        "M": g.rows,
        "N": g.cols,
        "spacing_over_lambda": g.spacing_over_lambda,
        "freq_hz": g.freq_hz,
        "wavelength_m": g.wavelength,
        "incident": _incident_to_dict(book.incident),
        "entries": [{"theta_deg": math.degrees(e.desired.theta),
                     "phi_deg": math.degrees(e.desired.phi),
                     "bits": e.rows_as_strings()} for e in book.entries],
    }


def dumps_codebook(book: Codebook) -> str:
    return json.dumps(codebook_to_dict(book), indent=1)


def save_codebook(book: Codebook, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_codebook(book))
        fh.write("\n")


def _need(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise CodebookParseError(f"{where}: missing field '{key}'")
    val = obj[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise CodebookParseError(f"{where}.{key}: expected {kind.__name__}, got {type(val).__name__}")
    return val


def codebook_from_dict(doc: dict) -> Codebook:
    M = _need(doc, "M", int, "codebook")
    N = _need(doc, "N", int, "codebook")
    s = _need(doc, "spacing_over_lambda", float, "codebook")
    if "wavelength_m" in doc:
        lam = _need(doc, "wavelength_m", float, "codebook")
    else:
        lam = SPEED_OF_LIGHT / _need(doc, "freq_hz", float, "codebook")
    try:
        geom = RisGeometry(M, N, s * lam, lam)
    except DomainError as exc:
        raise CodebookParseError(f"codebook: {exc}") from None
    inc = _need(doc, "incident", dict, "codebook")
    kind = _need(inc, "type", str, "incident")
    try:
        if kind == "near":
            incident = NearFieldFeed(_need(inc, "d_feed_m", float, "incident"))
        elif kind == "far":
            incident = FarFieldPlane(Direction.from_degrees(
                _need(inc, "theta_tx_deg", float, "incident"),
                _need(inc, "phi_tx_deg", float, "incident")))
        else:
            raise CodebookParseError(f"incident.type: unknown value {kind!r}")
    except DomainError as exc:
        raise CodebookParseError(f"incident: {exc}") from None

    raw = _need(doc, "entries", list, "codebook")
    if not raw:
        raise CodebookParseError("codebook.entries: empty")
    entries, thetas, phis = [], [], []
    for i, e in enumerate(raw):
        where = f"entries[{i}]"
        t = _need(e, "theta_deg", float, where)
        p = _need(e, "phi_deg", float, where)
        rows = _need(e, "bits", list, where)
        if len(rows) != M:
            raise CodebookParseError(f"{where}.bits: expected {M} rows, got {len(rows)}")
        for r, row in enumerate(rows):
            if not isinstance(row, str) or len(row) != N or set(row) - {"0", "1"}:
                raise CodebookParseError(f"{where}.bits[{r}]: expected {N} characters of '0'/'1'")
        try:
            d = Direction.from_degrees(t, p)
        except DomainError as exc:
            raise CodebookParseError(f"{where}: {exc}") from None
        bits = np.array([[c == "1" for c in row] for row in rows], dtype=bool)
        entries.append(Codeword(bits, d, incident))
        if d.theta not in thetas:
            thetas.append(d.theta)
        if d.phi not in phis:
            phis.append(d.phi)
    try:
        return Codebook(geom, incident, entries, tuple(thetas), tuple(phis))
    except DomainError as exc:
        raise CodebookParseError(f"entries: {exc}") from None


def loads_codebook(text: str) -> Codebook:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CodebookParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise CodebookParseError("codebook: top level must be an object")
    return codebook_from_dict(doc)


def load_codebook(path) -> Codebook:
    with open(path) as fh:
        return loads_codebook(fh.read())
