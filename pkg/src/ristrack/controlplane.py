"""Byte-level emulator of the two-FPGA surface control board.

Frame layout::

    A5 | opcode | length (u16, big-endian) | payload | CRC-8

The CRC (polynomial 0x07, init 0x00) covers opcode, length and payload.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

SOF = 0xA5
MAX_PAYLOAD = 0xFFFF


class Opcode(IntEnum):
    INDEX = 0x01
    DYNAMIC = 0x02
    DOWNLOAD = 0x03


class FrameError(ValueError):
    pass


class BadSof(FrameError):
    pass


class LengthMismatch(FrameError):
    pass


class CrcMismatch(FrameError):
    pass


class UnknownOpcode(FrameError):
    pass


class IndexOutOfRange(FrameError):
    pass


class PayloadSizeError(FrameError):
    pass


class FlashFull(FrameError):
    pass


def _crc8_table(poly: int = 0x07) -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return table


_CRC8 = _crc8_table()


def crc8(data: bytes, init: int = 0x00) -> int:
    crc = init
    for b in data:
        crc = _CRC8[crc ^ b]
    return crc


@dataclass(frozen=True)
class ControlFrame:
    opcode: int
    payload: bytes = b""

    @property
    def length(self) -> int:
        return len(self.payload)


def encode_frame(opcode: int, payload: bytes = b"") -> bytes:
    payload = bytes(payload)
    if len(payload) > MAX_PAYLOAD:
        raise LengthMismatch(f"payload of {len(payload)} bytes exceeds the 16-bit length field")
    body = bytes([opcode & 0xFF]) + len(payload).to_bytes(2, "big") + payload
    return bytes([SOF]) + body + bytes([crc8(body)])


def decode_frame(data: bytes) -> ControlFrame:
    data = bytes(data)
    if not data or data[0] != SOF:
        raise BadSof(f"expected start byte 0x{SOF:02X}")
    if len(data) < 5:
        raise LengthMismatch(f"frame of {len(data)} bytes is shorter than the 5-byte minimum")
    length = int.from_bytes(data[2:4], "big")
    if len(data) != length + 5:
        raise LengthMismatch(f"length field says {length}, frame carries {len(data) - 5} payload bytes")
    body = data[1:-1]
    if crc8(body) != data[-1]:
        raise CrcMismatch(f"crc 0x{data[-1]:02X} != computed 0x{crc8(body):02X}")
    if data[1] not in Opcode._value2member_map_:
        raise UnknownOpcode(f"opcode 0x{data[1]:02X}")
    return ControlFrame(data[1], data[4:-1])


def pack_bits(bits) -> bytes:
    """Row-major bits, MSB first within each byte."""
    flat = np.asarray(bits, dtype=bool).ravel()
    return np.packbits(flat).tobytes()


def unpack_bits(payload: bytes, count: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(payload, dtype=np.uint8))[:count].astype(bool)


def index_frame(index: int) -> bytes:
    return encode_frame(Opcode.INDEX, int(index).to_bytes(2, "big"))


def dynamic_frame(bits) -> bytes:
    return encode_frame(Opcode.DYNAMIC, pack_bits(bits))


def download_frame(codewords) -> bytes:
    words = list(codewords)
    return encode_frame(Opcode.DOWNLOAD, len(words).to_bytes(2, "big")
                        + b"".join(pack_bits(w) for w in words))


@dataclass(frozen=True)
class TimingModel:
    serial_baud: float = 115200.0
    wire_bits_per_byte: int = 10  # 8N1
    inter_chip_bits_per_clock: int = 16
    inter_chip_clock_hz: float = 1e8
    refresh_settle: float = 85e-6

    def __post_init__(self):
        if min(self.serial_baud, self.wire_bits_per_byte, self.inter_chip_bits_per_clock,
               self.inter_chip_clock_hz) <= 0 or self.refresh_settle < 0:
            raise ValueError("timing parameters must be positive")

    @property
    def inter_chip_peak_bps(self) -> float:
        return self.inter_chip_bits_per_clock * self.inter_chip_clock_hz

    def serial_time(self, nbytes: int) -> float:
        return nbytes * self.wire_bits_per_byte / self.serial_baud

    def inter_chip_time(self, nbits: int) -> float:
        return nbits / self.inter_chip_bits_per_clock / self.inter_chip_clock_hz


def split_master_slave(bits, rows: int = 20, cols: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Master drives the first half of the rows, slave the rest."""
    flat = np.asarray(bits, dtype=bool).ravel()
    if flat.size != rows * cols:
        raise PayloadSizeError(f"expected {rows * cols} bits, got {flat.size}")
    cut = math.ceil(rows / 2) * cols
    return flat[:cut].copy(), flat[cut:].copy()


def join_master_slave(master, slave) -> np.ndarray:
    return np.concatenate([np.asarray(master, dtype=bool), np.asarray(slave, dtype=bool)])


@dataclass
class BoardState:
    rows: int = 20
    cols: int = 20
    flash_capacity: int = 1024
    flash: list[np.ndarray] = field(default_factory=list)
    master_bits: np.ndarray | None = None
    slave_bits: np.ndarray | None = None
    last_refresh_latency: float = 0.0

    def __post_init__(self):
        if self.master_bits is None or self.slave_bits is None:
            self.master_bits, self.slave_bits = split_master_slave(
                np.zeros(self.rows * self.cols, dtype=bool), self.rows, self.cols)

    @property
    def n_bits(self) -> int:
        return self.rows * self.cols

    @property
    def word_bytes(self) -> int:
        return math.ceil(self.n_bits / 8)

    @property
    def active_bits(self) -> np.ndarray:
        return join_master_slave(self.master_bits, self.slave_bits).reshape(self.rows, self.cols)

    def _load(self, flat: np.ndarray) -> None:
        self.master_bits, self.slave_bits = split_master_slave(flat, self.rows, self.cols)


def apply_frame(board: BoardState, frame: ControlFrame | bytes,
                timing: TimingModel = TimingModel()) -> tuple[BoardState, float]:
    """Execute one frame on ``board`` (mutated in place) and return the refresh latency."""
    if not isinstance(frame, ControlFrame):
        frame = decode_frame(frame)
    p = frame.payload
    wb = board.word_bytes
    if frame.opcode == Opcode.INDEX:
        if len(p) != 2:
            raise PayloadSizeError(f"index payload must be 2 bytes, got {len(p)}")
        idx = int.from_bytes(p, "big")
        if idx >= len(board.flash):
            raise IndexOutOfRange(f"index {idx} with {len(board.flash)} codewords in flash")
        board._load(board.flash[idx])
    elif frame.opcode == Opcode.DYNAMIC:
        if len(p) != wb:
            raise PayloadSizeError(f"dynamic payload must be {wb} bytes, got {len(p)}")
        board._load(unpack_bits(p, board.n_bits))
    elif frame.opcode == Opcode.DOWNLOAD:
        if len(p) < 2:
            raise PayloadSizeError("download payload lacks the codeword count")
        count = int.from_bytes(p[:2], "big")
        if len(p) != 2 + count * wb:
            raise PayloadSizeError(f"download of {count} codewords needs {2 + count * wb} bytes, got {len(p)}")
        if count > board.flash_capacity:
            raise FlashFull(f"{count} codewords exceed flash capacity {board.flash_capacity}")
        board.flash = [unpack_bits(p[2 + i * wb: 2 + (i + 1) * wb], board.n_bits)
                       for i in range(count)]
    else:
        raise UnknownOpcode(f"opcode 0x{frame.opcode:02X}")
    slave = board.n_bits - math.ceil(board.rows / 2) * board.cols
    latency = (timing.serial_time(frame.length + 5) + timing.inter_chip_time(slave)
               + timing.refresh_settle)
    board.last_refresh_latency = latency
    return board, latency
