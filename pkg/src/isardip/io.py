"""Binary file formats: CISR complex matrices, IMSK masks and PGM rasters.

CISR
    ``b"CISR"``, u32 version (=1), u32 rows, u32 cols, then ``rows*cols``
    little-endian f64 (real, imag) pairs in row-major order.
IMSK
    ``b"IMSK"``, u32 rows, u32 cols, u8 kind (0 pixel, 1 column,
    2 compressed), f64 ratio, u64 seed, then ``rows*cols`` bytes (1 =
    observed), little-endian, row-major.
PGM
    Binary ``P5`` graymap, maxval 255.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .sampling import KINDS, Mask

CISR_MAGIC = b"CISR"
CISR_VERSION = 1
IMSK_MAGIC = b"IMSK"
MAX_ELEMENTS = 1 << 31

_CISR_HEADER = struct.Struct("<4sIII")
_IMSK_HEADER = struct.Struct("<4sIIBdQ")


class FormatError(ValueError):
    """Malformed or truncated data file."""


def _check_dims(rows: int, cols: int) -> None:
    if rows < 1 or cols < 1 or rows * cols > MAX_ELEMENTS:
        raise FormatError(f"dimension overflow: {rows} x {cols}")


def encode_matrix(M: np.ndarray) -> bytes:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise ValueError("matrix must be 2-D")
    rows, cols = M.shape
    _check_dims(rows, cols)
    return _CISR_HEADER.pack(CISR_MAGIC, CISR_VERSION, rows, cols) + M.astype("<c16").tobytes()


def decode_matrix(buf: bytes) -> np.ndarray:
    if len(buf) < 4 or buf[:4] != CISR_MAGIC:
        raise FormatError("bad magic")
    if len(buf) < _CISR_HEADER.size:
        raise FormatError("truncated header")
    _, version, rows, cols = _CISR_HEADER.unpack_from(buf)
    if version != CISR_VERSION:
        raise FormatError(f"unsupported version {version}")
    _check_dims(rows, cols)
    need = rows * cols * 16
    payload = buf[_CISR_HEADER.size:]
    if len(payload) < need:
        raise FormatError(f"truncated payload: {len(payload)} of {need} bytes")
    if len(payload) > need:
        raise FormatError("trailing bytes after payload")
    return np.frombuffer(payload, dtype="<c16").astype(np.complex128).reshape(rows, cols)


def save_matrix(M: np.ndarray, path) -> None:
    Path(path).write_bytes(encode_matrix(M))


def load_matrix(path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes())


def encode_mask(mask: Mask) -> bytes:
    rows, cols = mask.shape
    _check_dims(rows, cols)
    head = _IMSK_HEADER.pack(IMSK_MAGIC, rows, cols, KINDS.index(mask.kind),
                             float(mask.requested_ratio), int(mask.seed) & (2**64 - 1))
    return head + mask.observed.astype(np.uint8).tobytes()


def decode_mask(buf: bytes) -> Mask:
    if len(buf) < 4 or buf[:4] != IMSK_MAGIC:
        raise FormatError("bad magic")
    if len(buf) < _IMSK_HEADER.size:
        raise FormatError("truncated header")
    _, rows, cols, kind, ratio, seed = _IMSK_HEADER.unpack_from(buf)
    _check_dims(rows, cols)
    if kind >= len(KINDS):
        raise FormatError(f"unknown mask kind code {kind}")
    payload = np.frombuffer(buf[_IMSK_HEADER.size:], dtype=np.uint8)
    if payload.size < rows * cols:
        raise FormatError(f"truncated payload: {payload.size} of {rows * cols} bytes")
    if payload.size > rows * cols:
        raise FormatError("trailing bytes after payload")
    if payload.max(initial=0) > 1:
        raise FormatError("mask bytes must be 0 or 1")
    return Mask(payload.reshape(rows, cols).astype(bool), KINDS[kind], ratio, seed)


def save_mask(mask: Mask, path) -> None:
    Path(path).write_bytes(encode_mask(mask))


def load_mask(path) -> Mask:
    return decode_mask(Path(path).read_bytes())


def db_to_gray(db: np.ndarray, top_db: float) -> np.ndarray:
    """Linear map ``[-top_db, 0] -> [0, 255]``, rounding half away from zero."""
    x = (np.clip(np.asarray(db, dtype=np.float64), -top_db, 0.0) + top_db) / top_db * 255.0
    return np.floor(x + 0.5).astype(np.uint8)


def encode_pgm(gray: np.ndarray) -> bytes:
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes()


_PGM_HEADER = re.compile(rb"P5\s+(\d+)\s+(\d+)\s+255\s")


def decode_pgm(buf: bytes) -> np.ndarray:
    m = _PGM_HEADER.match(buf)
    if m is None:
        raise FormatError("not an 8-bit binary PGM")
    w, h = int(m.group(1)), int(m.group(2))
    data = buf[m.end():]
    if len(data) != w * h:
        raise FormatError("truncated PGM payload")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w)


def write_pgm(gray: np.ndarray, path) -> None:
    Path(path).write_bytes(encode_pgm(gray))
