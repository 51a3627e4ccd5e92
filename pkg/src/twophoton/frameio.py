"""Binary frame-file format (BIFR) plus CSV and PGM writers.

BIFR layout, all multi-byte fields little-endian:

    offset  size  field
    0       4     magic "BIFR"
    4       1     format version (0x01)
    5       2     u16 frame width in pixels
    7       2     u16 frame height in pixels
    9       4     u32 frame count
    13      1     u8 bits per pixel (16)
    14      7     reserved, zero
    21      -     frames in index order, row-major u16 per pixel
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import FrameFormatError

MAGIC = b"BIFR"
VERSION = 1
HEADER_SIZE = 21
_HEADER_FMT = "<4sBHHIB7s"


@dataclass(frozen=True)
class FrameFileHeader:
    width: int
    height: int
    frame_count: int
    bits_per_pixel: int = 16

    @property
    def frame_bytes(self) -> int:
        return self.width * self.height * (self.bits_per_pixel // 8)

    def pack(self) -> bytes:
        return struct.pack(
            _HEADER_FMT,
            MAGIC,
            VERSION,
            self.width,
            self.height,
            self.frame_count,
            self.bits_per_pixel,
            b"\x00" * 7,
        )


def read_header(f) -> FrameFileHeader:
    raw = f.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise FrameFormatError("file shorter than the frame-file header", offset=len(raw))
    magic, version, width, height, count, bpp, _reserved = struct.unpack(_HEADER_FMT, raw)
    if magic != MAGIC:
        raise FrameFormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FrameFormatError(f"unsupported format version {version}", offset=4)
    if bpp != 16:
        raise FrameFormatError(f"unsupported bits-per-pixel {bpp}", offset=13)
    return FrameFileHeader(width, height, count, bpp)


def write_frames(
    path: str | Path,
    width: int,
    height: int,
    frames: Iterable[np.ndarray],
    frame_count: int,
) -> None:
    """Write a BIFR file, streaming frames in index order."""
    header = FrameFileHeader(width, height, frame_count)
    written = 0
    with open(path, "wb") as f:
        f.write(header.pack())
        for frame in frames:
            if frame.shape != (height, width):
                raise FrameFormatError(
                    f"frame {written} has shape {frame.shape}, expected {(height, width)}"
                )
            f.write(np.ascontiguousarray(frame, dtype="<u2").tobytes())
            written += 1
    if written != frame_count:
        raise FrameFormatError(
            f"wrote {written} frames but the header promised {frame_count}"
        )


class FrameFileReader:
    """Random-access reader for BIFR files; usable as a frame source."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        with open(self.path, "rb") as f:
            self.header = read_header(f)
            f.seek(0, 2)
            size = f.tell()
        expected = HEADER_SIZE + self.header.frame_count * self.header.frame_bytes
        if size != expected:
            raise FrameFormatError(
                f"file size {size} does not match header ({expected} expected)",
                offset=min(size, expected),
            )

    def __len__(self) -> int:
        return self.header.frame_count

    def frame(self, k: int) -> np.ndarray:
        if not 0 <= k < self.header.frame_count:
            raise IndexError(k)
        nbytes = self.header.frame_bytes
        with open(self.path, "rb") as f:
            f.seek(HEADER_SIZE + k * nbytes)
            raw = f.read(nbytes)
        if len(raw) != nbytes:
            raise FrameFormatError(
                f"truncated frame {k}", offset=HEADER_SIZE + k * nbytes + len(raw)
            )
        return np.frombuffer(raw, dtype="<u2").reshape(
            self.header.height, self.header.width
        )

    def iter_frames(self, start: int = 0, stop: int | None = None) -> Iterator[np.ndarray]:
        stop = self.header.frame_count if stop is None else stop
        nbytes = self.header.frame_bytes
        with open(self.path, "rb") as f:
            f.seek(HEADER_SIZE + start * nbytes)
            for k in range(start, stop):
                raw = f.read(nbytes)
                if len(raw) != nbytes:
                    raise FrameFormatError(f"truncated frame {k}", offset=f.tell())
                yield np.frombuffer(raw, dtype="<u2").reshape(
                    self.header.height, self.header.width
                )


def write_pattern_csv(path: str | Path, positions: np.ndarray, values: np.ndarray) -> None:
    """1-D pattern as ``position_m,value`` rows."""
    with open(path, "w") as f:
        f.write("position_m,value\n")
        for x, v in zip(positions, values):
            f.write(f"{x:.9e},{v:.9e}\n")


def read_pattern_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1]


def write_joint_csv(path: str | Path, positions: np.ndarray, values: np.ndarray) -> None:
    """2-D pattern as ``x_m,y_m,value`` rows in row-major order."""
    with open(path, "w") as f:
        f.write("x_m,y_m,value\n")
        for i, x in enumerate(positions):
            for j, y in enumerate(positions):
                f.write(f"{x:.9e},{y:.9e},{values[i, j]:.9e}\n")


def write_pgm(path: str | Path, values: np.ndarray) -> None:
    """8-bit binary portable graymap, min-max normalized."""
    v = np.asarray(values, dtype=float)
    lo, hi = v.min(), v.max()
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    img = np.round((v - lo) * scale).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        f.write(img.tobytes())
