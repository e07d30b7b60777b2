"""Frame serialisation.

Frames up to 16 bits per pixel use binary PGM (P5) with maxval
2^pixres - 1; PGM's two-byte samples are big-endian per the format.  Deeper
frames use a raw container: the 8-byte magic "IPOLFRM1", u32 width, u32
height (little-endian), then one little-endian u64 per pixel in row-major
order.  The raw header does not carry pixres, so readers must supply it
(default 64).
"""

from __future__ import annotations

import struct

from .errors import DimensionError
from .executor import Frame

RAW_MAGIC = b"IPOLFRM1"


def write_frame(frame: Frame) -> bytes:
    if frame.pixres <= 16:
        return _write_pgm(frame)
    return _write_raw(frame)


def read_frame(data: bytes, pixres: int | None = None) -> Frame:
    """Decode a frame; `pixres` is required context for the raw format and
    overrides the PGM maxval-derived depth when given."""
    if data.startswith(RAW_MAGIC):
        return _read_raw(data, 64 if pixres is None else pixres)
    return _read_pgm(data, pixres)


def _write_pgm(frame: Frame) -> bytes:
    maxval = (1 << frame.pixres) - 1
    header = f"P5\n{frame.width} {frame.height}\n{maxval}\n".encode("ascii")
    if maxval < 256:
        raster = bytes(frame.pixels)
    else:
        raster = b"".join(struct.pack(">H", v) for v in frame.pixels)
    return header + raster


def _read_pgm(data: bytes, pixres: int | None) -> Frame:
    tokens, offset = _pgm_header_tokens(data)
    if tokens[0] != b"P5":
        raise DimensionError(f"not a binary PGM or raw frame: magic {tokens[0]!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise DimensionError(f"malformed PGM header: {tokens[1:4]!r}") from exc
    if maxval < 1 or maxval > 65535:
        raise DimensionError(f"unsupported PGM maxval {maxval}")
    if pixres is None:
        pixres = maxval.bit_length()
    sample = 1 if maxval < 256 else 2
    expected = width * height * sample
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise DimensionError(
            f"PGM raster truncated: expected {expected} bytes, got {len(raster)}"
        )
    if sample == 1:
        pixels = tuple(raster)
    else:
        pixels = tuple(v[0] for v in struct.iter_unpack(">H", raster))
    return Frame(width=width, height=height, pixres=pixres, pixels=pixels)


def _pgm_header_tokens(data: bytes):
    """Magic, width, height, maxval; handles comments and ends after the
    single whitespace byte that separates maxval from the raster."""
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise DimensionError("truncated PGM header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i : i + 1].isspace():
                i += 1
            tokens.append(data[start:i])
    return tokens, i + 1  # skip the single whitespace after maxval


def _write_raw(frame: Frame) -> bytes:
    header = RAW_MAGIC + struct.pack("<II", frame.width, frame.height)
    return header + b"".join(struct.pack("<Q", v) for v in frame.pixels)


def _read_raw(data: bytes, pixres: int) -> Frame:
    width, height = struct.unpack_from("<II", data, len(RAW_MAGIC))
    offset = len(RAW_MAGIC) + 8
    expected = width * height * 8
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise DimensionError(
            f"raw raster truncated: expected {expected} bytes, got {len(raster)}"
        )
    pixels = tuple(v[0] for v in struct.iter_unpack("<Q", raster))
    return Frame(width=width, height=height, pixres=pixres, pixels=pixels)
