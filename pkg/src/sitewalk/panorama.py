"""Synthetic 360-degree capture payloads.

Real capture hardware is out of scope, so a capture is a 512x256
equirectangular PNG whose pixels are a seeded pseudorandom block pattern
with a banner identifying mission, capture point, and camera pose. The
pixel content is a pure function of (mission_id, drp_id, pose quantized to
1 mm / 1 mrad), which makes payloads byte-stable and testable end to end.
"""

from __future__ import annotations

import hashlib
import struct
import zlib

import numpy as np

WIDTH = 512
HEIGHT = 256
_BLOCK = 16  # pattern cell edge in pixels

# 5x7 bitmap glyphs, one int per row, bit 4 = leftmost pixel
_FONT: dict[str, tuple[int, ...]] = {
    "0": (0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110),
    "1": (0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110),
    "2": (0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111),
    "3": (0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110),
    "4": (0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010),
    "5": (0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110),
    "6": (0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110),
    "7": (0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000),
    "8": (0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110),
    "9": (0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100),
    "A": (0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001),
    "B": (0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110),
    "C": (0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110),
    "D": (0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100),
    "E": (0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111),
    "F": (0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000),
    "G": (0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111),
    "H": (0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001),
    "I": (0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110),
    "J": (0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100),
    "K": (0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001),
    "L": (0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111),
    "M": (0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001),
    "N": (0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001),
    "O": (0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110),
    "P": (0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000),
    "Q": (0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101),
    "R": (0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001),
    "S": (0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110),
    "T": (0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100),
    "U": (0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110),
    "V": (0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100),
    "W": (0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b11011, 0b10001),
    "X": (0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001),
    "Y": (0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100),
    "Z": (0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111),
    "-": (0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000),
    ".": (0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100),
    "/": (0b00001, 0b00010, 0b00010, 0b00100, 0b01000, 0b01000, 0b10000),
    "_": (0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b11111),
    ":": (0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b01100, 0b00000),
    " ": (0, 0, 0, 0, 0, 0, 0),
}
_UNKNOWN = (0b11111, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11111)


def quantized_label(mission_id: str, drp_id: str, x: float, y: float,
                    theta: float) -> str:
    """Identity string with pose quantized to 1 mm / 1 mrad."""
    return f"{mission_id}/{drp_id}/{x:.3f}/{y:.3f}/{theta:.3f}"


def render_panorama(mission_id: str, drp_id: str, x: float, y: float,
                    theta: float) -> bytes:
    """Deterministic PNG bytes for one capture."""
    label = quantized_label(mission_id, drp_id, x, y, theta)
    seed = int.from_bytes(hashlib.sha256(label.encode()).digest()[:4], "big")
    rng = np.random.RandomState(seed)

    blocks = rng.randint(40, 216, size=(HEIGHT // _BLOCK, WIDTH // _BLOCK, 3),
                         dtype=np.uint8)
    pixels = np.repeat(np.repeat(blocks, _BLOCK, axis=0), _BLOCK, axis=1)

    _draw_banner(pixels, label.upper())
    return encode_png(pixels)


def _draw_banner(pixels: np.ndarray, text: str, scale: int = 2) -> None:
    glyph_h = 7 * scale
    band_top = HEIGHT // 2 - glyph_h // 2 - 4
    band_bottom = band_top + glyph_h + 8
    pixels[band_top:band_bottom, :, :] = 24

    cx = 6
    cy = band_top + 4
    for ch in text:
        rows = _FONT.get(ch, _UNKNOWN)
        if cx + 6 * scale >= WIDTH:
            break
        for gy, row in enumerate(rows):
            for gx in range(5):
                if row & (1 << (4 - gx)):
                    y0 = cy + gy * scale
                    x0 = cx + gx * scale
                    pixels[y0:y0 + scale, x0:x0 + scale, :] = 230
        cx += 6 * scale


def encode_png(pixels: np.ndarray) -> bytes:
    """Minimal RGB8 PNG encoder (filter 0, fixed compression level)."""
    height, width, channels = pixels.shape
    if channels != 3 or pixels.dtype != np.uint8:
        raise ValueError("expected uint8 RGB pixels")
    raw = b"".join(b"\x00" + pixels[row].tobytes() for row in range(height))
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n"
            + _chunk(b"IHDR", ihdr)
            + _chunk(b"IDAT", zlib.compress(raw, 6))
            + _chunk(b"IEND", b""))


def _chunk(tag: bytes, data: bytes) -> bytes:
    return (struct.pack(">I", len(data)) + tag + data
            + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))
