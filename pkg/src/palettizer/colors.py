"""Color types and conversions shared by every module.

Lab values use the D65 2-degree standard observer (the sRGB white point).
Out-of-gamut Lab colors are mapped to sRGB by clamping each linear channel
after the inverse transform, which is monotone and adequate for display.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import kernels

_HEX_RE = re.compile(r"^#?([0-9a-fA-F]{6})$")


@dataclass(frozen=True)
class LabColor:
    """A CIELab color. L is in [0, 100]; a and b are unbounded but finite."""

    l: float
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.l <= 100.0):
            raise ValueError(f"L={self.l} outside [0, 100]")
        if not (np.isfinite(self.a) and np.isfinite(self.b) and np.isfinite(self.l)):
            raise ValueError("Lab components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.l, self.a, self.b], dtype=np.float64)


@dataclass(frozen=True)
class RgbColor:
    """An 8-bit sRGB color."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for ch in (self.r, self.g, self.b):
            if not (isinstance(ch, (int, np.integer)) and 0 <= ch <= 255):
                raise ValueError(f"channel {ch!r} outside [0, 255]")

    def to_hex(self) -> str:
        return f"#{self.r:02X}{self.g:02X}{self.b:02X}"

    @classmethod
    def from_hex(cls, text: str) -> "RgbColor":
        m = _HEX_RE.match(text.strip())
        if not m:
            raise ValueError(f"not a #RRGGBB color: {text!r}")
        v = int(m.group(1), 16)
        return cls((v >> 16) & 0xFF, (v >> 8) & 0xFF, v & 0xFF)


def rgb_to_lab(c: RgbColor) -> LabColor:
    lab = kernels.srgb_to_lab(np.array([[c.r, c.g, c.b]], dtype=np.float64))[0]
    # cube-root noise can leave L a hair outside [0, 100] at the endpoints
    return LabColor(float(np.clip(lab[0], 0.0, 100.0)), float(lab[1]), float(lab[2]))


def lab_to_rgb_clamped(c: LabColor) -> RgbColor:
    rgb = kernels.lab_to_srgb(c.as_array()[None, :])[0]
    return RgbColor(int(rgb[0]), int(rgb[1]), int(rgb[2]))


def ciede2000(x: LabColor, y: LabColor) -> float:
    """CIEDE2000 difference with kL = kC = kH = 1."""
    return float(kernels.ciede2000(x.as_array()[None, :], y.as_array()[None, :])[0])


def snap_to_gamut(lab: np.ndarray) -> np.ndarray:
    """Round-trip (N, 3) Lab rows through clamped sRGB so every row is
    displayable. Identity (to quantization) for in-gamut colors."""
    return kernels.srgb_to_lab(kernels.lab_to_srgb(lab).astype(np.float64))


def hex_to_lab(text: str) -> LabColor:
    return rgb_to_lab(RgbColor.from_hex(text))


def lab_to_hex(c: LabColor) -> str:
    return lab_to_rgb_clamped(c).to_hex()
