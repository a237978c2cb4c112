"""Raster images and the data-element annotation sidecar."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from PIL import Image

from ..model import DATA_TYPES, VIF_TYPES


@dataclass(frozen=True)
class RasterImage:
    """Row-major (H, W, 3) uint8 sRGB pixel grid."""

    pixels: np.ndarray

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.dtype != np.uint8:
            raise ValueError("pixels must be (H, W, 3) uint8")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def load(cls, source) -> "RasterImage":
        img = Image.open(source).convert("RGB")
        return cls(np.asarray(img, dtype=np.uint8))

    @classmethod
    def from_bytes(cls, data: bytes) -> "RasterImage":
        return cls.load(io.BytesIO(data))

    def save(self, path) -> None:
        Image.fromarray(self.pixels, mode="RGB").save(path)

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self.pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()


@dataclass(frozen=True)
class DataElement:
    bbox: tuple[float, float, float, float]
    element_type: str

    def __post_init__(self):
        if self.element_type not in DATA_TYPES:
            raise ValueError(f"unknown data element type {self.element_type!r}")


@dataclass(frozen=True)
class AnnotationSet:
    """Externally supplied detections: data-element boxes, optional explicit
    visual groups (lists of indices into data_elements), optional VIF type."""

    data_elements: tuple[DataElement, ...] = ()
    visual_groups: Optional[tuple[tuple[int, ...], ...]] = None
    vif_type: Optional[str] = None

    def validate(self, width: int, height: int) -> None:
        for i, el in enumerate(self.data_elements):
            x, y, w, h = el.bbox
            if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > width or y + h > height:
                raise ValueError(f"data element {i}: bbox {el.bbox} outside {width}x{height}")
        if self.visual_groups is not None:
            seen: set[int] = set()
            for grp in self.visual_groups:
                for idx in grp:
                    if not (0 <= idx < len(self.data_elements)):
                        raise ValueError(f"visual group index {idx} out of range")
                    if idx in seen:
                        raise ValueError(f"data element {idx} in two visual groups")
                    seen.add(idx)
        if self.vif_type is not None and self.vif_type not in VIF_TYPES:
            raise ValueError(f"unknown vif_type {self.vif_type!r}")


def annotations_from_json(payload: dict) -> AnnotationSet:
    elements = tuple(
        DataElement(bbox=tuple(float(v) for v in item["bbox"]), element_type=item["element_type"])
        for item in payload.get("data_elements", [])
    )
    groups = payload.get("visual_groups")
    return AnnotationSet(
        data_elements=elements,
        visual_groups=tuple(tuple(int(i) for i in g) for g in groups) if groups is not None else None,
        vif_type=payload.get("vif_type"),
    )


def annotations_to_json(ann: AnnotationSet) -> dict:
    out: dict = {
        "data_elements": [
            {"bbox": list(el.bbox), "element_type": el.element_type} for el in ann.data_elements
        ]
    }
    if ann.visual_groups is not None:
        out["visual_groups"] = [list(g) for g in ann.visual_groups]
    if ann.vif_type is not None:
        out["vif_type"] = ann.vif_type
    return out


def load_annotations(path) -> AnnotationSet:
    with open(path, "r", encoding="utf-8") as fh:
        return annotations_from_json(json.load(fh))
