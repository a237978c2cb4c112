"""Repaint annotated data-element boxes before color segmentation.

Data elements sit on top of artistic shapes and would fragment them, so each
annotated bbox is filled with the dominant color of the thin ring of pixels
just outside it (the background of that element)."""

from __future__ import annotations

import numpy as np

from .raster import AnnotationSet, RasterImage

RING_WIDTH = 2


def _ring_mode_color(pixels: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    """Most frequent exact color in the RING_WIDTH-pixel frame around the
    box [x0, x1) x [y0, y1); ties broken by smallest packed value."""
    h, w = pixels.shape[:2]
    ox0, oy0 = max(0, x0 - RING_WIDTH), max(0, y0 - RING_WIDTH)
    ox1, oy1 = min(w, x1 + RING_WIDTH), min(h, y1 + RING_WIDTH)
    outer = pixels[oy0:oy1, ox0:ox1].reshape(-1, 3).astype(np.uint32)
    inner_mask = np.zeros((oy1 - oy0, ox1 - ox0), dtype=bool)
    inner_mask[y0 - oy0 : y1 - oy0, x0 - ox0 : x1 - ox0] = True
    ring = outer[~inner_mask.reshape(-1)]
    if ring.size == 0:
        ring = outer
    packed = (ring[:, 0] << 16) | (ring[:, 1] << 8) | ring[:, 2]
    values, counts = np.unique(packed, return_counts=True)
    best = values[counts == counts.max()].min()
    return np.array([(best >> 16) & 0xFF, (best >> 8) & 0xFF, best & 0xFF], dtype=np.uint8)


def remove_data_elements(img: RasterImage, ann: AnnotationSet) -> RasterImage:
    ann.validate(img.width, img.height)
    out = img.pixels.copy()
    for el in ann.data_elements:
        x, y, w, h = el.bbox
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        x1, y1 = int(np.ceil(x + w)), int(np.ceil(y + h))
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(img.width, x1), min(img.height, y1)
        if x1 <= x0 or y1 <= y0:
            continue
        out[y0:y1, x0:x1] = _ring_mode_color(img.pixels, x0, y0, x1, y1)
    return RasterImage(out)
