"""Shape classification of artistic segments.

The outer border of the segment mask is traced Moore-neighbor style, the
contour is simplified with Ramer-Douglas-Peucker at an epsilon proportional
to the perimeter, and the vertex count plus corner angles decide the class.
Circles are confirmed by comparing the enclosed area against pi*r^2 of the
mean contour radius.
"""

from __future__ import annotations

import numpy as np

from .segment import Segment

RDP_EPS_FRACTION = 0.01
CIRCLE_MIN_VERTICES = 8
SQUARE_SIDE_RATIO = 1.2
RIGHT_ANGLE_TOLERANCE = 24.0  # degrees

# Moore neighborhood in clockwise order starting east, for (dx, dy)
_MOORE = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)]


def trace_contour(mask: np.ndarray) -> np.ndarray:
    """Ordered (x, y) border pixels of the largest-start outer boundary.

    Starts at the first foreground pixel in scanline order and walks the
    border clockwise until the start pixel is re-entered from the starting
    direction. Single-pixel masks return that pixel.
    """
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise ValueError("empty mask")
    sy, sx = int(ys[0]), int(xs[0])
    if len(ys) == 1:
        return np.array([[sx, sy]])

    h, w = mask.shape

    def fg(x, y):
        return 0 <= x < w and 0 <= y < h and mask[y, x]

    contour = [(sx, sy)]
    # by scanline minimality nothing lies west or north; treat the walk as
    # having entered from the west
    back_dir = 4
    cx, cy = sx, sy
    for _ in range(4 * mask.size):
        moved = False
        for k in range(1, 9):
            d = (back_dir + k) % 8
            nx, ny = cx + _MOORE[d][0], cy + _MOORE[d][1]
            if fg(nx, ny):
                if (nx, ny) == (sx, sy):
                    return np.array(contour)
                contour.append((nx, ny))
                cx, cy = nx, ny
                back_dir = (d + 4) % 8
                moved = True
                break
        if not moved:
            return np.array(contour)
    return np.array(contour)


def _perpendicular_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    norm = np.hypot(ab[0], ab[1])
    rel = points - a
    if norm == 0:
        return np.hypot(rel[:, 0], rel[:, 1])
    return np.abs(ab[0] * rel[:, 1] - ab[1] * rel[:, 0]) / norm


def rdp(points: np.ndarray, epsilon: float) -> np.ndarray:
    """Ramer-Douglas-Peucker on an open polyline, iterative stack form."""
    n = len(points)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        d = _perpendicular_distances(points[i + 1 : j], points[i], points[j])
        k = int(np.argmax(d))
        if d[k] > epsilon:
            m = i + 1 + k
            keep[m] = True
            stack.append((i, m))
            stack.append((m, j))
    return points[keep]


def simplify_closed(contour: np.ndarray, epsilon: float) -> np.ndarray:
    """Simplify a closed contour: split at the point farthest from the
    start, RDP both halves, rejoin, and prune the forced split points if
    they turn out to lie on an edge. Returns polygon vertices without a
    repeated endpoint."""
    if len(contour) < 3:
        return contour.copy()
    pts = contour.astype(np.float64)
    far = int(np.argmax(((pts - pts[0]) ** 2).sum(axis=1)))
    first = rdp(pts[: far + 1], epsilon)
    second = rdp(np.vstack([pts[far:], pts[:1]]), epsilon)
    poly = np.vstack([first[:-1], second[:-1]])
    return _prune_collinear(poly, epsilon)


def _prune_collinear(poly: np.ndarray, epsilon: float) -> np.ndarray:
    """Drop vertices closer than epsilon to the chord of their neighbors,
    one at a time (flattest first)."""
    poly = poly.copy()
    while len(poly) > 3:
        n = len(poly)
        devs = np.array(
            [
                _perpendicular_distances(poly[i : i + 1], poly[(i - 1) % n], poly[(i + 1) % n])[0]
                for i in range(n)
            ]
        )
        k = int(np.argmin(devs))
        if devs[k] >= epsilon:
            break
        poly = np.delete(poly, k, axis=0)
    return poly


def polygon_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _interior_angles(poly: np.ndarray) -> np.ndarray:
    prev = np.roll(poly, 1, axis=0)
    nxt = np.roll(poly, -1, axis=0)
    v1 = prev - poly
    v2 = nxt - poly
    dot = (v1 * v2).sum(axis=1)
    n1 = np.hypot(v1[:, 0], v1[:, 1])
    n2 = np.hypot(v2[:, 0], v2[:, 1])
    cosang = np.clip(dot / (n1 * n2), -1.0, 1.0)
    return np.degrees(np.arccos(cosang))


def classify_shape(seg: Segment) -> str:
    """Classify a segment as one of the artistic element types."""
    contour = trace_contour(seg.mask)
    if len(contour) < 8:
        return "others"
    pts = contour.astype(np.float64)
    closed = np.vstack([pts, pts[:1]])
    perimeter = float(np.hypot(*np.diff(closed, axis=0).T).sum())
    poly = simplify_closed(contour, RDP_EPS_FRACTION * perimeter)
    v = len(poly)

    if v == 3:
        return "triangle"
    if v == 4:
        sides = np.hypot(*np.diff(np.vstack([poly, poly[:1]]), axis=0).T)
        if sides.min() <= 0:
            return "others"
        angles = _interior_angles(poly)
        if np.all(np.abs(angles - 90.0) <= RIGHT_ANGLE_TOLERANCE):
            ratio = (sides[0] + sides[2]) / (sides[1] + sides[3])
            ratio = max(ratio, 1.0 / ratio)
            return "square" if ratio <= SQUARE_SIDE_RATIO else "rectangle"
        return "others"
    if v == 5:
        return "pentagon"
    if v > CIRCLE_MIN_VERTICES:
        centroid = pts.mean(axis=0)
        radii = np.hypot(*(pts - centroid).T)
        r = radii.mean()
        if r > 0:
            ratio = polygon_area(closed[:-1]) / (np.pi * r * r)
            if 0.9 <= ratio <= 1.1:
                return "circle"
    return "others"
