"""Color segmentation: region growing at a CIEDE2000 threshold, then merging
of gradient fragments whose hues share a KDE density mode.

Region growing runs over maximal 4-connected components of exactly equal
color rather than raw pixels; components are uniform, so testing a
component's color against the region's running reference is equivalent to
testing each of its pixels, and the result is deterministic. The running
reference is the area-weighted mean Lab of everything absorbed so far.
Within one growth pass every frontier component below the threshold is
absorbed, the mean is updated, and the frontier rebuilt; growth stops when
a pass absorbs nothing.

Growth itself is strictly 4-connected. The final fold of sub-minimum
regions considers corner contacts too, so a sharp rasterized corner that
detached from its shape by a diagonal step rejoins it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .. import kernels
from ..colors import LabColor
from .raster import RasterImage

DEFAULT_THRESHOLD = 4.0
DEFAULT_BANDWIDTH = 3.0
MIN_SEGMENT_AREA_FRACTION = 0.0005  # 0.05% of image pixels
ACHROMATIC_CHROMA = 5.0


@dataclass
class Segment:
    id: int
    mask: np.ndarray  # (H, W) bool
    mean_lab: np.ndarray  # (3,)
    bbox: tuple[int, int, int, int]  # x, y, w, h
    area: int

    @property
    def mean_color(self) -> LabColor:
        return LabColor(float(np.clip(self.mean_lab[0], 0, 100)), float(self.mean_lab[1]), float(self.mean_lab[2]))


def _equal_color_components(pixels: np.ndarray) -> np.ndarray:
    """Label maximal 4-connected runs of exactly equal RGB. Returns (H, W)
    int labels, 0-based, scanline-ordered representatives."""
    h, w = pixels.shape[:2]
    n = h * w
    idx = np.arange(n).reshape(h, w)
    p = pixels.astype(np.uint32)
    packed = (p[:, :, 0] << 16) | (p[:, :, 1] << 8) | p[:, :, 2]

    rows = []
    cols = []
    eq_r = packed[:, 1:] == packed[:, :-1]
    rows.append(idx[:, 1:][eq_r])
    cols.append(idx[:, :-1][eq_r])
    eq_d = packed[1:, :] == packed[:-1, :]
    rows.append(idx[1:, :][eq_d])
    cols.append(idx[:-1, :][eq_d])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    # renumber so component ids follow first-appearance scanline order
    flat = labels.reshape(-1)
    _, first = np.unique(flat, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    return remap[flat].reshape(h, w)


def _adjacent_label_pairs(labels: np.ndarray, diagonal: bool = False) -> np.ndarray:
    """Unique unordered pairs of distinct labels that touch (4-connected by
    default; include corner contacts with diagonal=True)."""
    pairs = []
    a, b = labels[:, 1:], labels[:, :-1]
    m = a != b
    pairs.append(np.stack([a[m], b[m]], axis=1))
    a, b = labels[1:, :], labels[:-1, :]
    m = a != b
    pairs.append(np.stack([a[m], b[m]], axis=1))
    if diagonal:
        a, b = labels[1:, 1:], labels[:-1, :-1]
        m = a != b
        pairs.append(np.stack([a[m], b[m]], axis=1))
        a, b = labels[1:, :-1], labels[:-1, 1:]
        m = a != b
        pairs.append(np.stack([a[m], b[m]], axis=1))
    allp = np.concatenate(pairs).astype(np.int64)
    lo = allp.min(axis=1)
    hi = allp.max(axis=1)
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


def _component_stats(labels: np.ndarray, lab_pixels: np.ndarray):
    n = labels.max() + 1
    flat = labels.reshape(-1)
    areas = np.bincount(flat, minlength=n)
    sums = np.zeros((n, 3))
    for ch in range(3):
        sums[:, ch] = np.bincount(flat, weights=lab_pixels[:, ch], minlength=n)
    means = sums / areas[:, None]
    return areas, sums, means


def segment_regions(img: RasterImage, threshold: float = DEFAULT_THRESHOLD) -> list[Segment]:
    """Partition the image into 4-connected regions of perceptually similar
    color. Regions smaller than MIN_SEGMENT_AREA_FRACTION of the image are
    folded into their most similar neighbor."""
    h, w = img.height, img.width
    labels = _equal_color_components(img.pixels)
    lab_pixels = kernels.srgb_to_lab(img.pixels.reshape(-1, 3).astype(np.float64))
    areas, sums, means = _component_stats(labels, lab_pixels)
    n = len(areas)

    neighbors: list[set[int]] = [set() for _ in range(n)]
    for a, b in _adjacent_label_pairs(labels):
        neighbors[a].add(int(b))
        neighbors[b].add(int(a))

    assignment = np.full(n, -1, dtype=np.int64)
    region_id = 0
    order = sorted(range(n), key=lambda i: (-areas[i], i))
    for seed in order:
        if assignment[seed] >= 0:
            continue
        members = [seed]
        assignment[seed] = region_id
        total = float(areas[seed])
        mean = means[seed].copy()
        while True:
            frontier = sorted(
                {nb for m in members for nb in neighbors[m] if assignment[nb] < 0}
            )
            if not frontier:
                break
            d = kernels.ciede2000(np.tile(mean, (len(frontier), 1)), means[frontier])
            accepted = [c for c, dist in zip(frontier, d) if dist < threshold]
            if not accepted:
                break
            for c in accepted:
                assignment[c] = region_id
                members.append(c)
            add_area = areas[accepted].sum()
            add_sum = sums[accepted].sum(axis=0)
            mean = (mean * total + add_sum) / (total + add_area)
            total += add_area
        region_id += 1

    return _assemble_segments(labels, assignment, areas, sums, h, w, min_area=max(1, round(MIN_SEGMENT_AREA_FRACTION * h * w)))


def _assemble_segments(labels, assignment, comp_areas, comp_sums, h, w, min_area):
    region_labels = assignment[labels.reshape(-1)].reshape(h, w)
    n_regions = assignment.max() + 1
    areas = np.bincount(assignment, weights=comp_areas, minlength=n_regions)
    sums = np.zeros((n_regions, 3))
    for ch in range(3):
        sums[:, ch] = np.bincount(assignment, weights=comp_sums[:, ch], minlength=n_regions)

    # fold sub-minimum regions into their most similar adjacent region
    merged_into = np.arange(n_regions)

    def find(r):
        while merged_into[r] != r:
            merged_into[r] = merged_into[merged_into[r]]
            r = merged_into[r]
        return r

    # corner contacts count here: a sharp rasterized corner can detach from
    # its shape by a diagonal step, and it must fold back into that shape
    # (equal color) rather than into the background
    adj = [set() for _ in range(n_regions)]
    for a, b in _adjacent_label_pairs(region_labels, diagonal=True):
        adj[a].add(int(b))
        adj[b].add(int(a))

    small = sorted(range(n_regions), key=lambda r: (areas[r], r))
    for r in small:
        root = find(r)
        if areas[root] >= min_area:
            continue
        candidates = sorted({find(x) for x in adj[r]} - {root})
        if not candidates:
            continue
        mean_r = sums[root] / areas[root]
        cand_means = np.array([sums[c] / areas[c] for c in candidates])
        d = kernels.ciede2000(np.tile(mean_r, (len(candidates), 1)), cand_means)
        target = candidates[int(np.argmin(d))]
        merged_into[root] = target
        sums[target] += sums[root]
        areas[target] += areas[root]
        adj[target] |= adj[root]

    final = np.array([find(r) for r in range(n_regions)])
    survivors = sorted(set(final))
    renum = {old: new for new, old in enumerate(survivors)}
    final_labels = np.array([renum[f] for f in final])[region_labels.reshape(-1)].reshape(h, w)

    segs = []
    for old in survivors:
        sid = renum[old]
        mask = final_labels == sid
        ys, xs = np.nonzero(mask)
        segs.append(
            Segment(
                id=sid,
                mask=mask,
                mean_lab=sums[old] / areas[old],
                bbox=(int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)),
                area=int(areas[old]),
            )
        )
    return segs


def segments_label_map(segs: list[Segment]) -> np.ndarray:
    labels = np.full(segs[0].mask.shape, -1, dtype=np.int64)
    for i, s in enumerate(segs):
        labels[s.mask] = i
    return labels


def _kde_mode_clusters(values: np.ndarray, bandwidth: float, circular: bool) -> np.ndarray:
    """Mean-shift each sample to its Gaussian-KDE mode; samples converging
    to the same mode get one cluster id. Circular treats values as degrees
    on a 360 wheel."""
    x = values.astype(np.float64).copy()
    for _ in range(200):
        if circular:
            diff = (values[None, :] - x[:, None] + 180.0) % 360.0 - 180.0
        else:
            diff = values[None, :] - x[:, None]
        wgt = np.exp(-0.5 * (diff / bandwidth) ** 2)
        step = (wgt * diff).sum(axis=1) / wgt.sum(axis=1)
        x = x + step
        if circular:
            x %= 360.0
        if np.abs(step).max() < 1e-7:
            break
    clusters = np.full(len(x), -1, dtype=np.int64)
    next_id = 0
    for i in range(len(x)):
        if clusters[i] >= 0:
            continue
        if circular:
            near = np.abs((x - x[i] + 180.0) % 360.0 - 180.0) < 0.5
        else:
            near = np.abs(x - x[i]) < 0.5
        clusters[near & (clusters < 0)] = next_id
        next_id += 1
    return clusters


def merge_gradient_segments(
    segs: list[Segment], bandwidth: float = DEFAULT_BANDWIDTH
) -> list[Segment]:
    """Merge adjacent segments that are fragments of one color gradient.

    Chromatic segments cluster by the KDE modes of their hue angles;
    near-achromatic segments (chroma < 5) cluster by lightness instead,
    since hue is undefined for grays. Only spatially adjacent segments in
    the same mode cluster merge, preserving 4-connectivity. Iterates to a
    fixed point, so the operation is idempotent.
    """
    current = segs
    for _ in range(len(segs)):
        merged = _merge_once(current, bandwidth)
        if len(merged) == len(current):
            return merged
        current = merged
    return current


def _merge_once(segs: list[Segment], bandwidth: float) -> list[Segment]:
    if len(segs) <= 1:
        return segs
    means = np.array([s.mean_lab for s in segs])
    chroma = np.hypot(means[:, 1], means[:, 2])
    hue = np.degrees(np.arctan2(means[:, 2], means[:, 1])) % 360.0
    chromatic = chroma >= ACHROMATIC_CHROMA

    clusters = np.full(len(segs), -1, dtype=np.int64)
    if chromatic.any():
        sub = _kde_mode_clusters(hue[chromatic], bandwidth, circular=True)
        clusters[chromatic] = sub
    if (~chromatic).any():
        sub = _kde_mode_clusters(means[~chromatic, 0], bandwidth, circular=False)
        clusters[~chromatic] = sub + (clusters.max() + 1)

    labels = segments_label_map(segs)
    parent = list(range(len(segs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in _adjacent_label_pairs(labels):
        if clusters[a] == clusters[b]:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[int]] = {}
    for i in range(len(segs)):
        groups.setdefault(find(i), []).append(i)
    if len(groups) == len(segs):
        return segs

    out = []
    for new_id, (_, members) in enumerate(sorted(groups.items())):
        mask = np.logical_or.reduce([segs[m].mask for m in members])
        area = sum(segs[m].area for m in members)
        mean = sum(segs[m].mean_lab * segs[m].area for m in members) / area
        ys, xs = np.nonzero(mask)
        out.append(
            Segment(
                id=new_id,
                mask=mask,
                mean_lab=mean,
                bbox=(int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)),
                area=area,
            )
        )
    return out


def segment_image(img: RasterImage, threshold: float = DEFAULT_THRESHOLD, bandwidth: float = DEFAULT_BANDWIDTH) -> list[Segment]:
    """Full artistic-element identification on a cleaned image: region
    growing followed by gradient merging."""
    return merge_gradient_segments(segment_regions(img, threshold), bandwidth)
