"""Assemble the document tree from artistic segments and data annotations.

Every element becomes a node; a node's parent is the element whose bounding
box most directly contains it. Data elements are then clustered into visual
groups (explicit annotation wins, proximity of bbox centroids otherwise)
and each top-level branch holding a group's members is re-parented under an
inserted group node. Ancestor bboxes are finally widened to cover their
children so the containment invariant holds even for partial overlaps.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..colors import LabColor
from ..model import CapacityError, ElementNode, InfographicDoc, MAX_NODES
from .raster import AnnotationSet, RasterImage
from .removal import _ring_mode_color
from .segment import DEFAULT_THRESHOLD, Segment
from .shapes import classify_shape

GROUP_GAP = 0.08  # fraction of the image diagonal


def _clip_lab(lab: np.ndarray) -> LabColor:
    return LabColor(float(np.clip(lab[0], 0, 100)), float(lab[1]), float(lab[2]))


def _background_segment(segs: list[Segment]) -> Segment:
    """The segment owning the most image-border pixels (ties: larger, then
    lower id) is the canvas background."""
    def border_count(s: Segment) -> int:
        m = s.mask
        return int(m[0, :].sum() + m[-1, :].sum() + m[1:-1, 0].sum() + m[1:-1, -1].sum())

    return max(segs, key=lambda s: (border_count(s), s.area, -s.id))


def _data_element_appearance(img: RasterImage, bbox, threshold: float):
    """Mean Lab and pixel count of the element's own (non-background)
    pixels inside its bbox in the original image."""
    x, y, w, h = bbox
    x0, y0 = max(0, int(np.floor(x))), max(0, int(np.floor(y)))
    x1, y1 = min(img.width, int(np.ceil(x + w))), min(img.height, int(np.ceil(y + h)))
    patch = img.pixels[y0:y1, x0:x1].reshape(-1, 3).astype(np.float64)
    if patch.size == 0:
        return LabColor(50.0, 0.0, 0.0), 1.0
    bg = _ring_mode_color(img.pixels, x0, y0, x1, y1).astype(np.float64)
    patch_lab = kernels.srgb_to_lab(patch)
    bg_lab = kernels.srgb_to_lab(bg[None, :])
    d = kernels.ciede2000(patch_lab, np.tile(bg_lab, (len(patch_lab), 1)))
    own = patch_lab[d >= threshold]
    if len(own) == 0:
        return _clip_lab(patch_lab.mean(axis=0)), float(len(patch_lab))
    return _clip_lab(own.mean(axis=0)), float(len(own))


def _reading_order(items, bbox_of):
    return sorted(items, key=lambda it: (bbox_of(it)[1], bbox_of(it)[0], str(it)))


def _proximity_groups(centroids: list[tuple[float, float]], gap: float) -> list[list[int]]:
    """Single-linkage clusters of data-element indices with link distance
    below `gap`."""
    n = len(centroids)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            dx = centroids[i][0] - centroids[j][0]
            dy = centroids[i][1] - centroids[j][1]
            if (dx * dx + dy * dy) ** 0.5 <= gap and find(i) != find(j):
                parent[max(find(i), find(j))] = min(find(i), find(j))
    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    return [sorted(v) for _, v in sorted(clusters.items())]


def build_tree(
    img: RasterImage,
    ann: AnnotationSet,
    artistic: list[Segment],
    max_nodes: int = MAX_NODES,
    threshold: float = DEFAULT_THRESHOLD,
) -> InfographicDoc:
    ann.validate(img.width, img.height)
    w, h = img.width, img.height

    bg_seg = _background_segment(artistic)
    shapes = [s for s in artistic if s.id != bg_seg.id]

    nodes: dict[str, ElementNode] = {}
    bboxes: dict[str, tuple[float, float, float, float]] = {"bg": (0.0, 0.0, float(w), float(h))}
    nodes["bg"] = ElementNode(
        id="bg", kind="background", bbox=bboxes["bg"],
        pixel_area=float(bg_seg.area), color=bg_seg.mean_color,
    )

    shape_ids = []
    for i, seg in enumerate(_reading_order(shapes, lambda s: s.bbox)):
        nid = f"a{i}"
        shape_ids.append(nid)
        bboxes[nid] = tuple(float(v) for v in seg.bbox)
        nodes[nid] = ElementNode(
            id=nid, kind="artistic", element_type=classify_shape(seg),
            bbox=bboxes[nid], pixel_area=float(seg.area), color=seg.mean_color,
        )

    data_ids = []
    for i, el in enumerate(ann.data_elements):
        nid = f"d{i}"
        data_ids.append(nid)
        color, own_area = _data_element_appearance(img, el.bbox, threshold)
        bboxes[nid] = tuple(float(v) for v in el.bbox)
        nodes[nid] = ElementNode(
            id=nid, kind="data", element_type=el.element_type,
            bbox=bboxes[nid], pixel_area=own_area, color=color,
        )

    element_ids = shape_ids + data_ids
    n_total = 1 + len(element_ids)

    def area(nid):
        b = bboxes[nid]
        return b[2] * b[3]

    def intersection(na, nb):
        ax, ay, aw, ah = bboxes[na]
        bx, by, bw, bh = bboxes[nb]
        ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
        iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
        return ix * iy

    # parent: tightest fully containing element; failing that, the element
    # overlapped with the largest intersection-over-child-area; the root
    # canvas is the fallback (it contains everything trivially)
    parent_of: dict[str, str] = {}
    for nid in element_ids:
        best, best_key = "bg", None
        for c in element_ids:
            if c == nid or area(c) <= area(nid):
                continue
            ov = intersection(nid, c)
            if ov <= 0:
                continue
            ratio = ov / max(area(nid), 1e-12)
            contained = ratio >= 1.0 - 1e-9
            key = (1 if contained else 0, ratio, -area(c))
            if best_key is None or key > best_key:
                best, best_key = c, key
        parent_of[nid] = best

    children: dict[str, list[str]] = {nid: [] for nid in ["bg"] + element_ids}
    for nid, p in parent_of.items():
        children[p].append(nid)

    # visual groups over data elements
    groups: list[list[int]]
    if ann.visual_groups is not None:
        groups = [list(g) for g in ann.visual_groups if g]
    elif data_ids:
        diag = float(np.hypot(w, h))
        cents = []
        for i in range(len(data_ids)):
            x, y, bw, bh = ann.data_elements[i].bbox
            cents.append((x + bw / 2.0, y + bh / 2.0))
        groups = _proximity_groups(cents, GROUP_GAP * diag)
    else:
        groups = []

    group_ids = []
    if groups:
        def top_branch(nid):
            while parent_of.get(nid, "bg") != "bg":
                nid = parent_of[nid]
            return nid

        # a top-level branch is claimed by the group owning most of its
        # data elements; lone data elements are claimed directly
        branch_votes: dict[str, dict[int, int]] = {}
        for gi, grp in enumerate(groups):
            for di in grp:
                b = top_branch(data_ids[di])
                branch_votes.setdefault(b, {}).setdefault(gi, 0)
                branch_votes[b][gi] += 1
        claimed: dict[str, int] = {}
        for b, votes in branch_votes.items():
            claimed[b] = sorted(votes.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]

        members_of: dict[int, list[str]] = {gi: [] for gi in range(len(groups))}
        for b, gi in claimed.items():
            members_of[gi].append(b)

        def subtree_ids(nid):
            out = [nid]
            for c in children[nid]:
                out.extend(subtree_ids(c))
            return out

        raw_groups = []
        for gi in range(len(groups)):
            members = members_of[gi]
            if not members:
                continue
            xs0, ys0, xs1, ys1 = [], [], [], []
            pix = 0.0
            for m in members:
                x, y, bw, bh = bboxes[m]
                xs0.append(x); ys0.append(y); xs1.append(x + bw); ys1.append(y + bh)
                pix += sum(nodes[s].pixel_area for s in subtree_ids(m))
            gb = (min(xs0), min(ys0), max(xs1) - min(xs0), max(ys1) - min(ys0))
            raw_groups.append((gb, members, pix))

        n_total += len(raw_groups)
        for i, (gb, members, pix) in enumerate(_reading_order(raw_groups, lambda g: g[0])):
            gid = f"g{i}"
            group_ids.append(gid)
            bboxes[gid] = gb
            nodes[gid] = ElementNode(id=gid, kind="visual_group", bbox=gb, pixel_area=pix)
            for m in members:
                children["bg"].remove(m)
                parent_of[m] = gid
            children[gid] = list(members)
        for gid in group_ids:
            children["bg"].append(gid)

    if n_total > max_nodes:
        raise CapacityError(f"{n_total} nodes exceeds maximum {max_nodes}")

    # finalize: reading order among siblings, bboxes widened over children
    def finalize(nid) -> ElementNode:
        kids = _reading_order(children.get(nid, []), lambda c: bboxes[c])
        built = [finalize(c) for c in kids]
        x0, y0, ww, hh = bboxes[nid]
        x1, y1 = x0 + ww, y0 + hh
        for b in built:
            bx, by, bw, bh = b.bbox
            x0, y0 = min(x0, bx), min(y0, by)
            x1, y1 = max(x1, bx + bw), max(y1, by + bh)
        node = nodes[nid]
        final = ElementNode(
            id=nid, kind=node.kind, element_type=node.element_type,
            bbox=(x0, y0, x1 - x0, y1 - y0), pixel_area=node.pixel_area,
            color=node.color, children=tuple(k.id for k in built),
        )
        finished[nid] = final
        return final

    finished: dict[str, ElementNode] = {}
    finalize("bg")

    return InfographicDoc(
        width=w,
        height=h,
        root_id="bg",
        nodes=finished,
        vif_type=ann.vif_type or "free",
        visual_groups=tuple(group_ids),
        max_nodes=max_nodes,
    )
