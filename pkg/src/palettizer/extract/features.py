"""Fixed-length feature vectors: non-color features F followed by per-slot
CIELab color triples C, with a per-feature observation mask.

Layout (slot block width 19 when spatial indices are kept, 17 without):

    F[0:12)   VIF-type one-hot
    F[12]     visual group count
    F[13]     mean adjacent-group centroid distance / image diagonal
    then per node slot (pre-order, root first):
        12    element-type one-hot (6 artistic + 4 data + group + background)
        1     bbox width / image width
        1     bbox height / image height
        1     pixel area / image area
        1     element count inside the visual group (group slots only)
        2     nested-set left and right index / (2 * max_nodes)   [spatial]
        1     slot-occupied indicator
    C         3 per slot (L, a, b)

Unused slots are zero and marked observed, as are the color entries of
visual-group slots (groups own no pixels). Mask bit 1 means unobserved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..model import (
    ARTISTIC_TYPES,
    DATA_TYPES,
    MAX_NODES,
    CapacityError,
    InfographicDoc,
    StructuralError,
    VIF_TYPES,
    encode_nested_set,
    validate_doc,
)

TYPE_CATS = ARTISTIC_TYPES + DATA_TYPES + ("visual_group", "background")
N_TYPE_CATS = len(TYPE_CATS)  # 12
_HEADER = 14


@dataclass(frozen=True)
class FeatureLayout:
    max_nodes: int = MAX_NODES
    spatial: bool = True

    @property
    def slot_block(self) -> int:
        return N_TYPE_CATS + 4 + (2 if self.spatial else 0) + 1

    @property
    def f_width(self) -> int:
        return _HEADER + self.max_nodes * self.slot_block

    @property
    def width(self) -> int:
        return self.f_width + 3 * self.max_nodes

    def slot_start(self, s: int) -> int:
        return _HEADER + s * self.slot_block

    def type_slice(self, s: int) -> slice:
        start = self.slot_start(s)
        return slice(start, start + N_TYPE_CATS)

    def rel_w_pos(self, s: int) -> int:
        return self.slot_start(s) + N_TYPE_CATS

    def rel_h_pos(self, s: int) -> int:
        return self.slot_start(s) + N_TYPE_CATS + 1

    def rel_area_pos(self, s: int) -> int:
        return self.slot_start(s) + N_TYPE_CATS + 2

    def group_size_pos(self, s: int) -> int:
        return self.slot_start(s) + N_TYPE_CATS + 3

    def left_pos(self, s: int) -> int:
        if not self.spatial:
            raise StructuralError("layout has no spatial indices")
        return self.slot_start(s) + N_TYPE_CATS + 4

    def right_pos(self, s: int) -> int:
        return self.left_pos(s) + 1

    def exists_pos(self, s: int) -> int:
        return self.slot_start(s) + self.slot_block - 1

    def color_slice(self, s: int) -> slice:
        start = self.f_width + 3 * s
        return slice(start, start + 3)

    def spatial_positions(self) -> list[int]:
        if not self.spatial:
            return []
        return [p for s in range(self.max_nodes) for p in (self.left_pos(s), self.right_pos(s))]

    def categorical_groups(self) -> list[tuple[int, int]]:
        """(start, size) of each one-hot group: VIF type plus the per-slot
        element types."""
        groups = [(0, len(VIF_TYPES))]
        groups += [(self.slot_start(s), N_TYPE_CATS) for s in range(self.max_nodes)]
        return groups

    def to_json(self) -> dict:
        return {"max_nodes": self.max_nodes, "spatial": self.spatial}

    @classmethod
    def from_json(cls, payload: dict) -> "FeatureLayout":
        return cls(max_nodes=int(payload["max_nodes"]), spatial=bool(payload["spatial"]))


@dataclass
class FeatureVector:
    layout: FeatureLayout
    values: np.ndarray  # (width,) float64
    mask: np.ndarray  # (width,) uint8, 1 = unobserved
    slot_map: dict[str, int]
    colorable_slots: tuple[int, ...]

    def copy(self) -> "FeatureVector":
        return FeatureVector(
            layout=self.layout,
            values=self.values.copy(),
            mask=self.mask.copy(),
            slot_map=dict(self.slot_map),
            colorable_slots=self.colorable_slots,
        )

    def slot_color(self, s: int) -> np.ndarray:
        return self.values[self.layout.color_slice(s)]

    def check(self) -> None:
        lay = self.layout
        if self.values.shape != (lay.width,) or self.mask.shape != (lay.width,):
            raise StructuralError("feature vector width mismatch with layout")
        if self.mask[: lay.f_width].any():
            raise StructuralError("non-color features must be observed")
        for s in range(lay.max_nodes):
            if s not in self.slot_map.values():
                block = self.values[lay.slot_start(s) : lay.slot_start(s) + lay.slot_block]
                if block.any() or self.values[lay.color_slice(s)].any():
                    raise StructuralError(f"padded slot {s} is not all-zero")
                if self.mask[lay.color_slice(s)].any():
                    raise StructuralError(f"padded slot {s} is not marked observed")

    def to_json(self) -> dict:
        return {
            "layout": self.layout.to_json(),
            "values": self.values.tolist(),
            "mask": self.mask.tolist(),
            "slot_map": self.slot_map,
            "colorable_slots": list(self.colorable_slots),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FeatureVector":
        return cls(
            layout=FeatureLayout.from_json(payload["layout"]),
            values=np.asarray(payload["values"], dtype=np.float64),
            mask=np.asarray(payload["mask"], dtype=np.uint8),
            slot_map={k: int(v) for k, v in payload["slot_map"].items()},
            colorable_slots=tuple(payload["colorable_slots"]),
        )


def featurize(doc: InfographicDoc, layout: FeatureLayout | None = None) -> FeatureVector:
    """Deterministic fixed-length encoding of a document. Colors present on
    colorable nodes are observed; missing ones (wireframes) are marked
    unobserved so the vector is ready for imputation."""
    layout = layout or FeatureLayout(max_nodes=doc.max_nodes)
    problems = validate_doc(doc)
    if problems:
        if any("exceeds maximum" in p for p in problems):
            raise CapacityError("; ".join(problems))
        raise StructuralError("; ".join(problems))

    order = list(doc.preorder())
    if len(order) > layout.max_nodes:
        raise CapacityError(f"{len(order)} nodes exceed layout capacity {layout.max_nodes}")

    idx = encode_nested_set(doc)
    values = np.zeros(layout.width, dtype=np.float64)
    mask = np.zeros(layout.width, dtype=np.uint8)

    values[VIF_TYPES.index(doc.vif_type)] = 1.0
    values[12] = float(len(doc.visual_groups))

    diag = float(np.hypot(doc.width, doc.height))
    if len(doc.visual_groups) >= 2:
        cents = []
        for gid in doc.visual_groups:
            x, y, w, h = doc.nodes[gid].bbox
            cents.append((x + w / 2.0, y + h / 2.0))
        dists = [
            float(np.hypot(cents[i + 1][0] - cents[i][0], cents[i + 1][1] - cents[i][1]))
            for i in range(len(cents) - 1)
        ]
        values[13] = float(np.mean(dists)) / diag

    descendant_count = {
        n.id: sum(1 for _ in _subtree(doc, n.id)) - 1 for n in order
    }

    slot_map: dict[str, int] = {}
    colorable: list[int] = []
    for s, node in enumerate(order):
        slot_map[node.id] = s
        values[layout.type_slice(s)][TYPE_CATS.index(_type_cat(node))] = 1.0
        x, y, w, h = node.bbox
        values[layout.rel_w_pos(s)] = w / doc.width
        values[layout.rel_h_pos(s)] = h / doc.height
        values[layout.rel_area_pos(s)] = node.pixel_area / (doc.width * doc.height)
        if node.kind == "visual_group":
            values[layout.group_size_pos(s)] = float(descendant_count[node.id])
        if layout.spatial:
            left, right = idx.indices[node.id]
            values[layout.left_pos(s)] = left / (2.0 * layout.max_nodes)
            values[layout.right_pos(s)] = right / (2.0 * layout.max_nodes)
        values[layout.exists_pos(s)] = 1.0

        if node.colorable:
            colorable.append(s)
            if node.color is not None:
                values[layout.color_slice(s)] = node.color.as_array()
            else:
                mask[layout.color_slice(s)] = 1

    vec = FeatureVector(
        layout=layout,
        values=values,
        mask=mask,
        slot_map=slot_map,
        colorable_slots=tuple(colorable),
    )
    vec.check()
    return vec


def _type_cat(node) -> str:
    if node.kind == "visual_group":
        return "visual_group"
    if node.kind == "background":
        return "background"
    return node.element_type


def _subtree(doc: InfographicDoc, nid: str):
    yield doc.nodes[nid]
    for c in doc.nodes[nid].children:
        yield from _subtree(doc, c)


def feature_column_names(layout: FeatureLayout) -> list[str]:
    """Stable column order of the vector, F then C (the CSV header)."""
    names = [f"vif_{v}" for v in VIF_TYPES]
    names += ["group_count", "group_distance"]
    for s in range(layout.max_nodes):
        names += [f"slot{s}_type_{c}" for c in TYPE_CATS]
        names += [f"slot{s}_rel_w", f"slot{s}_rel_h", f"slot{s}_rel_area", f"slot{s}_group_size"]
        if layout.spatial:
            names += [f"slot{s}_left", f"slot{s}_right"]
        names += [f"slot{s}_exists"]
    for s in range(layout.max_nodes):
        names += [f"slot{s}_L", f"slot{s}_a", f"slot{s}_b"]
    if len(names) != layout.width:
        raise StructuralError("column name list out of sync with layout")
    return names


def strip_spatial(vec: FeatureVector) -> FeatureVector:
    """Drop the per-slot nested-set index entries. Stripping an already
    stripped vector is an error."""
    if not vec.layout.spatial:
        raise StructuralError("vector already has no spatial features")
    drop = vec.layout.spatial_positions()
    keep = np.setdiff1d(np.arange(vec.layout.width), np.array(drop))
    new_layout = replace(vec.layout, spatial=False)
    out = FeatureVector(
        layout=new_layout,
        values=vec.values[keep],
        mask=vec.mask[keep],
        slot_map=dict(vec.slot_map),
        colorable_slots=vec.colorable_slots,
    )
    if out.values.shape != (new_layout.width,):
        raise StructuralError("strip produced inconsistent width")
    return out
