"""Tree-structured infographic documents and their nested-set encoding.

A document is a tree rooted at the background canvas. Visual-group nodes sit
directly under the root; their descendants are the artistic and data
elements belonging to that group. Parent-child links mean bounding-box
inclusion; sibling order is reading order (top-to-bottom, then
left-to-right by bbox origin) so feature vectors are reproducible.

Documents are immutable values once built: edits construct new documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from .colors import LabColor, hex_to_lab, lab_to_hex

MAX_NODES = 19

ARTISTIC_TYPES = ("triangle", "square", "rectangle", "pentagon", "circle", "others")
DATA_TYPES = ("index", "text", "icon", "arrow")
KINDS = ("artistic", "data", "visual_group", "background")

# Four names appear in the source taxonomy; the rest are opaque labels kept
# only so the one-hot stays 12 wide.
VIF_TYPES = (
    "landscape",
    "portrait",
    "clock",
    "up-ladder",
    "down-ladder",
    "left-wing",
    "right-wing",
    "zigzag",
    "star",
    "spiral",
    "grid",
    "free",
)

DOC_SCHEMA = "palettizer/1"


class StructuralError(ValueError):
    """A document violates a structural invariant (cycles, bad indices)."""


class CapacityError(StructuralError):
    """More nodes than the configured maximum."""


Bbox = tuple[float, float, float, float]


@dataclass(frozen=True)
class ElementNode:
    id: str
    kind: str
    bbox: Bbox
    pixel_area: float
    element_type: Optional[str] = None
    color: Optional[LabColor] = None
    children: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "artistic" and self.element_type not in ARTISTIC_TYPES:
            raise ValueError(f"artistic node {self.id} has type {self.element_type!r}")
        if self.kind == "data" and self.element_type not in DATA_TYPES:
            raise ValueError(f"data node {self.id} has type {self.element_type!r}")
        if self.kind in ("visual_group", "background") and self.element_type is not None:
            raise ValueError(f"{self.kind} node {self.id} must not carry an element_type")

    @property
    def colorable(self) -> bool:
        return self.kind != "visual_group"


@dataclass(frozen=True)
class InfographicDoc:
    width: int
    height: int
    root_id: str
    nodes: dict[str, ElementNode]
    vif_type: str = "free"
    visual_groups: tuple[str, ...] = ()
    max_nodes: int = MAX_NODES

    def node(self, node_id: str) -> ElementNode:
        return self.nodes[node_id]

    @property
    def root(self) -> ElementNode:
        return self.nodes[self.root_id]

    def preorder(self) -> Iterator[ElementNode]:
        """Yield nodes in pre-order; raises StructuralError on cycles."""
        seen: set[str] = set()
        stack = [self.root_id]
        while stack:
            nid = stack.pop()
            if nid in seen:
                raise StructuralError(f"node {nid} reachable twice (cycle or DAG)")
            seen.add(nid)
            node = self.nodes[nid]
            yield node
            stack.extend(reversed(node.children))

    def depth(self, node_id: str) -> int:
        parents = self.parent_map()
        d = 0
        while parents.get(node_id) is not None:
            node_id = parents[node_id]
            d += 1
        return d

    def parent_map(self) -> dict[str, Optional[str]]:
        parents: dict[str, Optional[str]] = {self.root_id: None}
        for node in self.nodes.values():
            for c in node.children:
                parents[c] = node.id
        return parents

    def colorable_ids(self) -> list[str]:
        return [n.id for n in self.preorder() if n.colorable]

    def with_colors(self, assignment: dict[str, LabColor]) -> "InfographicDoc":
        nodes = {
            nid: (replace(n, color=assignment[nid]) if nid in assignment else n)
            for nid, n in self.nodes.items()
        }
        return replace(self, nodes=nodes)


@dataclass(frozen=True)
class NestedSetIndex:
    """Per-node (left, right) visit numbers of the double-visit pre-order
    traversal. Descendants nest strictly inside their ancestors."""

    indices: dict[str, tuple[int, int]]

    def nests_inside(self, inner: str, outer: str) -> bool:
        li, ri = self.indices[inner]
        lo, ro = self.indices[outer]
        return lo < li and ri < ro


def encode_nested_set(doc: InfographicDoc) -> NestedSetIndex:
    """Assign left on entry and right on exit of a pre-order walk; the root
    gets left=1. Children are visited in stored sibling order."""
    indices: dict[str, tuple[int, int]] = {}
    counter = 1
    seen: set[str] = set()

    # (node id, entered) pairs; explicit stack to detect cycles cheaply
    stack: list[tuple[str, bool]] = [(doc.root_id, False)]
    pending_left: dict[str, int] = {}
    while stack:
        nid, entered = stack.pop()
        if entered:
            indices[nid] = (pending_left[nid], counter)
            counter += 1
            continue
        if nid in seen:
            raise StructuralError(f"node {nid} reachable twice (cycle or DAG)")
        seen.add(nid)
        if nid not in doc.nodes:
            raise StructuralError(f"child id {nid} missing from node table")
        pending_left[nid] = counter
        counter += 1
        stack.append((nid, True))
        for child in reversed(doc.nodes[nid].children):
            stack.append((child, False))
    return NestedSetIndex(indices)


def decode_nested_set(idx: NestedSetIndex) -> dict[str, tuple[str, ...]]:
    """Reconstruct the unique tree shape (id -> ordered child ids) whose
    encoding equals `idx`. Raises StructuralError on malformed indices."""
    items = sorted(idx.indices.items(), key=lambda kv: kv[1][0])
    n = len(items)
    used = [i for _, pair in items for i in pair]
    if sorted(used) != list(range(1, 2 * n + 1)):
        raise StructuralError("indices must be a permutation of 1..2n")
    for nid, (left, right) in items:
        if left >= right:
            raise StructuralError(f"node {nid}: left {left} >= right {right}")

    children: dict[str, list[str]] = {nid: [] for nid, _ in items}
    stack: list[tuple[str, int, int]] = []
    for nid, (left, right) in items:
        while stack and stack[-1][2] < left:
            stack.pop()
        if stack:
            _, pl, pr = stack[-1]
            if not (pl < left and right < pr):
                raise StructuralError(f"node {nid}: ({left},{right}) not nested in parent")
            children[stack[-1][0]].append(nid)
        elif left != 1:
            raise StructuralError("multiple roots or root left index is not 1")
        stack.append((nid, left, right))
    return {nid: tuple(kids) for nid, kids in children.items()}


def validate_doc(doc: InfographicDoc) -> list[str]:
    """Return one message per invariant violation; empty means valid."""
    problems: list[str] = []
    root = doc.nodes.get(doc.root_id)
    if root is None:
        return [f"root {doc.root_id}: missing from node table"]
    if root.kind != "background":
        problems.append(f"root {doc.root_id}: kind is {root.kind}, not background")

    try:
        reached = [n.id for n in doc.preorder()]
    except StructuralError as exc:
        return problems + [str(exc)]

    if len(reached) != len(doc.nodes):
        orphans = set(doc.nodes) - set(reached)
        for nid in sorted(orphans):
            problems.append(f"node {nid}: unreachable from root")
    if len(doc.nodes) > doc.max_nodes:
        problems.append(f"doc: {len(doc.nodes)} nodes exceeds maximum {doc.max_nodes}")

    for node in doc.nodes.values():
        if node.kind == "background" and node.id != doc.root_id:
            problems.append(f"node {node.id}: background kind off the root")
        px, py, pw, ph = node.bbox
        for cid in node.children:
            child = doc.nodes.get(cid)
            if child is None:
                problems.append(f"node {node.id}: child {cid} missing")
                continue
            cx, cy, cw, ch = child.bbox
            eps = 1e-6
            if cx < px - eps or cy < py - eps or cx + cw > px + pw + eps or cy + ch > py + ph + eps:
                problems.append(f"node {cid}: bbox escapes parent {node.id}")
    for gid in doc.visual_groups:
        if gid not in doc.nodes or doc.nodes[gid].kind != "visual_group":
            problems.append(f"group {gid}: not a visual_group node")
    if doc.vif_type not in VIF_TYPES:
        problems.append(f"doc: unknown vif_type {doc.vif_type!r}")
    return problems


def _node_to_json(node: ElementNode) -> dict:
    return {
        "id": node.id,
        "kind": node.kind,
        "element_type": node.element_type,
        "bbox": list(node.bbox),
        "pixel_area": node.pixel_area,
        "color": lab_to_hex(node.color) if node.color is not None else None,
        "children": list(node.children),
    }


def doc_to_json(doc: InfographicDoc) -> dict:
    return {
        "schema": DOC_SCHEMA,
        "width": doc.width,
        "height": doc.height,
        "vif_type": doc.vif_type,
        "visual_groups": list(doc.visual_groups),
        "root": doc.root_id,
        "nodes": [_node_to_json(doc.nodes[n.id]) for n in doc.preorder()],
    }


def doc_from_json(payload: dict) -> InfographicDoc:
    if payload.get("schema") != DOC_SCHEMA:
        raise StructuralError(f"unsupported document schema {payload.get('schema')!r}")
    nodes = {}
    for item in payload["nodes"]:
        nodes[item["id"]] = ElementNode(
            id=item["id"],
            kind=item["kind"],
            element_type=item.get("element_type"),
            bbox=tuple(float(v) for v in item["bbox"]),
            pixel_area=float(item["pixel_area"]),
            color=hex_to_lab(item["color"]) if item.get("color") else None,
            children=tuple(item.get("children", ())),
        )
    doc = InfographicDoc(
        width=int(payload["width"]),
        height=int(payload["height"]),
        root_id=payload["root"],
        nodes=nodes,
        vif_type=payload.get("vif_type", "free"),
        visual_groups=tuple(payload.get("visual_groups", ())),
    )
    problems = validate_doc(doc)
    if problems:
        raise StructuralError("; ".join(problems))
    return doc


def load_doc(path) -> InfographicDoc:
    with open(path, "r", encoding="utf-8") as fh:
        return doc_from_json(json.load(fh))


def save_doc(doc: InfographicDoc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc_to_json(doc), fh, indent=2, sort_keys=True)
