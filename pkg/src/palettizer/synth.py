"""Synthetic infographics with known ground truth.

Two families of outputs:

* Test cards (flat-color shapes, gradient shapes, rotated shape masks) with
  exact pixel masks, used to verify the extraction pipeline.

* Random documents for training corpora. Node colors follow a documented
  spatial law so that models seeing the nested-set indices have strictly
  more signal than models without them:

      L   = 20 + 60 * left / (2 * max_nodes)
      hue = 360 * right / (2 * max_nodes) degrees
      a   = 32 * cos(hue),  b = 32 * sin(hue)

  plus N(0, sigma) noise per channel, snapped into the sRGB gamut. The
  tree shape varies per item, so a slot's (left, right) pair is not
  predictable from the slot position alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from . import kernels
from .colors import LabColor, snap_to_gamut
from .extract.features import FeatureLayout, FeatureVector, N_TYPE_CATS, TYPE_CATS, featurize
from .extract.raster import AnnotationSet, DataElement, RasterImage
from .model import (
    ARTISTIC_TYPES,
    DATA_TYPES,
    ElementNode,
    InfographicDoc,
    MAX_NODES,
    VIF_TYPES,
    encode_nested_set,
)

SHAPE_NAMES = ("triangle", "square", "rectangle", "pentagon", "circle")

LAW_CHROMA = 32.0
LAW_NOISE_SIGMA = 2.0


# ---------------------------------------------------------------------------
# shape rasterization

def shape_vertices(shape: str, cx: float, cy: float, r: float, rotation_deg: float) -> list[tuple[float, float]]:
    rot = math.radians(rotation_deg)
    if shape == "triangle":
        angles = [math.radians(a) for a in (90, 210, 330)]
    elif shape == "square":
        angles = [math.radians(a) for a in (45, 135, 225, 315)]
    elif shape == "pentagon":
        angles = [math.radians(90 + 72 * k) for k in range(5)]
    elif shape == "rectangle":
        # aspect 2:1, r is the half-diagonal
        a, b = r * 2 / math.sqrt(5), r / math.sqrt(5)
        corners = [(a, b), (-a, b), (-a, -b), (a, -b)]
        return [
            (cx + x * math.cos(rot) - y * math.sin(rot), cy + x * math.sin(rot) + y * math.cos(rot))
            for x, y in corners
        ]
    else:
        raise ValueError(f"no vertices for shape {shape!r}")
    return [(cx + r * math.cos(a + rot), cy - r * math.sin(a + rot)) for a in angles]


def shape_mask(shape: str, width: int, height: int, cx: float, cy: float, r: float, rotation_deg: float = 0.0) -> np.ndarray:
    """Rasterize one shape as a boolean mask (no anti-aliasing)."""
    img = Image.new("1", (width, height), 0)
    draw = ImageDraw.Draw(img)
    if shape == "circle":
        draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=1)
    else:
        draw.polygon(shape_vertices(shape, cx, cy, r, rotation_deg), fill=1)
    return np.asarray(img, dtype=bool)


def rotated_shape_suite(width: int = 160, height: int = 160, r: float = 55.0, step_deg: int = 15):
    """Yield (shape, rotation, mask) over the full rotation sweep."""
    for shape in SHAPE_NAMES:
        for rot in range(0, 360, step_deg):
            yield shape, rot, shape_mask(shape, width, height, width / 2, height / 2, r, rot)


# ---------------------------------------------------------------------------
# flat and gradient test cards

@dataclass
class TestCard:
    image: RasterImage
    masks: list[np.ndarray]  # background first, then each shape
    shapes: list[str]


def _distinct_lab_colors(rng: np.random.Generator, count: int, min_de: float = 8.0) -> np.ndarray:
    """Random displayable Lab colors, pairwise at least min_de apart."""
    chosen: list[np.ndarray] = []
    while len(chosen) < count:
        cand = np.array(
            [rng.uniform(20, 90), rng.uniform(-55, 55), rng.uniform(-55, 55)]
        )
        cand = snap_to_gamut(cand[None, :])[0]
        if all(
            float(kernels.ciede2000(cand[None, :], c[None, :])[0]) >= min_de for c in chosen
        ):
            chosen.append(cand)
    return np.array(chosen)


def flat_card(rng: np.random.Generator, width: int = 200, height: int = 160, n_shapes: int | None = None) -> TestCard:
    """Flat-color card: disjoint shapes on a solid background, every region
    pair more than the segmentation threshold apart."""
    if n_shapes is None:
        n_shapes = int(rng.integers(1, 4))
    colors = _distinct_lab_colors(rng, n_shapes + 1)
    rgb = kernels.lab_to_srgb(colors)

    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:, :] = rgb[0]

    cells = [(0, 0), (1, 0), (2, 0)][:n_shapes]
    cell_w = width // 3
    masks = []
    shapes = []
    for i, (cx_cell, _) in enumerate(cells):
        shape = SHAPE_NAMES[int(rng.integers(0, len(SHAPE_NAMES)))]
        r = float(rng.uniform(0.28, 0.40)) * min(cell_w, height)
        cx = cx_cell * cell_w + cell_w / 2
        cy = height / 2 + float(rng.uniform(-8, 8))
        mask = shape_mask(shape, width, height, cx, cy, r, float(rng.uniform(0, 360)))
        pixels[mask] = rgb[i + 1]
        masks.append(mask)
        shapes.append(shape)

    bg_mask = ~np.logical_or.reduce(masks) if masks else np.ones((height, width), bool)
    return TestCard(image=RasterImage(pixels), masks=[bg_mask] + masks, shapes=shapes)


def three_shape_card() -> TestCard:
    """Fixed card with three flat shapes: segmentation must produce exactly
    four segments with these pixel masks."""
    rng = np.random.default_rng(20240)
    return flat_card(rng, width=240, height=160, n_shapes=3)


def gradient_card(rng: np.random.Generator, width: int = 200, height: int = 160) -> TestCard:
    """A rectangle filled with a vertical lightness gradient (fixed hue) on
    a background of a well-separated hue. Region growing splits the
    gradient into bands; the KDE hue merge must collapse them to one."""
    bg_lab = snap_to_gamut(np.array([[85.0, 4.0, -40.0]]))[0]
    bg_rgb = kernels.lab_to_srgb(bg_lab[None, :])[0]
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:, :] = bg_rgb

    x0, y0, x1, y1 = width // 5, height // 8, width * 4 // 5, height * 7 // 8
    rows = np.arange(y0, y1)
    ll = 30.0 + 45.0 * (rows - y0) / max(1, len(rows) - 1)
    grad = np.stack([ll, np.full_like(ll, 42.0), np.full_like(ll, 30.0)], axis=1)
    grad_rgb = kernels.lab_to_srgb(grad)
    for i, y in enumerate(rows):
        pixels[y, x0:x1] = grad_rgb[i]

    mask = np.zeros((height, width), dtype=bool)
    mask[y0:y1, x0:x1] = True
    return TestCard(image=RasterImage(pixels), masks=[~mask, mask], shapes=["rectangle"])


def single_shape_card() -> tuple[RasterImage, AnnotationSet]:
    """One circle containing one text box, with explicit empty grouping:
    analyzing it yields the 3-node document background -> circle -> text."""
    width, height = 200, 160
    lab = np.array([[92.0, 2.0, 2.0], [45.0, 52.0, 8.0], [95.0, -2.0, 4.0]])
    rgb = kernels.lab_to_srgb(lab)
    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:, :] = rgb[0]
    mask = shape_mask("circle", width, height, 100, 80, 55)
    pixels[mask] = rgb[1]
    pixels[70:90, 75:125] = rgb[2]
    ann = AnnotationSet(
        data_elements=(DataElement(bbox=(75.0, 70.0, 50.0, 20.0), element_type="text"),),
        visual_groups=(),
    )
    return RasterImage(pixels), ann


# ---------------------------------------------------------------------------
# random documents under the spatial color law

def law_color(left: int, right: int, max_nodes: int = MAX_NODES) -> np.ndarray:
    span = 2.0 * max_nodes
    ll = 20.0 + 60.0 * left / span
    hue = math.radians(360.0 * right / span)
    return np.array([ll, LAW_CHROMA * math.cos(hue), LAW_CHROMA * math.sin(hue)])


def _law_with_noise(left: int, right: int, rng: np.random.Generator, max_nodes: int, sigma: float) -> LabColor:
    lab = law_color(left, right, max_nodes) + rng.normal(0.0, sigma, size=3)
    lab[0] = float(np.clip(lab[0], 2.0, 98.0))
    lab = snap_to_gamut(lab[None, :])[0]
    return LabColor(float(np.clip(lab[0], 0, 100)), float(lab[1]), float(lab[2]))


def _sub_bbox(rng: np.random.Generator, parent: tuple[float, float, float, float], k: int, total: int):
    """The k-th of `total` horizontal cells of the parent box, shrunk a bit."""
    x, y, w, h = parent
    cell_w = w / total
    margin_x = cell_w * rng.uniform(0.05, 0.15)
    margin_y = h * rng.uniform(0.05, 0.2)
    return (x + k * cell_w + margin_x, y + margin_y, cell_w - 2 * margin_x, h - 2 * margin_y)


def random_doc(
    rng: np.random.Generator,
    max_nodes: int = MAX_NODES,
    width: int = 320,
    height: int = 240,
    noise_sigma: float = LAW_NOISE_SIGMA,
) -> InfographicDoc:
    """Random grouped tree; colors assigned by the spatial law afterwards."""
    target = int(rng.integers(8, max_nodes + 1))
    n_groups = int(rng.integers(1, 4))

    nodes: dict[str, ElementNode] = {}
    counter = {"a": 0, "d": 0}

    def new_id(kind: str) -> str:
        counter[kind] += 1
        return f"{kind}{counter[kind]}"

    budget = target - 1 - n_groups  # minus root and group nodes
    group_children: list[list[ElementNode]] = [[] for _ in range(n_groups)]
    group_boxes = [_sub_bbox(rng, (0.0, 0.0, float(width), float(height)), g, n_groups) for g in range(n_groups)]

    def make_element(nid, kind, et, box, kids) -> ElementNode:
        if kids:
            xs0 = min([box[0]] + [k.bbox[0] for k in kids])
            ys0 = min([box[1]] + [k.bbox[1] for k in kids])
            xs1 = max([box[0] + box[2]] + [k.bbox[0] + k.bbox[2] for k in kids])
            ys1 = max([box[1] + box[3]] + [k.bbox[1] + k.bbox[3] for k in kids])
            box = (xs0, ys0, xs1 - xs0, ys1 - ys0)
        fill = float(rng.uniform(0.35, 0.95))
        node = ElementNode(
            id=nid, kind=kind, element_type=et, bbox=box,
            pixel_area=fill * box[2] * box[3], children=tuple(k.id for k in kids),
        )
        nodes[nid] = node
        return node

    def build_subtree(parent_box, depth) -> ElementNode:
        nonlocal budget
        if depth < 2 and budget > 1 and rng.random() < 0.55:
            et = ARTISTIC_TYPES[int(rng.integers(0, len(ARTISTIC_TYPES)))]
            nid = new_id("a")
            budget -= 1
            n_kids = int(rng.integers(1, min(3, budget) + 1)) if budget > 0 else 0
            kids = []
            for k in range(n_kids):
                if budget <= 0:
                    break
                kids.append(build_subtree(_sub_bbox(rng, parent_box, k, n_kids), depth + 1))
            return make_element(nid, "artistic", et, parent_box, kids)
        if rng.random() < 0.5:
            et = ARTISTIC_TYPES[int(rng.integers(0, len(ARTISTIC_TYPES)))]
            nid = new_id("a")
            kind = "artistic"
        else:
            et = DATA_TYPES[int(rng.integers(0, len(DATA_TYPES)))]
            nid = new_id("d")
            kind = "data"
        budget -= 1
        return make_element(nid, kind, et, parent_box, [])

    for gi in range(n_groups):
        groups_after = n_groups - gi - 1
        # keep at least one node spare for every later group
        avail = budget - groups_after
        n_top = int(rng.integers(1, min(4, max(1, avail)) + 1))
        for k in range(n_top):
            if budget <= groups_after:
                break
            group_children[gi].append(
                build_subtree(_sub_bbox(rng, group_boxes[gi], k, n_top), 1)
            )

    group_ids = []
    for gi in range(n_groups):
        kids = group_children[gi]
        gid = f"g{gi}"
        group_ids.append(gid)
        if kids:
            xs0 = min(k.bbox[0] for k in kids)
            ys0 = min(k.bbox[1] for k in kids)
            xs1 = max(k.bbox[0] + k.bbox[2] for k in kids)
            ys1 = max(k.bbox[1] + k.bbox[3] for k in kids)
            gb = (xs0, ys0, xs1 - xs0, ys1 - ys0)
        else:
            gb = group_boxes[gi]
        nodes[gid] = ElementNode(
            id=gid, kind="visual_group", bbox=gb, pixel_area=0.0,
            children=tuple(k.id for k in kids),
        )

    root = ElementNode(
        id="bg", kind="background", bbox=(0.0, 0.0, float(width), float(height)),
        pixel_area=float(width * height), children=tuple(group_ids),
    )
    nodes["bg"] = root

    doc = InfographicDoc(
        width=width, height=height, root_id="bg", nodes=nodes,
        vif_type=VIF_TYPES[int(rng.integers(0, len(VIF_TYPES)))],
        visual_groups=tuple(group_ids), max_nodes=max_nodes,
    )

    idx = encode_nested_set(doc)
    colors = {}
    for node in doc.preorder():
        if node.colorable:
            left, right = idx.indices[node.id]
            colors[node.id] = _law_with_noise(left, right, rng, max_nodes, noise_sigma)
    return doc.with_colors(colors)


def make_corpus(n: int, seed: int, max_nodes: int = MAX_NODES, noise_sigma: float = LAW_NOISE_SIGMA) -> list[FeatureVector]:
    rng = np.random.default_rng(seed)
    return [featurize(random_doc(rng, max_nodes=max_nodes, noise_sigma=noise_sigma)) for _ in range(n)]


def make_docs(n: int, seed: int, max_nodes: int = MAX_NODES, noise_sigma: float = LAW_NOISE_SIGMA) -> list[InfographicDoc]:
    rng = np.random.default_rng(seed)
    return [random_doc(rng, max_nodes=max_nodes, noise_sigma=noise_sigma) for _ in range(n)]


# ---------------------------------------------------------------------------
# independent feature reference (oracle for featurize)

def reference_features(doc: InfographicDoc, layout: FeatureLayout | None = None) -> np.ndarray:
    """Second, straightforward computation of the feature values, kept
    deliberately separate from featurize."""
    layout = layout or FeatureLayout(max_nodes=doc.max_nodes)
    out = np.zeros(layout.width)
    out[VIF_TYPES.index(doc.vif_type)] = 1.0
    out[12] = len(doc.visual_groups)

    centers = []
    for gid in doc.visual_groups:
        x, y, w, h = doc.nodes[gid].bbox
        centers.append((x + w / 2, y + h / 2))
    if len(centers) >= 2:
        total = 0.0
        for (x0, y0), (x1, y1) in zip(centers, centers[1:]):
            total += math.hypot(x1 - x0, y1 - y0)
        out[13] = (total / (len(centers) - 1)) / math.hypot(doc.width, doc.height)

    # recursive pre-order with explicit visit numbering
    lefts: dict[str, int] = {}
    rights: dict[str, int] = {}
    clock = [0]

    def walk(nid):
        clock[0] += 1
        lefts[nid] = clock[0]
        for c in doc.nodes[nid].children:
            walk(c)
        clock[0] += 1
        rights[nid] = clock[0]

    walk(doc.root_id)

    def count_descendants(nid):
        return sum(1 + count_descendants(c) for c in doc.nodes[nid].children)

    order = []

    def pre(nid):
        order.append(nid)
        for c in doc.nodes[nid].children:
            pre(c)

    pre(doc.root_id)

    for s, nid in enumerate(order):
        node = doc.nodes[nid]
        base = layout.slot_start(s)
        cat = "visual_group" if node.kind == "visual_group" else (
            "background" if node.kind == "background" else node.element_type
        )
        out[base + TYPE_CATS.index(cat)] = 1.0
        out[base + N_TYPE_CATS + 0] = node.bbox[2] / doc.width
        out[base + N_TYPE_CATS + 1] = node.bbox[3] / doc.height
        out[base + N_TYPE_CATS + 2] = node.pixel_area / (doc.width * doc.height)
        if node.kind == "visual_group":
            out[base + N_TYPE_CATS + 3] = count_descendants(nid)
        if layout.spatial:
            out[base + N_TYPE_CATS + 4] = lefts[nid] / (2 * layout.max_nodes)
            out[base + N_TYPE_CATS + 5] = rights[nid] / (2 * layout.max_nodes)
        out[base + layout.slot_block - 1] = 1.0
        if node.colorable and node.color is not None:
            out[layout.color_slice(s)] = node.color.as_array()
    return out


# ---------------------------------------------------------------------------
# rendering documents to images

def render_doc(doc: InfographicDoc) -> RasterImage:
    """Paint a document: background fill, then each colored node in
    pre-order. Artistic nodes draw their shape inscribed in the bbox; data
    elements draw compact glyph placeholders."""
    img = Image.new("RGB", (doc.width, doc.height))
    draw = ImageDraw.Draw(img)

    def rgb_of(node):
        arr = kernels.lab_to_srgb(node.color.as_array()[None, :])[0]
        return (int(arr[0]), int(arr[1]), int(arr[2]))

    draw.rectangle([0, 0, doc.width, doc.height], fill=rgb_of(doc.root))
    for node in doc.preorder():
        if node.id == doc.root_id or node.color is None:
            continue
        x, y, w, h = node.bbox
        cx, cy, r = x + w / 2, y + h / 2, min(w, h) / 2
        color = rgb_of(node)
        if node.kind == "artistic":
            shape = node.element_type if node.element_type in SHAPE_NAMES else "rectangle"
            if shape == "circle":
                draw.ellipse([cx - r, cy - r, cx + r, cy + r], fill=color)
            elif shape == "rectangle":
                draw.rectangle([x, y, x + w - 1, y + h - 1], fill=color)
            else:
                draw.polygon(shape_vertices(shape, cx, cy, r, 0.0), fill=color)
        else:
            pad_x, pad_y = w * 0.1, h * 0.3
            draw.rectangle([x + pad_x, y + pad_y, x + w - pad_x, y + h - pad_y], fill=color)
    return RasterImage(np.asarray(img, dtype=np.uint8))


def doc_annotations(doc: InfographicDoc) -> AnnotationSet:
    """Annotation sidecar for a synthetic document: its data elements with
    explicit group membership."""
    data_nodes = [n for n in doc.preorder() if n.kind == "data"]
    index_of = {n.id: i for i, n in enumerate(data_nodes)}
    groups = []
    for gid in doc.visual_groups:
        members = [
            index_of[n.id]
            for n in _walk(doc, gid)
            if n.kind == "data"
        ]
        groups.append(tuple(members))
    return AnnotationSet(
        data_elements=tuple(
            DataElement(bbox=n.bbox, element_type=n.element_type) for n in data_nodes
        ),
        visual_groups=tuple(groups),
        vif_type=doc.vif_type,
    )


def _walk(doc, nid):
    yield doc.nodes[nid]
    for c in doc.nodes[nid].children:
        yield from _walk(doc, c)
