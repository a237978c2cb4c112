import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palettizer.colors import LabColor
from palettizer.model import (
    ElementNode,
    InfographicDoc,
    NestedSetIndex,
    StructuralError,
    decode_nested_set,
    doc_from_json,
    doc_to_json,
    encode_nested_set,
    validate_doc,
)


def make_doc(children_map, root="bg", width=400, height=300, max_nodes=19):
    """Build a doc from an {id: [child ids]} map; bboxes nest automatically."""
    nodes = {}
    depths = {root: 0}
    order = [root]
    i = 0
    while i < len(order):
        nid = order[i]
        i += 1
        for c in children_map.get(nid, ()):
            depths[c] = depths[nid] + 1
            order.append(c)
    for nid in order:
        d = depths[nid]
        pad = 4.0 * d
        nodes[nid] = ElementNode(
            id=nid,
            kind="background" if nid == root else "artistic",
            element_type=None if nid == root else "others",
            bbox=(pad, pad, width - 2 * pad, height - 2 * pad),
            pixel_area=10.0,
            children=tuple(children_map.get(nid, ())),
        )
    return InfographicDoc(width=width, height=height, root_id=root, nodes=nodes, max_nodes=max_nodes)


def brute_force_decode(indices):
    """Independent oracle: parent of n = the node with the tightest interval
    strictly containing n's interval, found by exhaustive scan."""
    children = {nid: [] for nid in indices}
    for nid, (l, r) in indices.items():
        best = None
        for mid, (ml, mr) in indices.items():
            if mid != nid and ml < l and r < mr:
                if best is None or (indices[best][1] - indices[best][0]) > (mr - ml):
                    best = mid
        if best is not None:
            children[best].append(nid)
    for nid in children:
        children[nid].sort(key=lambda c: indices[c][0])
    return {nid: tuple(kids) for nid, kids in children.items()}


def test_single_node_encoding():
    doc = make_doc({})
    idx = encode_nested_set(doc)
    assert idx.indices == {"bg": (1, 2)}


def test_two_leaf_children_encoding():
    doc = make_doc({"bg": ["a", "b"]})
    idx = encode_nested_set(doc)
    assert idx.indices == {"bg": (1, 6), "a": (2, 3), "b": (4, 5)}


def test_decode_matches_encode_small():
    doc = make_doc({"bg": ["a", "b"], "a": ["c"]})
    idx = encode_nested_set(doc)
    shape = decode_nested_set(idx)
    assert shape == {"bg": ("a", "b"), "a": ("c",), "b": (), "c": ()}


@st.composite
def random_tree(draw):
    n = draw(st.integers(1, 19))
    # parent[i] < i gives a uniform-ish random recursive tree
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    children = {f"n{i}": [] for i in range(n)}
    for i, p in enumerate(parents):
        if p is not None:
            children[f"n{p}"].append(f"n{i}")
    return {k: v for k, v in children.items() if v}


@given(random_tree())
@settings(max_examples=200, deadline=None)
def test_encode_decode_round_trip(children_map):
    doc = make_doc(children_map, root="n0", max_nodes=19)
    idx = encode_nested_set(doc)
    shape = decode_nested_set(idx)
    expected = {n.id: n.children for n in doc.nodes.values()}
    assert shape == expected
    assert shape == brute_force_decode(idx.indices)
    # nesting predicate agrees with ancestry
    parents = doc.parent_map()
    for a in doc.nodes:
        anc = set()
        p = parents[a]
        while p is not None:
            anc.add(p)
            p = parents[p]
        for b in doc.nodes:
            if a != b:
                assert idx.nests_inside(a, b) == (b in anc)


def test_encode_detects_cycle():
    doc = make_doc({"bg": ["a"], "a": ["b"]})
    nodes = dict(doc.nodes)
    nodes["b"] = ElementNode(
        id="b", kind="artistic", element_type="others",
        bbox=nodes["b"].bbox, pixel_area=1.0, children=("a",),
    )
    cyclic = InfographicDoc(width=400, height=300, root_id="bg", nodes=nodes)
    with pytest.raises(StructuralError):
        encode_nested_set(cyclic)


def test_decode_rejects_malformed():
    with pytest.raises(StructuralError):
        decode_nested_set(NestedSetIndex({"a": (1, 3), "b": (2, 4)}))
    with pytest.raises(StructuralError):
        decode_nested_set(NestedSetIndex({"a": (2, 3)}))
    with pytest.raises(StructuralError):
        decode_nested_set(NestedSetIndex({"a": (3, 1)}))


def test_validate_well_formed():
    doc = make_doc({"bg": ["a", "b"]})
    assert validate_doc(doc) == []


def test_validate_containment_violation():
    doc = make_doc({"bg": ["a"]})
    nodes = dict(doc.nodes)
    nodes["a"] = ElementNode(
        id="a", kind="artistic", element_type="others",
        bbox=(-5.0, 0.0, 100.0, 100.0), pixel_area=1.0,
    )
    bad = InfographicDoc(width=400, height=300, root_id="bg", nodes=nodes)
    problems = validate_doc(bad)
    assert any("a" in p and "escapes" in p for p in problems)


def test_validate_node_count():
    doc = make_doc({"bg": [f"c{i}" for i in range(19)]})  # 20 nodes total
    problems = validate_doc(doc)
    assert any("exceeds maximum 19" in p for p in problems)


def test_json_round_trip():
    doc = make_doc({"bg": ["a", "b"], "a": ["c"]})
    doc = doc.with_colors({"a": LabColor(53.0, 10.0, -20.0)})
    payload = doc_to_json(doc)
    assert payload["schema"] == "palettizer/1"
    back = doc_from_json(payload)
    assert back.root_id == doc.root_id
    assert set(back.nodes) == set(doc.nodes)
    assert back.nodes["a"].color is not None
    assert back.nodes["b"].color is None
    assert back.nodes["a"].children == ("c",)


def test_colorable_excludes_groups():
    nodes = {
        "bg": ElementNode("bg", "background", (0, 0, 10, 10), 100.0, children=("g",)),
        "g": ElementNode("g", "visual_group", (1, 1, 8, 8), 0.0, children=("t",)),
        "t": ElementNode("t", "data", (2, 2, 4, 4), 8.0, element_type="text"),
    }
    doc = InfographicDoc(width=10, height=10, root_id="bg", nodes=nodes, visual_groups=("g",))
    assert validate_doc(doc) == []
    assert doc.colorable_ids() == ["bg", "t"]
