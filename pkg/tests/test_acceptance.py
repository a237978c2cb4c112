"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with the measured numbers. Run with `pytest -v -s` to see
the lines as they complete."""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from palettizer import kernels
from palettizer.colors import LabColor
from palettizer.extract import classify_shape, merge_gradient_segments, segment_regions
from palettizer.extract.features import strip_spatial
from palettizer.extract.segment import Segment
from palettizer.imputers import mean_method, nonspatial_vaeac_method, vaeac_method
from palettizer.metrics import EvalProtocolConfig, crs, cvs, nrmse, run_protocol
from palettizer.model import (
    ElementNode,
    InfographicDoc,
    decode_nested_set,
    encode_nested_set,
)
from palettizer.nnet import MLP
from palettizer.prefs import Palette, PreferenceSet, apply_bindings, load_lexicon, recommend
from palettizer.service import create_app
from palettizer.store import SessionStore
from palettizer.synth import flat_card, gradient_card, make_corpus, make_docs, rotated_shape_suite
from palettizer.vaeac import (
    FeatureKinds,
    ImputationRequest,
    VaeacConfig,
    elbo_and_grads,
    impute,
    train,
)

from conftest import load_de2000_pairs


def report(name: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def tiny_model():
    corpus = make_corpus(200, seed=77)
    model, _ = train(corpus, VaeacConfig(epochs=8, hidden=32, latent_dim=4, seed=5, batch_size=64))
    return model, corpus


# --- criterion 1: CIEDE2000 verification pairs ---

def test_ciede2000_verification_pairs():
    pairs = load_de2000_pairs()
    t0 = time.perf_counter()
    worst = 0.0
    for lab1, lab2, expected in pairs:
        got = float(kernels.ciede2000(lab1[None, :], lab2[None, :])[0])
        worst = max(worst, abs(got - expected))
    elapsed = time.perf_counter() - t0
    ok = len(pairs) == 34 and worst < 1e-4 and elapsed < 1.0
    report(
        "ciede2000-verification",
        ok,
        f"{len(pairs)} pairs, worst |err| {worst:.2e} (tol 1e-4), {elapsed * 1e3:.1f} ms (< 1 s)",
    )


# --- criterion 2: nested-set round trip ---

def _random_tree_doc(rng) -> InfographicDoc:
    n = int(rng.integers(1, 20))
    parents = [None] + [int(rng.integers(0, i)) for i in range(1, n)]
    children = {i: [] for i in range(n)}
    for i, p in enumerate(parents):
        if p is not None:
            children[p].append(i)
    nodes = {}
    for i in range(n):
        nodes[f"n{i}"] = ElementNode(
            id=f"n{i}",
            kind="background" if i == 0 else "artistic",
            element_type=None if i == 0 else "others",
            bbox=(0, 0, 100, 100),
            pixel_area=1.0,
            children=tuple(f"n{c}" for c in children[i]),
        )
    return InfographicDoc(width=100, height=100, root_id="n0", nodes=nodes)


def test_nested_set_round_trip_and_hand_case():
    rng = np.random.default_rng(12345)
    failures = 0
    for _ in range(1000):
        doc = _random_tree_doc(rng)
        idx = encode_nested_set(doc)
        shape = decode_nested_set(idx)
        expected = {node.id: node.children for node in doc.nodes.values()}
        if shape != expected:
            failures += 1

    hand = InfographicDoc(
        width=10,
        height=10,
        root_id="r",
        nodes={
            "r": ElementNode("r", "background", (0, 0, 10, 10), 1.0, children=("a", "b")),
            "a": ElementNode("a", "artistic", (0, 0, 5, 5), 1.0, element_type="others"),
            "b": ElementNode("b", "artistic", (5, 5, 5, 5), 1.0, element_type="others"),
        },
    )
    hand_idx = encode_nested_set(hand).indices
    hand_ok = hand_idx == {"r": (1, 6), "a": (2, 3), "b": (4, 5)}
    ok = failures == 0 and hand_ok
    report(
        "nested-set-round-trip",
        ok,
        f"1000 random trees, {failures} failures; double-visit hand case {'matches' if hand_ok else 'differs'}",
    )


# --- criterion 3: segmentation suite ---

def test_segmentation_suite():
    rng = np.random.default_rng(2024)
    bad_cards = 0
    for _ in range(100):
        card = flat_card(rng)
        segs = segment_regions(card.image)
        if len(segs) != len(card.masks):
            bad_cards += 1
            continue
        for truth in card.masks:
            if sum(1 for s in segs if np.array_equal(s.mask, truth)) != 1:
                bad_cards += 1
                break

    grad_bad = 0
    for i in range(10):
        card = gradient_card(np.random.default_rng(500 + i))
        pre = segment_regions(card.image)
        post = merge_gradient_segments(pre)
        shape_match = any(np.array_equal(s.mask, card.masks[1]) for s in post)
        if not (len(pre) > 2 and len(post) == 2 and shape_match):
            grad_bad += 1
    ok = bad_cards == 0 and grad_bad == 0
    report(
        "segmentation-suite",
        ok,
        f"100 flat cards exact ({bad_cards} bad); 10 gradient cards collapse to one segment ({grad_bad} bad)",
    )


# --- criterion 4: shape classification ---

def test_shape_classification_accuracy():
    total = correct = 0
    for shape, _rot, mask in rotated_shape_suite():
        seg = Segment(id=0, mask=mask, mean_lab=np.zeros(3), bbox=(0, 0, 1, 1), area=int(mask.sum()))
        total += 1
        if classify_shape(seg) == shape:
            correct += 1
    accuracy = correct / total
    ok = accuracy >= 0.95
    report("shape-classification", ok, f"{correct}/{total} = {accuracy:.1%} (threshold 95%)")


# --- criterion 5: ELBO gradient check ---

def test_elbo_gradient_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(42)
    kinds = FeatureKinds(width=12, cat_groups=((4, 3),))
    latent, hidden = 2, 8
    enc = MLP([24, hidden, hidden, 2 * latent], rng)
    pri = MLP([24, hidden, hidden, 2 * latent], rng)
    dec = MLP([latent + 24, hidden, hidden, 2 * kinds.n_cont + kinds.n_cat], rng)
    nets = [enc, pri, dec]
    sizes = [m.flat_params().size for m in nets]

    B = 4
    x = rng.normal(0, 1, (B, 12))
    x[:, 4:7] = 0.0
    for i in range(B):
        x[i, 4 + rng.integers(0, 3)] = 1.0
    b = np.zeros((B, 12))
    b[:, 0:3] = rng.integers(0, 2, (B, 1))
    b[:, 4:7] = rng.integers(0, 2, (B, 1))
    b[:, 9] = 1.0
    eps = rng.standard_normal((B, latent))

    def get():
        return np.concatenate([m.flat_params() for m in nets])

    def put(v):
        pos = 0
        for m, s in zip(nets, sizes):
            m.set_flat_params(v[pos : pos + s])
            pos += s

    def value(v):
        old = get()
        put(v)
        e, _, _ = elbo_and_grads(enc, pri, dec, kinds, x, b, eps, want_grads=False)
        put(old)
        return e

    worst = 0.0
    for point in range(10):
        p0 = get() + (rng.normal(0, 0.05, get().size) if point else 0.0)
        put(p0)
        _, grads, _ = elbo_and_grads(enc, pri, dec, kinds, x, b, eps)
        analytic = np.concatenate(
            [MLP.flat_grads(grads[k]) for k in ("encoder", "prior", "decoder")]
        )
        coords = rng.choice(p0.size, 150, replace=False)
        fd = np.empty(len(coords))
        for k, j in enumerate(coords):
            h = 1e-5 * max(1.0, abs(p0[j]))
            up, down = p0.copy(), p0.copy()
            up[j] += h
            down[j] -= h
            fd[k] = (value(up) - value(down)) / (2 * h)
        sub = analytic[coords]
        rel = np.linalg.norm(fd - sub) / max(np.linalg.norm(sub), 1e-12)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 60.0
    report(
        "elbo-gradient-check",
        ok,
        f"10 points, worst norm-relative error {worst:.2e} (tol 1e-4), {elapsed:.1f} s (< 60 s)",
    )


# --- criterion 6: pass-through over 10,000 impute calls ---

def test_pass_through_ten_thousand_calls(tiny_model):
    model, corpus = tiny_model
    rng = np.random.default_rng(99)
    violations = 0
    calls = 10_000
    for c in range(calls):
        base = corpus[int(rng.integers(0, len(corpus)))]
        vec = base.copy()
        slots = list(vec.colorable_slots)
        n_hide = int(rng.integers(1, len(slots) + 1))
        for s in rng.choice(slots, size=n_hide, replace=False):
            sl = vec.layout.color_slice(int(s))
            vec.mask[sl] = 1
            vec.values[sl] = 0.0
        out = impute(model, ImputationRequest(vector=vec, n_samples=1), seed=c)[0]
        observed = vec.mask == 0
        if not np.array_equal(out.values[observed], vec.values[observed]):
            violations += 1
    ok = violations == 0
    report("impute-pass-through", ok, f"{calls} randomized calls, {violations} violations")


# --- criterion 7: qualitative ordering reproduction ---

def test_spatial_ordering_reproduction():
    t0 = time.perf_counter()
    corpus = make_corpus(2000, seed=42)
    split = int(round(0.8 * len(corpus)))
    train_set, test_set = corpus[:split], corpus[split:]

    cfg = VaeacConfig(seed=1)  # desk-scale defaults
    model, _ = train(train_set, cfg)
    model_ns, _ = train([strip_spatial(v) for v in train_set], cfg)

    methods = {
        "vaeac": vaeac_method(model),
        "vaeac-nonspatial": nonspatial_vaeac_method(model_ns),
        "mean": mean_method(np.stack([v.values for v in train_set]).mean(axis=0)),
    }
    table = run_protocol(methods, test_set, model.std, EvalProtocolConfig(seed=9))
    elapsed = time.perf_counter() - t0

    v, ns, mean_row = table.rows["vaeac"], table.rows["vaeac-nonspatial"], table.rows["mean"]
    ok = (
        v["nrmse"] < ns["nrmse"]
        and v["crs"] < ns["crs"]
        and v["nrmse"] < mean_row["nrmse"]
        and v["crs"] < mean_row["crs"]
        and v["cvs"] > 0.0
        and elapsed < 600.0
    )
    report(
        "spatial-ordering",
        ok,
        (
            f"nrmse {v['nrmse']:.4f} < nonspatial {ns['nrmse']:.4f} < ... mean {mean_row['nrmse']:.4f}; "
            f"crs {v['crs']:.2f} < nonspatial {ns['crs']:.2f}, mean {mean_row['crs']:.2f}; "
            f"cvs {v['cvs']:.2f} > 0; {elapsed:.0f} s (< 600 s)"
        ),
    )


# --- criterion 8: metric oracle equivalence ---

def test_metric_oracle_equivalence():
    from palettizer.colors import ciede2000 as scalar_de

    rng = np.random.default_rng(321)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(1, 6))
        truth = np.column_stack(
            [rng.uniform(5, 95, m), rng.uniform(-60, 60, m), rng.uniform(-60, 60, m)]
        )
        imps = [
            np.column_stack(
                [rng.uniform(5, 95, m), rng.uniform(-60, 60, m), rng.uniform(-60, 60, m)]
            )
            for _ in range(n)
        ]
        stds = rng.uniform(0.5, 3.0, 3 * m)

        # brute-force oracle, plain loops
        acc = 0.0
        for imp in imps:
            se = sum(
                ((truth[k][ch] - imp[k][ch]) / stds[3 * k + ch]) ** 2
                for k in range(m)
                for ch in range(3)
            )
            acc += (se / (3 * m)) ** 0.5
        o_nrmse = acc / n
        o_crs = sum(
            sum(scalar_de(LabColor(*truth[k]), LabColor(*imp[k])) for k in range(m)) / m
            for imp in imps
        )
        o_cvs = sum(
            sum(scalar_de(LabColor(*imps[i][k]), LabColor(*imps[j][k])) for k in range(m)) / m
            for i in range(n)
            for j in range(i + 1, n)
        )

        worst = max(
            worst,
            abs(nrmse(truth.reshape(-1), [im.reshape(-1) for im in imps], stds) - o_nrmse),
            abs(crs(truth, imps) - o_crs),
            abs(cvs(imps) - o_cvs),
        )

    # trivial identities
    t = np.array([[50.0, 1.0, 1.0]])
    identity_ok = (
        nrmse(t.reshape(-1), [t.reshape(-1)], np.ones(3)) == 0.0
        and crs(t, [t.copy(), t.copy()]) == 0.0
        and cvs([t.copy(), t.copy()]) == 0.0
    )
    ok = worst < 1e-9 and identity_ok
    report(
        "metric-oracle",
        ok,
        f"100 random cases, worst |delta| {worst:.2e} (tol 1e-9); identity imputer scores all zero: {identity_ok}",
    )


# --- criterion 9: binding law ---

def test_binding_law(tiny_model):
    model, corpus = tiny_model
    draws = 10_000
    palettes = [
        Palette(
            assignment={"a": LabColor(10, 0, 0), "b": LabColor(90, 0, 0)},
            source="model",
            request_hash="x",
            sample_index=0,
        )
        for _ in range(draws)
    ]
    out = apply_bindings(palettes, (frozenset({"a", "b"}),), {"a": 30.0, "b": 70.0}, seed=2)
    wins_a = sum(1 for p in out if p.assignment["a"].l == 10)
    freq = wins_a / draws
    law_ok = abs(freq - 0.3) < 0.02

    lexicon = load_lexicon()
    doc = make_docs(1, seed=55)[0]
    ids = doc.colorable_ids()
    group = frozenset(ids[1:4])
    mono_total = mono_ok = 0
    for seed in range(20):
        for p in recommend(doc, PreferenceSet(bindings=(group,)), model, lexicon, n=5, seed=seed):
            mono_total += 1
            colors = {p.assignment[nid].as_array().tobytes() for nid in group}
            mono_ok += int(len(colors) == 1)
    ok = law_ok and mono_ok == mono_total and mono_total > 0
    report(
        "binding-law",
        ok,
        (
            f"area 30/70 over {draws} draws: win rate {freq:.3f} (target 0.300 +/- 0.02); "
            f"bound sets monochrome in {mono_ok}/{mono_total} palettes"
        ),
    )


# --- criterion 10: service fuzz and durability ---

def _garbage_bodies(rng, doc_payload):
    kind = rng.integers(0, 8)
    if kind == 0:
        return rng.bytes(int(rng.integers(1, 200)))
    if kind == 1:
        return b"{" + rng.bytes(10)
    if kind == 2:
        return json.dumps({"doc": {"schema": "nope"}}).encode()
    if kind == 3:
        return json.dumps({"doc_id": "missing" + str(rng.integers(100))}).encode()
    if kind == 4:
        return json.dumps({"doc": doc_payload, "n": int(rng.integers(-10, 0))}).encode()
    if kind == 5:
        return json.dumps(
            {"doc": doc_payload, "preferences": {"exact": {"bg": "#GGGGGG"}}}
        ).encode()
    if kind == 6:
        return json.dumps({"doc": doc_payload, "preferences": {"vague": {"bg": "zzz"}}}).encode()
    return json.dumps([1, 2, 3]).encode()


def test_service_fuzz_and_bookmark_durability(tmp_path, tiny_model):
    from palettizer.model import doc_to_json

    model, _ = tiny_model
    lexicon = load_lexicon()
    store_path = tmp_path / "store.json"
    app = create_app(model=model, lexicon=lexicon, store=SessionStore(store_path))
    client = TestClient(app, raise_server_exceptions=False)
    doc_payload = doc_to_json(make_docs(1, seed=31)[0])

    rng = np.random.default_rng(7)
    endpoints = [
        ("POST", "/api/recommend"),
        ("POST", "/api/analyze"),
        ("POST", "/api/sessions/ghost/bookmarks"),
        ("DELETE", "/api/sessions/ghost/bookmarks/x"),
        ("GET", "/api/sessions/ghost"),
        ("POST", "/api/sessions/ghost/choose"),
    ]
    crashes = 0
    non_4xx = 0
    total = 1000
    for i in range(total):
        method, url = endpoints[int(rng.integers(0, len(endpoints)))]
        body = _garbage_bodies(rng, doc_payload)
        try:
            r = client.request(method, url, content=body, headers={"content-type": "application/json"})
        except Exception:
            crashes += 1
            continue
        if not (400 <= r.status_code < 500):
            non_4xx += 1
        else:
            try:
                assert "error" in r.json()
            except Exception:
                non_4xx += 1

    sid = client.post("/api/sessions").json()["id"]
    bid = client.post(
        f"/api/sessions/{sid}/bookmarks", json={"palette": {"colors": {"bg": "#112233"}}}
    ).json()["id"]
    client2 = TestClient(
        create_app(model=model, lexicon=lexicon, store=SessionStore(store_path)),
        raise_server_exceptions=False,
    )
    survived = [b["id"] for b in client2.get(f"/api/sessions/{sid}/bookmarks").json()["bookmarks"]]
    durable = survived == [bid]

    ok = crashes == 0 and non_4xx == 0 and durable
    report(
        "service-fuzz",
        ok,
        (
            f"{total} malformed requests: {crashes} crashes, {non_4xx} non-structured/non-4xx; "
            f"bookmark survived restart: {durable}"
        ),
    )
