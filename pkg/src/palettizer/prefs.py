"""User color preferences and the recommendation pipeline around the model.

Preferences come in three forms: exact Lab pins, vague words resolved
through the lexicon, and bindings (sets of nodes forced to share a color).
A recommendation expands vague words into k concrete variants, turns each
variant into a masked imputation request, samples the model across the
variants, deduplicates near-identical palettes, resolves bindings by
area-weighted choice, and truncates to the requested count.
"""

from __future__ import annotations

import difflib
import hashlib
import importlib.resources
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .colors import LabColor, hex_to_lab
from .extract.features import FeatureVector, featurize
from .model import InfographicDoc
from .vaeac import ImputationRequest, VaeacModel, impute

DUPLICATE_DE = 2.0  # palettes closer than this on every node are duplicates
DEFAULT_K = 3


class UnknownWordError(ValueError):
    def __init__(self, word: str, suggestions: list[str]):
        self.word = word
        self.suggestions = suggestions
        hint = f"; did you mean: {', '.join(suggestions)}" if suggestions else ""
        super().__init__(f"unknown preference word {word!r}{hint}")


class PreferenceError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    entries: dict[str, tuple[str, tuple[LabColor, ...]]]  # word -> (category, colors)

    def words(self) -> list[str]:
        return sorted(self.entries)

    def lookup(self, word: str) -> tuple[LabColor, ...]:
        key = word.strip().lower()
        if key not in self.entries:
            raise UnknownWordError(key, difflib.get_close_matches(key, self.entries, n=3))
        return self.entries[key][1]

    def category(self, word: str) -> str:
        return self.entries[word.strip().lower()][0]

    @classmethod
    def from_json(cls, payload: dict) -> "Lexicon":
        entries = {}
        for item in payload["entries"]:
            word = item["word"].strip().lower()
            colors = tuple(hex_to_lab(h) for h in item["colors"])
            if not colors:
                raise ValueError(f"lexicon entry {word!r} has no colors")
            entries[word] = (item["category"], colors)
        return cls(entries=entries)


def load_lexicon(path=None) -> Lexicon:
    if path is None:
        ref = importlib.resources.files("palettizer").joinpath("data/lexicon.json")
        payload = json.loads(ref.read_text(encoding="utf-8"))
    else:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    return Lexicon.from_json(payload)


@dataclass(frozen=True)
class PreferenceSet:
    exact: dict[str, LabColor] = field(default_factory=dict)
    vague: dict[str, str] = field(default_factory=dict)
    bindings: tuple[frozenset[str], ...] = ()

    def validate(self, doc: InfographicDoc) -> None:
        ids = set(doc.nodes)
        colorable = set(doc.colorable_ids())
        for nid in list(self.exact) + list(self.vague):
            if nid not in ids:
                raise PreferenceError(f"preference targets unknown node {nid!r}")
            if nid not in colorable:
                raise PreferenceError(f"node {nid!r} is not colorable")
        overlap = set(self.exact) & set(self.vague)
        if overlap:
            raise PreferenceError(f"nodes in both exact and vague preferences: {sorted(overlap)}")
        seen: set[str] = set()
        for group in self.bindings:
            for nid in group:
                if nid not in colorable:
                    raise PreferenceError(f"binding targets non-colorable node {nid!r}")
                if nid in seen:
                    raise PreferenceError(f"node {nid!r} appears in two bindings")
                seen.add(nid)
            pinned = {self.exact[nid].as_array().tobytes() for nid in group if nid in self.exact}
            if len(pinned) > 1:
                raise PreferenceError(f"binding {sorted(group)} pins two different exact colors")

    @property
    def is_concrete(self) -> bool:
        return not self.vague


@dataclass(frozen=True)
class Palette:
    assignment: dict[str, LabColor]
    source: str  # "model" or "user"
    request_hash: str
    sample_index: int

    def colors_hex(self) -> dict[str, str]:
        from .colors import lab_to_hex

        return {nid: lab_to_hex(c) for nid, c in self.assignment.items()}


def expand_vague(
    prefs: PreferenceSet, lexicon: Lexicon, k: int = DEFAULT_K, seed: int = 0
) -> list[PreferenceSet]:
    """Resolve vague words into k concrete preference variants. Each vague
    node draws its k anchors without replacement when the lexicon entry is
    large enough, with replacement otherwise."""
    if not prefs.vague:
        return [prefs]
    rng = np.random.default_rng(seed)
    draws: dict[str, list[LabColor]] = {}
    for nid in sorted(prefs.vague):
        colors = lexicon.lookup(prefs.vague[nid])
        if len(colors) >= k:
            picks = rng.choice(len(colors), size=k, replace=False)
        else:
            picks = rng.choice(len(colors), size=k, replace=True)
        draws[nid] = [colors[int(i)] for i in picks]
    variants = []
    for i in range(k):
        exact = dict(prefs.exact)
        for nid, picked in draws.items():
            exact[nid] = picked[i]
        variants.append(PreferenceSet(exact=exact, vague={}, bindings=prefs.bindings))
    return variants


def to_request(doc: InfographicDoc, prefs: PreferenceSet, n_samples: int = 1) -> ImputationRequest:
    """Masked request: pinned nodes observed at their pinned color, every
    other colorable node unobserved. Non-color features stay observed."""
    if not prefs.is_concrete:
        raise PreferenceError("expand vague preferences before building a request")
    prefs.validate(doc)
    vec = featurize(doc)
    lay = vec.layout
    for nid, slot in vec.slot_map.items():
        if slot not in vec.colorable_slots:
            continue
        sl = lay.color_slice(slot)
        if nid in prefs.exact:
            vec.values[sl] = prefs.exact[nid].as_array()
            vec.mask[sl] = 0
        else:
            vec.values[sl] = 0.0
            vec.mask[sl] = 1
    return ImputationRequest(vector=vec, n_samples=n_samples)


def request_hash(req: ImputationRequest) -> str:
    h = hashlib.sha256()
    h.update(req.vector.values.tobytes())
    h.update(req.vector.mask.tobytes())
    return h.hexdigest()[:12]


def palette_from_vector(doc: InfographicDoc, vec: FeatureVector, source: str, rhash: str, sample_index: int) -> Palette:
    assignment = {}
    lay = vec.layout
    for nid in doc.colorable_ids():
        lab = vec.values[lay.color_slice(vec.slot_map[nid])]
        assignment[nid] = LabColor(float(np.clip(lab[0], 0, 100)), float(lab[1]), float(lab[2]))
    return Palette(assignment=assignment, source=source, request_hash=rhash, sample_index=sample_index)


def dedupe_palettes(palettes: list[Palette], threshold: float = DUPLICATE_DE) -> list[Palette]:
    """Drop palettes whose every node color is within `threshold` of an
    earlier palette. The first palette always survives."""
    kept: list[Palette] = []
    for p in palettes:
        is_dup = False
        for q in kept:
            ids = sorted(p.assignment)
            a = np.array([p.assignment[i].as_array() for i in ids])
            b = np.array([q.assignment[i].as_array() for i in ids])
            if float(kernels.ciede2000(a, b).max()) < threshold:
                is_dup = True
                break
        if not is_dup:
            kept.append(p)
    return kept


def apply_bindings(
    palettes: list[Palette],
    bindings: tuple[frozenset[str], ...],
    node_areas: dict[str, float],
    seed: int = 0,
    pinned: Optional[dict[str, LabColor]] = None,
) -> list[Palette]:
    """Within each binding set, one member wins with probability
    proportional to its pixel area and its color is copied to the rest;
    draws are independent per palette. A set containing an exact pin always
    adopts the pinned color."""
    if not bindings:
        return palettes
    rng = np.random.default_rng(seed)
    pinned = pinned or {}
    out = []
    for p in palettes:
        assignment = dict(p.assignment)
        for group in bindings:
            members = sorted(group)
            pinned_members = [m for m in members if m in pinned]
            if pinned_members:
                color = pinned[pinned_members[0]]
            else:
                areas = np.array([max(0.0, float(node_areas.get(m, 0.0))) for m in members])
                if areas.sum() <= 0:
                    probs = np.full(len(members), 1.0 / len(members))
                else:
                    probs = areas / areas.sum()
                winner = members[int(rng.choice(len(members), p=probs))]
                color = assignment[winner]
            for m in members:
                assignment[m] = color
        out.append(Palette(assignment=assignment, source=p.source, request_hash=p.request_hash, sample_index=p.sample_index))
    return out


def recommend(
    doc: InfographicDoc,
    prefs: PreferenceSet,
    model: VaeacModel,
    lexicon: Lexicon,
    n: int = 5,
    seed: int = 0,
    k: int = DEFAULT_K,
    temperature: float = 1.0,
) -> list[Palette]:
    """Full pipeline: expand -> impute per variant -> mix -> dedupe ->
    bindings -> truncate. Deterministic under a fixed seed."""
    prefs.validate(doc)
    variants = expand_vague(prefs, lexicon, k=k, seed=seed)
    node_areas = {nid: doc.nodes[nid].pixel_area for nid in doc.nodes}
    colorable = set(doc.colorable_ids())
    fully_pinned = all(set(v.exact) >= colorable for v in variants)

    def gather(round_index: int) -> list[Palette]:
        candidates: list[Palette] = []
        for vi, variant in enumerate(variants):
            if set(variant.exact) >= colorable:
                vec = featurize(doc)
                lay = vec.layout
                for nid, slot in vec.slot_map.items():
                    if slot in vec.colorable_slots:
                        vec.values[lay.color_slice(slot)] = variant.exact[nid].as_array()
                        vec.mask[lay.color_slice(slot)] = 0
                candidates.append(palette_from_vector(doc, vec, "user", "pinned", 0))
                continue
            req = to_request(doc, variant, n_samples=n)
            rhash = request_hash(req)
            outs = impute(
                model,
                req,
                seed=int(np.random.SeedSequence([seed, vi, round_index]).generate_state(1)[0]),
                temperature=temperature,
            )
            candidates.extend(
                palette_from_vector(doc, o, "model", rhash, si) for si, o in enumerate(outs)
            )
        mix_rng = np.random.default_rng(np.random.SeedSequence([seed, 991, round_index]))
        order = mix_rng.permutation(len(candidates))
        return [candidates[i] for i in order]

    kept: list[Palette] = []
    for round_index in range(5):
        kept = dedupe_palettes(kept + gather(round_index))
        if len(kept) >= n or fully_pinned:
            break
    kept = apply_bindings(kept, prefs.bindings, node_areas, seed=seed, pinned=prefs.exact)
    return kept[:n]
