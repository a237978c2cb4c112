"""Command-line interface: corpus generation, extraction, training,
evaluation, recommendation, and the HTTP server."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .colors import hex_to_lab
from .extract import annotations_from_json, extract_document, featurize, load_annotations
from .extract.features import FeatureVector, strip_spatial
from .extract.raster import RasterImage
from .imputers import mean_method, mice_method, nonspatial_vaeac_method, vaeac_method
from .metrics import EvalProtocolConfig, run_protocol
from .mice import fit_mice
from .model import load_doc, save_doc
from .prefs import PreferenceSet, load_lexicon, recommend as run_recommend
from .service import ServiceConfig, serve as run_serve
from .synth import LAW_NOISE_SIGMA, doc_annotations, make_docs, render_doc
from .vaeac import VaeacConfig, load_model, save_model, train as run_train


@click.group()
def main():
    """Structure-aware color palette recommendation."""


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_features(corpus_dir: Path) -> list[FeatureVector]:
    path = corpus_dir / "features.jsonl" if corpus_dir.is_dir() else corpus_dir
    if not path.exists():
        _fail(f"no feature file at {path}")
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(FeatureVector.from_json(json.loads(line)))
    if not out:
        _fail(f"{path} is empty")
    return out


def _split(vectors: list[FeatureVector], split_seed: int) -> tuple[list[FeatureVector], list[FeatureVector]]:
    rng = np.random.default_rng(split_seed)
    order = rng.permutation(len(vectors))
    cut = int(round(0.8 * len(vectors)))
    return [vectors[i] for i in order[:cut]], [vectors[i] for i in order[cut:]]


@main.command("gen-corpus")
@click.option("--n", type=int, required=True, help="number of synthetic documents")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@click.option("--images/--no-images", default=True, show_default=True)
@click.option("--noise", type=float, default=LAW_NOISE_SIGMA, show_default=True, help="Lab noise sigma around the color law")
def gen_corpus(n, seed, out_dir, images, noise):
    """Emit synthetic documents, images, and ground-truth features.

    Node colors follow the documented spatial law: lightness rises with the
    nested-set left index, hue angle tracks the right index, chroma fixed,
    plus Gaussian noise, snapped to the sRGB gamut.
    """
    if n < 1:
        _fail("--n must be positive")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "docs").mkdir(exist_ok=True)
    if images:
        (out_dir / "images").mkdir(exist_ok=True)
    docs = make_docs(n, seed=seed, noise_sigma=noise)
    with open(out_dir / "features.jsonl", "w", encoding="utf-8") as fh:
        for i, doc in enumerate(docs):
            save_doc(doc, out_dir / "docs" / f"doc_{i:05d}.json")
            ann = doc_annotations(doc)
            with open(out_dir / "docs" / f"doc_{i:05d}.annotations.json", "w", encoding="utf-8") as af:
                from .extract.raster import annotations_to_json

                json.dump(annotations_to_json(ann), af, sort_keys=True)
            if images:
                render_doc(doc).save(out_dir / "images" / f"doc_{i:05d}.png")
            fh.write(json.dumps(featurize(doc).to_json(), sort_keys=True) + "\n")
    manifest = {
        "n": n,
        "seed": seed,
        "noise_sigma": noise,
        "law": "L = 20 + 60*left/(2*max_nodes); hue = 360*right/(2*max_nodes) deg; chroma 32; +N(0,sigma) per channel; gamut-snapped",
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
    click.echo(f"wrote {n} documents to {out_dir}")


@main.command("extract")
@click.option("--image", "image_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--annotations", "ann_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True, help="document JSON output")
@click.option("--features", "features_path", type=click.Path(path_type=Path), help="also write the feature vector JSON")
def extract_cmd(image_path, ann_path, out_path, features_path):
    """Analyze one infographic image into a document tree."""
    img = RasterImage.load(image_path)
    ann = load_annotations(ann_path) if ann_path else annotations_from_json({})
    try:
        doc = extract_document(img, ann)
    except Exception as exc:
        _fail(str(exc))
    save_doc(doc, out_path)
    if features_path:
        vec = featurize(doc)
        if str(features_path).endswith(".csv"):
            from .extract.features import feature_column_names

            with open(features_path, "w", encoding="utf-8") as fh:
                fh.write(",".join(feature_column_names(vec.layout)) + "\n")
                fh.write(",".join(repr(v) for v in vec.values) + "\n")
        else:
            with open(features_path, "w", encoding="utf-8") as fh:
                json.dump(vec.to_json(), fh, sort_keys=True)
    click.echo(f"document with {len(doc.nodes)} nodes -> {out_path}")


@main.command("train")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--epochs", type=int, default=VaeacConfig.epochs, show_default=True)
@click.option("--hidden", type=int, default=VaeacConfig.hidden, show_default=True)
@click.option("--latent", type=int, default=VaeacConfig.latent_dim, show_default=True)
@click.option("--batch-size", type=int, default=VaeacConfig.batch_size, show_default=True)
@click.option("--lr", type=float, default=VaeacConfig.lr, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split-seed", type=int, default=0, show_default=True, help="80/20 corpus split seed")
@click.option("--no-spatial", is_flag=True, help="ablation: strip nested-set indices before training")
def train_cmd(corpus_path, out_path, epochs, hidden, latent, batch_size, lr, seed, split_seed, no_spatial):
    """Train on the 80% split of a corpus and save a checkpoint."""
    vectors, _ = _split(_load_features(corpus_path), split_seed)
    if no_spatial:
        vectors = [strip_spatial(v) for v in vectors]
    cfg = VaeacConfig(
        epochs=epochs, hidden=hidden, latent_dim=latent, batch_size=batch_size, lr=lr, seed=seed
    )
    model, report = run_train(vectors, cfg)
    save_model(model, out_path)
    click.echo(
        f"trained {epochs} epochs on {report.n_train}+{report.n_val} vectors; "
        f"best val ELBO {max(report.val_elbo):.4f} at epoch {report.selected_epoch}; "
        f"{report.wall_time_s:.1f}s -> {out_path}"
    )


@main.command("evaluate")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", "model_path", type=click.Path(path_type=Path), help="spatial checkpoint (trained in-run when omitted)")
@click.option("--model-nonspatial", "ns_path", type=click.Path(path_type=Path), help="ablation checkpoint (trained in-run when omitted)")
@click.option("--out", "out_path", type=click.Path(path_type=Path), help="CSV output path")
@click.option("--epochs", type=int, default=VaeacConfig.epochs, show_default=True, help="epochs for in-run training")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split-seed", type=int, default=0, show_default=True)
def evaluate_cmd(corpus_path, model_path, ns_path, out_path, epochs, seed, split_seed):
    """Drop-and-impute comparison of VAEAC, the non-spatial ablation, MICE,
    and mean imputation on the held-out 20% split."""
    vectors = _load_features(corpus_path)
    train_set, test_set = _split(vectors, split_seed)

    if model_path and Path(model_path).exists():
        model = load_model(model_path)
    else:
        click.echo("training spatial model in-run...")
        model, _ = run_train(train_set, VaeacConfig(epochs=epochs, seed=seed))
    if ns_path and Path(ns_path).exists():
        model_ns = load_model(ns_path)
    else:
        click.echo("training non-spatial ablation in-run...")
        model_ns, _ = run_train([strip_spatial(v) for v in train_set], VaeacConfig(epochs=epochs, seed=seed))

    mice = fit_mice(train_set)
    methods = {
        "vaeac": vaeac_method(model),
        "vaeac-nonspatial": nonspatial_vaeac_method(model_ns),
        "mice": mice_method(mice),
        "mean": mean_method(np.stack([v.values for v in train_set]).mean(axis=0)),
    }
    try:
        table = run_protocol(methods, test_set, model.std, EvalProtocolConfig(seed=seed))
        table.check_invariants()
    except ValueError as exc:
        _fail(str(exc))
    click.echo(table.to_text())
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(table.to_csv())
        click.echo(f"csv -> {out_path}")


@main.command("impute")
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--request", "request_path", type=click.Path(exists=True, path_type=Path), required=True,
              help="feature-vector JSON with mask bits set on the colors to generate")
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--temperature", type=float, default=1.0, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), help="write completed vectors JSON")
def impute_cmd(model_path, request_path, n, seed, temperature, out_path):
    """Raw conditional imputation on a masked feature vector."""
    from .vaeac import ImputationRequest, impute as run_impute

    model = load_model(model_path)
    with open(request_path, "r", encoding="utf-8") as fh:
        vec = FeatureVector.from_json(json.load(fh))
    try:
        outs = run_impute(model, ImputationRequest(vector=vec, n_samples=n), seed=seed, temperature=temperature)
    except Exception as exc:
        _fail(str(exc))
    payload = [o.to_json() for o in outs]
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)
    hidden = int(vec.mask.sum()) // 3
    click.echo(f"generated {len(outs)} completions for {hidden} hidden color triples")


@main.command("ablate")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), required=True)
@click.option("--epochs", type=int, default=VaeacConfig.epochs, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--split-seed", type=int, default=0, show_default=True)
@click.pass_context
def ablate_cmd(ctx, corpus_path, out_path, epochs, seed, split_seed):
    """Train the non-spatial ablation (nested-set indices stripped)."""
    ctx.invoke(
        train_cmd,
        corpus_path=corpus_path,
        out_path=out_path,
        epochs=epochs,
        hidden=VaeacConfig.hidden,
        latent=VaeacConfig.latent_dim,
        batch_size=VaeacConfig.batch_size,
        lr=VaeacConfig.lr,
        seed=seed,
        split_seed=split_seed,
        no_spatial=True,
    )


def _parse_kv(items, what):
    out = {}
    for item in items:
        if "=" not in item:
            _fail(f"--{what} expects id=value, got {item!r}")
        nid, value = item.split("=", 1)
        out[nid] = value
    return out


@main.command("recommend")
@click.option("--doc", "doc_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, path_type=Path))
@click.option("--pin", multiple=True, help="exact color, id=#RRGGBB (repeatable)")
@click.option("--word", multiple=True, help="vague word, id=word (repeatable)")
@click.option("--bind", multiple=True, help="comma-separated node ids forced to one color (repeatable)")
@click.option("--n", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), help="write palettes JSON")
def recommend_cmd(doc_path, model_path, lexicon_path, pin, word, bind, n, seed, out_path):
    """Recommend palettes for a document under the given preferences."""
    doc = load_doc(doc_path)
    model = load_model(model_path)
    lexicon = load_lexicon(lexicon_path)
    try:
        exact = {nid: hex_to_lab(h) for nid, h in _parse_kv(pin, "pin").items()}
        prefs = PreferenceSet(
            exact=exact,
            vague=_parse_kv(word, "word"),
            bindings=tuple(frozenset(b.split(",")) for b in bind if b),
        )
        palettes = run_recommend(doc, prefs, model, lexicon, n=n, seed=seed)
    except Exception as exc:
        _fail(str(exc))
    payload = [
        {"colors": p.colors_hex(), "source": p.source, "request_hash": p.request_hash}
        for p in palettes
    ]
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    for i, p in enumerate(payload):
        colors = " ".join(f"{nid}={hexval}" for nid, hexval in sorted(p["colors"].items()))
        click.echo(f"palette {i}: {colors}")


@main.command("serve")
@click.option("--model", "model_path", type=click.Path(path_type=Path))
@click.option("--lexicon", "lexicon_path", type=click.Path(path_type=Path))
@click.option("--store", "store_path", type=click.Path(path_type=Path), default=Path("palettizer-store.json"), show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--seed-policy", type=click.Choice(["per-request", "fixed"]), default="per-request", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="seed for --seed-policy fixed")
def serve_cmd(model_path, lexicon_path, store_path, host, port, seed_policy, seed):
    """Run the HTTP API for the web UI. With PALETTIZER_CONFIG set and no
    --model flag, the config file wins."""
    import os

    if model_path is None and os.environ.get("PALETTIZER_CONFIG"):
        config = ServiceConfig.from_env()
    else:
        config = ServiceConfig(
            model_path=str(model_path) if model_path else None,
            lexicon_path=str(lexicon_path) if lexicon_path else None,
            store_path=str(store_path),
            host=host,
            port=port,
            seed_policy=seed_policy,
            fixed_seed=seed,
        )
    run_serve(config)


if __name__ == "__main__":
    main()
