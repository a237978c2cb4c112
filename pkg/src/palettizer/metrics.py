"""Imputation quality metrics and the drop-and-impute evaluation protocol.

Per test item and replicate, half of the color triples are hidden (masks
derived from the item and replicate indices only, so every method sees the
same masks), each method generates several complete vectors, and three
scores summarize the results:

* nrmse  -- std-normalized RMSE on the dropped entries, averaged over the
            generated samples (lower is better)
* crs    -- summed mean CIEDE2000 between truth and each sample on the
            dropped triples (lower is better, "relevance")
* cvs    -- summed pairwise mean CIEDE2000 among the samples (higher means
            more diverse output)
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .extract.features import FeatureVector

# an imputation method: (request vector, n_samples, seed) -> list of
# complete full-width value arrays
Imputer = Callable[[FeatureVector, int, int], list[np.ndarray]]


@dataclass(frozen=True)
class EvalProtocolConfig:
    drop_fraction: float = 0.5
    replicates_per_item: int = 5
    samples_per_replicate: int = 5
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.drop_fraction < 1.0):
            raise ValueError("drop_fraction must be in (0, 1)")
        if self.replicates_per_item < 1 or self.samples_per_replicate < 1:
            raise ValueError("counts must be >= 1")


@dataclass
class MetricTable:
    rows: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("method,nrmse,crs,cvs\n")
        for name, row in self.rows.items():
            buf.write(f"{name},{row['nrmse']:.6f},{row['crs']:.6f},{row['cvs']:.6f}\n")
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'method':<18} {'NRMSE':>10} {'CRS':>10} {'CVS':>10}"]
        for name, row in self.rows.items():
            lines.append(f"{name:<18} {row['nrmse']:>10.4f} {row['crs']:>10.4f} {row['cvs']:>10.4f}")
        return "\n".join(lines)

    def check_invariants(self) -> None:
        for name, row in self.rows.items():
            for metric, value in row.items():
                if not np.isfinite(value) or value < 0:
                    raise ValueError(f"{name}.{metric} = {value} violates metric invariants")


def nrmse(truth: np.ndarray, imputations: list[np.ndarray], stds: np.ndarray) -> float:
    """Mean over imputations of the per-feature std-normalized RMSE on the
    dropped entries. All arrays cover the dropped entries only."""
    if len(imputations) < 1:
        raise ValueError("need at least one imputation")
    total = 0.0
    for imp in imputations:
        scaled = (truth - imp) / stds
        total += float(np.sqrt(np.mean(scaled * scaled)))
    return total / len(imputations)


def _mean_de(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean(kernels.ciede2000(a.reshape(-1, 3), b.reshape(-1, 3))))


def crs(truth_triples: np.ndarray, imputations: list[np.ndarray]) -> float:
    """Sum over imputations of the mean CIEDE2000 to the truth over the
    dropped color triples. Arrays are (m, 3) Lab rows."""
    return float(sum(_mean_de(truth_triples, imp) for imp in imputations))


def cvs(imputations: list[np.ndarray]) -> float:
    """Sum over unordered sample pairs of their mean CIEDE2000 distance."""
    total = 0.0
    for i in range(len(imputations)):
        for j in range(i + 1, len(imputations)):
            total += _mean_de(imputations[i], imputations[j])
    return total


def protocol_mask(vec: FeatureVector, item_index: int, replicate: int, drop_fraction: float) -> list[int]:
    """Deterministic choice of dropped colorable slots; depends on the item
    and replicate only, so methods are compared on identical masks."""
    slots = list(vec.colorable_slots)
    if not slots:
        return []
    rng = np.random.default_rng(np.random.SeedSequence([item_index, replicate]))
    k = max(1, int(round(drop_fraction * len(slots))))
    chosen = rng.choice(len(slots), size=min(k, len(slots)), replace=False)
    return sorted(slots[i] for i in chosen)


def run_protocol(
    methods: dict[str, Imputer],
    test_vectors: list[FeatureVector],
    stds: np.ndarray,
    config: EvalProtocolConfig | None = None,
) -> MetricTable:
    config = config or EvalProtocolConfig()
    if not test_vectors:
        raise ValueError("empty test split")

    sums = {name: {"nrmse": 0.0, "crs": 0.0, "cvs": 0.0} for name in methods}
    cases = 0
    for i, vec in enumerate(test_vectors):
        lay = vec.layout
        for r in range(config.replicates_per_item):
            dropped_slots = protocol_mask(vec, i, r, config.drop_fraction)
            if not dropped_slots:
                continue
            positions = np.concatenate(
                [np.arange(lay.color_slice(s).start, lay.color_slice(s).stop) for s in dropped_slots]
            )
            truth_flat = vec.values[positions].copy()
            truth_tri = truth_flat.reshape(-1, 3)

            req = vec.copy()
            req.mask[:] = 0
            req.mask[positions] = 1
            req.values[positions] = 0.0

            cases += 1
            seed = int(
                np.random.SeedSequence([config.seed, i, r]).generate_state(1, dtype=np.uint32)[0]
            )
            for name, method in methods.items():
                outs = method(req, config.samples_per_replicate, seed)
                flats = [o[positions] for o in outs]
                tris = [f.reshape(-1, 3) for f in flats]
                sums[name]["nrmse"] += nrmse(truth_flat, flats, stds[positions])
                sums[name]["crs"] += crs(truth_tri, tris)
                sums[name]["cvs"] += cvs(tris)

    if cases == 0:
        raise ValueError("protocol produced no evaluable cases")
    table = MetricTable(
        rows={
            name: {metric: value / cases for metric, value in row.items()}
            for name, row in sums.items()
        }
    )
    table.check_invariants()
    return table
