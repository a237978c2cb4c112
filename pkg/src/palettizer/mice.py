"""Chained-equations imputation baseline.

Each color entry gets a ridge regression onto every other feature, fitted
once on the (complete) corpus. Imputing a request initializes hidden
entries at the corpus mean and cycles the regressions a fixed number of
times, adding residual-scaled Gaussian noise each pass, so repeated draws
yield proper multiple imputations. Observed entries pass through exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colors import snap_to_gamut
from .extract.features import FeatureLayout, FeatureVector
from .model import StructuralError
from .vaeac import ImputationRequest

# penalty per sample: keeps the fit away from interpolation when the
# corpus is smaller than the feature count, so residual noise stays honest
RIDGE_LAMBDA_PER_SAMPLE = 0.1
DEFAULT_CHAIN_ITERATIONS = 10


@dataclass
class MiceModel:
    layout: FeatureLayout
    mean: np.ndarray
    std: np.ndarray
    targets: np.ndarray  # positions with fitted regressions (all color entries)
    betas: np.ndarray  # (n_targets, width) with 0 at the target's own column
    intercepts: np.ndarray
    resid_std: np.ndarray


def fit_mice(corpus: list[FeatureVector]) -> MiceModel:
    if not corpus:
        raise ValueError("empty corpus")
    layout = corpus[0].layout
    for v in corpus:
        if v.layout != layout:
            raise StructuralError("corpus vectors have mismatched layouts")
    X = np.stack([v.values for v in corpus])
    mean = X.mean(axis=0)
    raw_std = X.std(axis=0)
    std = np.where(raw_std < 1e-8, 1.0, raw_std)
    Xn = (X - mean) / std

    targets = np.concatenate(
        [np.arange(layout.color_slice(s).start, layout.color_slice(s).stop) for s in range(layout.max_nodes)]
    )
    W = layout.width
    betas = np.zeros((len(targets), W))
    intercepts = np.zeros(len(targets))
    resid = np.zeros(len(targets))
    lam = RIDGE_LAMBDA_PER_SAMPLE * len(corpus)
    for k, j in enumerate(targets):
        cols = np.r_[0:j, j + 1 : W]
        A = Xn[:, cols]
        y = Xn[:, j]
        gram = A.T @ A + lam * np.eye(len(cols))
        beta = np.linalg.solve(gram, A.T @ y)
        betas[k, cols] = beta
        pred = A @ beta
        resid[k] = float(np.sqrt(np.mean((y - pred) ** 2)))
    return MiceModel(
        layout=layout, mean=mean, std=std, targets=targets,
        betas=betas, intercepts=intercepts, resid_std=resid,
    )


def impute_with_mice(
    model: MiceModel,
    vec: FeatureVector,
    n_samples: int,
    seed: int = 0,
    n_iter: int = DEFAULT_CHAIN_ITERATIONS,
) -> list[FeatureVector]:
    if vec.layout != model.layout:
        raise StructuralError("request layout does not match fitted layout")
    lay = model.layout
    rng = np.random.default_rng(seed)
    hidden = np.nonzero(vec.mask == 1)[0]
    hidden_set = set(int(h) for h in hidden)
    target_index = {int(j): k for k, j in enumerate(model.targets)}
    for j in hidden_set:
        if j not in target_index:
            raise StructuralError(f"no regression for hidden position {j}")

    out = []
    for _ in range(n_samples):
        xn = (vec.values - model.mean) / model.std
        xn[hidden] = 0.0  # corpus mean in normalized space
        for _ in range(n_iter):
            for j in hidden:
                k = target_index[int(j)]
                pred = float(model.betas[k] @ xn)
                xn[j] = pred + model.resid_std[k] * rng.standard_normal()
        filled = xn * model.std + model.mean
        _snap_hidden_triples(filled, vec)
        filled[vec.mask == 0] = vec.values[vec.mask == 0]
        out.append(
            FeatureVector(
                layout=lay,
                values=filled,
                mask=np.zeros(lay.width, dtype=np.uint8),
                slot_map=dict(vec.slot_map),
                colorable_slots=vec.colorable_slots,
            )
        )
    return out


def _snap_hidden_triples(filled: np.ndarray, vec: FeatureVector) -> None:
    """Clamp and gamut-snap every fully hidden color triple in place."""
    lay = vec.layout
    for s in range(lay.max_nodes):
        sl = lay.color_slice(s)
        if vec.mask[sl].all():
            tri = filled[sl].copy()
            tri[0] = np.clip(tri[0], 0.0, 100.0)
            filled[sl] = snap_to_gamut(tri[None, :])[0]


def mice_impute(corpus: list[FeatureVector], req, n_samples: int | None = None, seed: int = 0):
    """One-shot convenience: fit on the corpus and impute. `req` may be an
    ImputationRequest or a bare FeatureVector; the bare form also accepts
    fully observed vectors, which come back unchanged."""
    if isinstance(req, ImputationRequest):
        vec, n = req.vector, req.n_samples
    else:
        vec, n = req, n_samples or 1
    if n_samples is not None:
        n = n_samples
    if not vec.mask.any():
        return [vec.copy() for _ in range(n)]
    return impute_with_mice(fit_mice(corpus), vec, n, seed=seed)
