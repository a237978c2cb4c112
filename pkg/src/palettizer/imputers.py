"""Adapters exposing each imputation method under the protocol signature
(request vector, n_samples, seed) -> list of full-width value arrays."""

from __future__ import annotations

import numpy as np

from .extract.features import FeatureVector, strip_spatial
from .mice import MiceModel, impute_with_mice
from .vaeac import ImputationRequest, VaeacModel, impute


def vaeac_method(model: VaeacModel, temperature: float = 1.0):
    def run(vec: FeatureVector, n: int, seed: int) -> list[np.ndarray]:
        outs = impute(model, ImputationRequest(vector=vec, n_samples=n), seed=seed, temperature=temperature)
        return [o.values for o in outs]

    return run


def nonspatial_vaeac_method(model: VaeacModel, temperature: float = 1.0):
    """Ablation adapter: requests are stripped of spatial indices before
    imputation; generated colors are re-embedded at full-width positions."""
    if model.layout.spatial:
        raise ValueError("expected a model trained on stripped vectors")

    def run(vec: FeatureVector, n: int, seed: int) -> list[np.ndarray]:
        stripped = strip_spatial(vec)
        outs = impute(model, ImputationRequest(vector=stripped, n_samples=n), seed=seed, temperature=temperature)
        full_f = vec.layout.f_width
        small_f = stripped.layout.f_width
        results = []
        for o in outs:
            values = vec.values.copy()
            values[full_f:] = o.values[small_f:]
            results.append(values)
        return results

    return run


def mice_method(model: MiceModel):
    def run(vec: FeatureVector, n: int, seed: int) -> list[np.ndarray]:
        return [o.values for o in impute_with_mice(model, vec, n, seed=seed)]

    return run


def mean_method(train_mean: np.ndarray):
    """Fills hidden entries with the training mean; deterministic."""

    def run(vec: FeatureVector, n: int, seed: int) -> list[np.ndarray]:
        filled = vec.values.copy()
        hidden = vec.mask == 1
        filled[hidden] = train_mean[hidden]
        return [filled.copy() for _ in range(n)]

    return run
