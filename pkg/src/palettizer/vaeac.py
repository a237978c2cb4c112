"""Mask-conditioned variational autoencoder for palette imputation.

Three MLPs share one latent space:

* proposal (training encoder)  q(z | x, b)         sees the full vector
* prior                        p(z | x_obs, b)     sees observed entries only
* decoder                      p(x_hidden | z, x_obs, b)

Training maximizes the masked ELBO: reconstruction log-likelihood summed
over hidden entries only (Gaussian per continuous feature, cross-entropy
per hidden one-hot group) minus KL(proposal || prior). Masks are resampled
every epoch: non-color features are always observed, and each color triple
of a real colorable node is hidden independently with probability p_hide.
At generation time z is drawn from the prior net, so any subset of colors
can be conditioned on, including none.

Everything is float64 numpy with hand-written gradients; log-variances are
bounded by a smooth tanh squash so the ELBO stays differentiable
everywhere and analytic gradients match central finite differences.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .colors import snap_to_gamut
from .extract.features import FeatureLayout, FeatureVector
from .model import StructuralError
from .nnet import MLP, MomentumSGD

LOGVAR_BOUND = 8.0
_LOG_2PI = float(np.log(2.0 * np.pi))
CHECKPOINT_FORMAT = "palettizer-vaeac/1"


@dataclass(frozen=True)
class FeatureKinds:
    """Which vector positions are continuous and which form one-hot groups."""

    width: int
    cat_groups: tuple[tuple[int, int], ...]

    def __post_init__(self):
        taken = np.zeros(self.width, dtype=bool)
        for start, size in self.cat_groups:
            if taken[start : start + size].any():
                raise ValueError("overlapping categorical groups")
            taken[start : start + size] = True
        object.__setattr__(self, "_cat_mask", taken)
        object.__setattr__(self, "_cont", np.nonzero(~taken)[0])

    @property
    def cont_positions(self) -> np.ndarray:
        return self._cont  # type: ignore[attr-defined]

    @property
    def n_cont(self) -> int:
        return len(self.cont_positions)

    @property
    def n_cat(self) -> int:
        return sum(size for _, size in self.cat_groups)

    @classmethod
    def from_layout(cls, layout: FeatureLayout) -> "FeatureKinds":
        return cls(width=layout.width, cat_groups=tuple(layout.categorical_groups()))


@dataclass
class VaeacConfig:
    latent_dim: int = 32
    hidden: int = 256
    epochs: int = 50
    batch_size: int = 128
    lr: float = 2e-3
    momentum: float = 0.9
    lr_min_factor: float = 0.1
    p_hide: float = 0.5
    val_fraction: float = 0.1
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, payload: dict) -> "VaeacConfig":
        return cls(**payload)


@dataclass
class TrainReport:
    train_elbo: list[float]
    val_elbo: list[float]
    selected_epoch: int
    wall_time_s: float
    n_train: int
    n_val: int
    min_kl: float

    def summary(self) -> dict:
        """Everything except wall time; bitwise comparable across runs."""
        return {
            "train_elbo": list(self.train_elbo),
            "val_elbo": list(self.val_elbo),
            "selected_epoch": self.selected_epoch,
            "n_train": self.n_train,
            "n_val": self.n_val,
            "min_kl": self.min_kl,
        }


@dataclass
class VaeacModel:
    layout: FeatureLayout
    kinds: FeatureKinds
    encoder: MLP
    prior: MLP
    decoder: MLP
    mean: np.ndarray
    std: np.ndarray
    latent_dim: int
    config: VaeacConfig
    seed: int

    @property
    def spatial_features_enabled(self) -> bool:
        return self.layout.spatial

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean


@dataclass(frozen=True)
class ImputationRequest:
    vector: FeatureVector
    n_samples: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        vec = self.vector
        lay = vec.layout
        if vec.values.shape != (lay.width,):
            raise StructuralError("request width mismatch with layout")
        if vec.mask[: lay.f_width].any():
            raise StructuralError("non-color features must be observed")
        if not vec.mask[lay.f_width :].any():
            raise StructuralError("request has no unobserved color entries")


def _bounded_logvar(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.tanh(raw / LOGVAR_BOUND)
    return LOGVAR_BOUND * t, 1.0 - t * t  # value, d(value)/d(raw)


def elbo_and_grads(
    encoder: MLP,
    prior: MLP,
    decoder: MLP,
    kinds: FeatureKinds,
    x_norm: np.ndarray,
    b: np.ndarray,
    eps: np.ndarray,
    want_grads: bool = True,
):
    """Batch-mean masked ELBO and (optionally) its gradients wrt all three
    networks' parameters. `b` is 1 where a feature is hidden; `eps` is the
    reparametrization noise, one row per sample."""
    B = x_norm.shape[0]
    latent = eps.shape[1]
    bf = b.astype(np.float64)
    xo = x_norm * (1.0 - bf)

    enc_in = np.concatenate([x_norm, bf], axis=1)
    pri_in = np.concatenate([xo, bf], axis=1)
    enc_out, enc_cache = encoder.forward(enc_in)
    pri_out, pri_cache = prior.forward(pri_in)
    mu_q, raw_q = enc_out[:, :latent], enc_out[:, latent:]
    mu_p, raw_p = pri_out[:, :latent], pri_out[:, latent:]
    lvq, dlvq_draw = _bounded_logvar(raw_q)
    lvp, dlvp_draw = _bounded_logvar(raw_p)

    sigma_q = np.exp(0.5 * lvq)
    z = mu_q + sigma_q * eps
    dec_in = np.concatenate([z, xo, bf], axis=1)
    dec_out, dec_cache = decoder.forward(dec_in)

    C = kinds.n_cont
    m = dec_out[:, :C]
    raw_d = dec_out[:, C : 2 * C]
    lvd, dlvd_draw = _bounded_logvar(raw_d)

    cont_pos = kinds.cont_positions
    t_cont = x_norm[:, cont_pos]
    hc = bf[:, cont_pos]
    resid = t_cont - m
    inv_var = np.exp(-lvd)
    ll_cont = -0.5 * (hc * (_LOG_2PI + lvd + resid * resid * inv_var)).sum()

    ll_cat = 0.0
    cat_grads = []
    offset = 2 * C
    for start, size in kinds.cat_groups:
        logits = dec_out[:, offset : offset + size]
        target = x_norm[:, start : start + size]
        gb = bf[:, start : start + size]
        uniform = (gb == gb[:, :1]).all(axis=1)
        if not uniform.all():
            raise StructuralError("mask must hide one-hot groups atomically")
        hidden = gb[:, 0] * (np.abs(target.sum(axis=1) - 1.0) < 1e-9)
        mx = logits.max(axis=1, keepdims=True)
        lse = mx + np.log(np.exp(logits - mx).sum(axis=1, keepdims=True))
        logp = logits - lse
        ll_cat += (hidden[:, None] * target * logp).sum()
        if want_grads:
            softmax = np.exp(logp)
            cat_grads.append(hidden[:, None] * (target - softmax) / B)
        offset += size

    diff = mu_p - mu_q
    e_lv = np.exp(lvq - lvp)
    inv_vp = np.exp(-lvp)
    kl_per = 0.5 * (e_lv + diff * diff * inv_vp - 1.0 + lvp - lvq).sum(axis=1)
    kl = kl_per.sum()

    elbo = (ll_cont + ll_cat - kl) / B
    extras = {"kl_mean": kl / B, "kl_min": float(kl_per.min()) if B else 0.0}
    if not want_grads:
        return elbo, None, extras

    # --- backward ---
    d_dec_out = np.zeros_like(dec_out)
    d_dec_out[:, :C] = (hc * resid * inv_var) / B
    d_dec_out[:, C : 2 * C] = (-0.5 * hc * (1.0 - resid * resid * inv_var) / B) * dlvd_draw
    offset = 2 * C
    for (start, size), g in zip(kinds.cat_groups, cat_grads):
        d_dec_out[:, offset : offset + size] = g
        offset += size

    d_dec_in, dec_grads = decoder.backward(dec_cache, d_dec_out)
    dz = d_dec_in[:, :latent]

    d_mu_q = dz - (-diff) * inv_vp / B
    d_lvq = dz * 0.5 * sigma_q * eps - 0.5 * (e_lv - 1.0) / B
    d_mu_p = -diff * inv_vp / B
    d_lvp = 0.5 * (e_lv + diff * diff * inv_vp - 1.0) / B

    d_enc_out = np.concatenate([d_mu_q, d_lvq * dlvq_draw], axis=1)
    d_pri_out = np.concatenate([d_mu_p, d_lvp * dlvp_draw], axis=1)
    _, enc_grads = encoder.backward(enc_cache, d_enc_out)
    _, pri_grads = prior.backward(pri_cache, d_pri_out)

    grads = {"encoder": enc_grads, "prior": pri_grads, "decoder": dec_grads}
    return elbo, grads, extras


def _build_nets(kinds: FeatureKinds, config: VaeacConfig, rng: np.random.Generator):
    W, L, H = kinds.width, config.latent_dim, config.hidden
    encoder = MLP([2 * W, H, H, 2 * L], rng)
    prior = MLP([2 * W, H, H, 2 * L], rng)
    decoder = MLP([L + 2 * W, H, H, 2 * kinds.n_cont + kinds.n_cat], rng)
    return encoder, prior, decoder


def _hidable_positions(vec: FeatureVector) -> list[np.ndarray]:
    """Per colorable slot, the three absolute positions of its color triple."""
    lay = vec.layout
    out = []
    for s in vec.colorable_slots:
        sl = lay.color_slice(s)
        out.append(np.arange(sl.start, sl.stop))
    return out


def _sample_masks(vectors, hidables, indices, p_hide, rng) -> np.ndarray:
    width = vectors.shape[1]
    b = np.zeros((len(indices), width), dtype=np.float64)
    for row, i in enumerate(indices):
        slots = hidables[i]
        if not slots:
            continue
        hide = rng.random(len(slots)) < p_hide
        for h, pos in zip(hide, slots):
            if h:
                b[row, pos] = 1.0
    return b


def train(corpus: list[FeatureVector], config: Optional[VaeacConfig] = None):
    """Fit the model; returns (VaeacModel, TrainReport). The epoch with the
    best validation ELBO is the one kept."""
    config = config or VaeacConfig()
    if not corpus:
        raise ValueError("empty corpus")
    layout = corpus[0].layout
    for v in corpus:
        if v.layout != layout or v.values.shape != (layout.width,):
            raise StructuralError("corpus vectors have mismatched widths")
        if v.mask.any():
            raise StructuralError("training corpus must be fully observed")

    t0 = time.perf_counter()
    kinds = FeatureKinds.from_layout(layout)
    X = np.stack([v.values for v in corpus])
    hidables = [_hidable_positions(v) for v in corpus]
    n = len(corpus)

    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n)
    n_val = max(1, int(round(config.val_fraction * n))) if n > 1 else 0
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    if len(train_idx) == 0:
        train_idx, val_idx = perm, perm

    mean = np.zeros(layout.width)
    std = np.ones(layout.width)
    cont = kinds.cont_positions
    mean[cont] = X[train_idx][:, cont].mean(axis=0)
    raw_std = X[train_idx][:, cont].std(axis=0)
    std[cont] = np.where(raw_std < 1e-8, 1.0, raw_std)

    Xn = (X - mean) / std
    encoder, prior, decoder = _build_nets(kinds, config, rng)

    # fixed validation masks and noise for comparable epoch scores
    val_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 7_001]))
    val_b = _sample_masks(X, hidables, val_idx, config.p_hide, val_rng)
    val_eps = val_rng.standard_normal((len(val_idx), config.latent_dim))

    n_batches = max(1, int(np.ceil(len(train_idx) / config.batch_size)))
    sizes = [encoder.flat_params().size, prior.flat_params().size, decoder.flat_params().size]
    opt = MomentumSGD(
        sum(sizes), config.lr, config.momentum, config.epochs * n_batches, config.lr_min_factor
    )

    def packed():
        return np.concatenate([encoder.flat_params(), prior.flat_params(), decoder.flat_params()])

    def unpack(vec):
        encoder.set_flat_params(vec[: sizes[0]])
        prior.set_flat_params(vec[sizes[0] : sizes[0] + sizes[1]])
        decoder.set_flat_params(vec[sizes[0] + sizes[1] :])

    train_hist: list[float] = []
    val_hist: list[float] = []
    best = (-np.inf, -1, None)
    min_kl = np.inf

    for epoch in range(config.epochs):
        order = rng.permutation(len(train_idx))
        epoch_elbo = 0.0
        seen = 0
        for start in range(0, len(order), config.batch_size):
            batch = train_idx[order[start : start + config.batch_size]]
            xb = Xn[batch]
            bb = _sample_masks(X, hidables, batch, config.p_hide, rng)
            eps = rng.standard_normal((len(batch), config.latent_dim))
            elbo, grads, extras = elbo_and_grads(encoder, prior, decoder, kinds, xb, bb, eps)
            min_kl = min(min_kl, extras["kl_min"])
            flat = np.concatenate(
                [
                    MLP.flat_grads(grads["encoder"]),
                    MLP.flat_grads(grads["prior"]),
                    MLP.flat_grads(grads["decoder"]),
                ]
            )
            unpack(opt.step(packed(), flat))
            epoch_elbo += elbo * len(batch)
            seen += len(batch)
        train_hist.append(epoch_elbo / seen)

        v_elbo, _, _ = elbo_and_grads(
            encoder, prior, decoder, kinds, Xn[val_idx], val_b, val_eps, want_grads=False
        )
        val_hist.append(v_elbo)
        if v_elbo > best[0]:
            best = (v_elbo, epoch, (encoder.clone(), prior.clone(), decoder.clone()))

    sel_encoder, sel_prior, sel_decoder = best[2]
    model = VaeacModel(
        layout=layout,
        kinds=kinds,
        encoder=sel_encoder,
        prior=sel_prior,
        decoder=sel_decoder,
        mean=mean,
        std=std,
        latent_dim=config.latent_dim,
        config=config,
        seed=config.seed,
    )
    report = TrainReport(
        train_elbo=train_hist,
        val_elbo=val_hist,
        selected_epoch=best[1],
        wall_time_s=time.perf_counter() - t0,
        n_train=len(train_idx),
        n_val=len(val_idx),
        min_kl=float(min_kl),
    )
    return model, report


def impute(
    model: VaeacModel,
    req: ImputationRequest,
    seed: int = 0,
    temperature: float = 1.0,
) -> list[FeatureVector]:
    """Draw complete vectors conditioned on the observed entries. Observed
    entries pass through bit-for-bit; generated colors are de-normalized
    and snapped into the displayable gamut."""
    vec = req.vector
    if vec.layout != model.layout:
        raise StructuralError("request layout does not match model layout")
    lay = model.layout
    kinds = model.kinds
    rng = np.random.default_rng(seed)

    b = vec.mask.astype(np.float64)[None, :]
    x_norm = model.normalize(vec.values)[None, :] * (1.0 - b)
    pri_out, _ = model.prior.forward(np.concatenate([x_norm, b], axis=1))
    mu_p, raw_p = pri_out[:, : model.latent_dim], pri_out[:, model.latent_dim :]
    lvp, _ = _bounded_logvar(raw_p)
    sigma_p = np.exp(0.5 * lvp)

    out: list[FeatureVector] = []
    for _ in range(req.n_samples):
        z = mu_p + sigma_p * rng.standard_normal(mu_p.shape) * temperature
        dec_in = np.concatenate([z, x_norm, b], axis=1)
        dec_out, _ = model.decoder.forward(dec_in)
        C = kinds.n_cont
        m = dec_out[0, :C]
        lvd, _ = _bounded_logvar(dec_out[0, C : 2 * C])
        sampled_cont = m + np.exp(0.5 * lvd) * rng.standard_normal(C) * temperature

        full_norm = model.normalize(vec.values).copy()
        full_norm[kinds.cont_positions] = np.where(
            vec.mask[kinds.cont_positions] == 1, sampled_cont, full_norm[kinds.cont_positions]
        )
        filled = model.denormalize(full_norm)

        offset = 2 * C
        for start, size in kinds.cat_groups:
            if vec.mask[start : start + size].all():
                logits = dec_out[0, offset : offset + size]
                probs = np.exp(logits - logits.max())
                probs /= probs.sum()
                choice = int(np.argmax(probs)) if temperature == 0.0 else int(rng.choice(size, p=probs))
                filled[start : start + size] = 0.0
                filled[start + choice] = 1.0
            offset += size

        for s in range(lay.max_nodes):
            sl = lay.color_slice(s)
            if vec.mask[sl].all():
                tri = filled[sl].copy()
                tri[0] = np.clip(tri[0], 0.0, 100.0)
                filled[sl] = snap_to_gamut(tri[None, :])[0]

        # pass-through: observed entries are copied exactly, untouched by
        # normalization round-trips
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


def save_model(model: VaeacModel, path) -> None:
    arrays = {"mean": model.mean, "std": model.std}
    for name, net in (("enc", model.encoder), ("pri", model.prior), ("dec", model.decoder)):
        for i, (w, bias) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}_w{i}"] = w
            arrays[f"{name}_b{i}"] = bias
    meta = {
        "format": CHECKPOINT_FORMAT,
        "layout": model.layout.to_json(),
        "config": model.config.to_json(),
        "latent_dim": model.latent_dim,
        "seed": model.seed,
        "sizes": {
            "enc": model.encoder.sizes,
            "pri": model.prior.sizes,
            "dec": model.decoder.sizes,
        },
    }
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_model(path) -> VaeacModel:
    data = np.load(path, allow_pickle=False)
    meta = json.loads(str(data["meta"]))
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise StructuralError(f"unsupported checkpoint format {meta.get('format')!r}")
    layout = FeatureLayout.from_json(meta["layout"])
    kinds = FeatureKinds.from_layout(layout)
    config = VaeacConfig.from_json(meta["config"])

    nets = {}
    for name in ("enc", "pri", "dec"):
        net = MLP.__new__(MLP)
        net.sizes = list(meta["sizes"][name])
        net.weights = []
        net.biases = []
        i = 0
        while f"{name}_w{i}" in data:
            net.weights.append(data[f"{name}_w{i}"])
            net.biases.append(data[f"{name}_b{i}"])
            i += 1
        nets[name] = net

    return VaeacModel(
        layout=layout,
        kinds=kinds,
        encoder=nets["enc"],
        prior=nets["pri"],
        decoder=nets["dec"],
        mean=data["mean"],
        std=data["std"],
        latent_dim=int(meta["latent_dim"]),
        config=config,
        seed=int(meta["seed"]),
    )
