"""A small from-scratch convolutional classifier.

Stack: conv 5x5x8 -> pool 2 -> conv 5x5x16 -> pool 2 -> fc 64 -> softmax 2,
rectifiers after every weighted layer except the softmax input.  Inputs
are grayscale rasters downsampled to a square side (default 64) by area
averaging and scaled to [0,1].  Everything runs on numpy GEMMs; float32
for training, float64 when a test wants tight finite-difference margins.

Training is plain SGD with momentum, optional label-preserving
augmentation (flips, small shifts, small rotations), and model selection
by minimum validation error.  Single-threaded and deterministic for a
given seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from . import __version__
from .dataset import Manifest, load_png
from .errors import DataError, TrainingError
from .rng import make_rng

_CHECKPOINT_FORMAT = 1


@dataclass
class ModelConfig:
    input_side: int = 64
    conv1_width: int = 5
    conv1_filters: int = 8
    conv2_width: int = 5
    conv2_filters: int = 16
    hidden: int = 64
    classes: int = 2
    init: str = "he"
    seed: int = 0
    dtype: str = "float32"


@dataclass
class AugmentConfig:
    rotation_deg: float = 5.0  # 0 disables; symmetry tasks want it off
    shift_frac: float = 0.02
    hflip: bool = True
    vflip: bool = True


@dataclass
class TrainConfig:
    epochs: int = 70
    batch_size: int = 40
    lr: float = 0.01
    momentum: float = 0.9
    augment: Optional[AugmentConfig] = field(default_factory=AugmentConfig)
    seed: int = 0


# ---------------------------------------------------------------------------
# Parameters and the forward/backward pair.


def _feature_side(cfg: ModelConfig) -> int:
    s = cfg.input_side
    s = (s - cfg.conv1_width + 1) // 2
    s = (s - cfg.conv2_width + 1) // 2
    if s < 1:
        raise DataError(f"input side {cfg.input_side} too small for this stack")
    return s


def init_params(cfg: ModelConfig) -> dict[str, np.ndarray]:
    """He-style normal fan-in init; biases zero.  `zeros` init exists for
    the uniform-output sanity check."""
    rng = make_rng(cfg.seed)
    dt = np.dtype(cfg.dtype)
    fs = _feature_side(cfg)
    flat = cfg.conv2_filters * fs * fs
    shapes = {
        "w1": (cfg.conv1_filters, 1, cfg.conv1_width, cfg.conv1_width),
        "w2": (cfg.conv2_filters, cfg.conv1_filters, cfg.conv2_width, cfg.conv2_width),
        "w3": (flat, cfg.hidden),
        "w4": (cfg.hidden, cfg.classes),
    }
    params: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        fan_in = int(np.prod(shape[1:])) if name in ("w1", "w2") else shape[0]
        if cfg.init == "zeros":
            params[name] = np.zeros(shape, dtype=dt)
        elif cfg.init == "he":
            std = np.sqrt(2.0 / fan_in)
            params[name] = rng.normal(0.0, std, size=shape).astype(dt)
        else:
            raise DataError(f"unknown init scheme {cfg.init!r}")
    params["b1"] = np.zeros(cfg.conv1_filters, dtype=dt)
    params["b2"] = np.zeros(cfg.conv2_filters, dtype=dt)
    params["b3"] = np.zeros(cfg.hidden, dtype=dt)
    params["b4"] = np.zeros(cfg.classes, dtype=dt)
    return params


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(B,C,H,W) -> contiguous (B*H'*W', C*k*k) patch matrix."""
    b, c, h, w = x.shape
    sb, sc, sh, sw = x.strides
    view = np.lib.stride_tricks.as_strided(
        x, (b, h - k + 1, w - k + 1, c, k, k), (sb, sh, sw, sc, sh, sw))
    return np.ascontiguousarray(view).reshape(b * (h - k + 1) * (w - k + 1), -1)


def _conv_forward(x, w, b):
    """Returns (y, cols); cols is reused for the weight gradient."""
    f, _, k, _ = w.shape
    bn, _, h, wd = x.shape
    h2, w2 = h - k + 1, wd - k + 1
    cols = _im2col(x, k)
    y = cols @ w.reshape(f, -1).T
    y += b
    return np.ascontiguousarray(y.reshape(bn, h2, w2, f).transpose(0, 3, 1, 2)), cols


def _conv_backward(w, cols, x_shape, dy, need_dx: bool = True):
    f, c, k, _ = w.shape
    bn, _, h2, w2 = dy.shape
    flat = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(-1, f)
    dw = (flat.T @ cols).reshape(w.shape)
    db = dy.sum(axis=(0, 2, 3))
    if not need_dx:
        return None, dw, db
    # one GEMM back to patch space, then fold the k*k taps; the fold
    # iterates kernel offsets, never batch elements
    dcols = (flat @ w.reshape(f, -1)).reshape(bn, h2, w2, c, k, k)
    taps = np.ascontiguousarray(dcols.transpose(4, 5, 0, 1, 2, 3))
    dxt = np.zeros((bn, x_shape[2], x_shape[3], c), dtype=dy.dtype)
    for i in range(k):
        for j in range(k):
            dxt[:, i:i + h2, j:j + w2, :] += taps[i, j]
    return np.ascontiguousarray(dxt.transpose(0, 3, 1, 2)), dw, db


def _pool_forward(x):
    b, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    v = x[:, :, : h2 * 2, : w2 * 2].reshape(b, c, h2, 2, w2, 2)
    v = v.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, h2, w2, 4)
    idx = v.argmax(axis=-1)  # first max wins ties: gradient routes once
    out = np.take_along_axis(v, idx[..., None], axis=-1)[..., 0]
    return out, idx


def _pool_backward(dy, idx, in_shape):
    b, c, h, w = in_shape
    h2, w2 = h // 2, w // 2
    dv = np.zeros((b, c, h2, w2, 4), dtype=dy.dtype)
    np.put_along_axis(dv, idx[..., None], dy[..., None], axis=-1)
    dv = dv.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    dx = np.zeros(in_shape, dtype=dy.dtype)
    dx[:, :, : h2 * 2, : w2 * 2] = dv.reshape(b, c, h2 * 2, w2 * 2)
    return dx


def forward(params: dict, x: np.ndarray, want_cache: bool = False):
    """(B,1,S,S) batch -> (B,classes) probabilities summing to 1."""
    z1, cols1 = _conv_forward(x, params["w1"], params["b1"])
    a1 = np.maximum(z1, 0)
    p1, i1 = _pool_forward(a1)
    z2, cols2 = _conv_forward(p1, params["w2"], params["b2"])
    a2 = np.maximum(z2, 0)
    p2, i2 = _pool_forward(a2)
    flat = p2.reshape(x.shape[0], -1)
    z3 = flat @ params["w3"] + params["b3"]
    a3 = np.maximum(z3, 0)
    z4 = a3 @ params["w4"] + params["b4"]
    z4 = z4 - z4.max(axis=1, keepdims=True)
    e = np.exp(z4)
    probs = e / e.sum(axis=1, keepdims=True)
    if not want_cache:
        return probs
    return probs, {"x_shape": x.shape, "cols1": cols1, "z1": z1, "a1": a1,
                   "i1": i1, "p1_shape": p1.shape, "cols2": cols2, "z2": z2,
                   "a2": a2, "i2": i2, "p2": p2, "flat": flat, "z3": z3,
                   "a3": a3}


def backward(params: dict, cache: dict, probs: np.ndarray,
             labels: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy over the batch."""
    b = probs.shape[0]
    dz4 = probs.copy()
    dz4[np.arange(b), labels] -= 1.0
    dz4 /= b
    grads: dict[str, np.ndarray] = {}
    grads["w4"] = cache["a3"].T @ dz4
    grads["b4"] = dz4.sum(axis=0)
    da3 = dz4 @ params["w4"].T
    dz3 = da3 * (cache["z3"] > 0)
    grads["w3"] = cache["flat"].T @ dz3
    grads["b3"] = dz3.sum(axis=0)
    dflat = dz3 @ params["w3"].T
    dp2 = dflat.reshape(cache["p2"].shape)
    da2 = _pool_backward(dp2, cache["i2"], cache["a2"].shape)
    dz2 = da2 * (cache["z2"] > 0)
    dp1, grads["w2"], grads["b2"] = _conv_backward(
        params["w2"], cache["cols2"], cache["p1_shape"], dz2)
    da1 = _pool_backward(dp1, cache["i1"], cache["a1"].shape)
    dz1 = da1 * (cache["z1"] > 0)
    _, grads["w1"], grads["b1"] = _conv_backward(
        params["w1"], cache["cols1"], cache["x_shape"], dz1, need_dx=False)
    return grads


def loss_and_grads(params, x, labels):
    probs, cache = forward(params, x, want_cache=True)
    eps = np.finfo(probs.dtype).tiny
    loss = float(-np.log(probs[np.arange(len(labels)), labels] + eps).mean())
    return loss, probs, backward(params, cache, probs, labels)


def predict_probs(params, x, batch: int = 256) -> np.ndarray:
    outs = [forward(params, x[i:i + batch]) for i in range(0, len(x), batch)]
    return np.concatenate(outs, axis=0)


def predict_classes(params, x) -> np.ndarray:
    # argmax takes the first maximum, so an exact tie goes to class 0
    return predict_probs(params, x).argmax(axis=1)


# ---------------------------------------------------------------------------
# Data plumbing.


def prepare_image(img: np.ndarray, side: int) -> np.ndarray:
    """Area-average a raster down to side x side, scaled to [0,1]."""
    if img.shape != (side, side):
        im = Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L")
        img = np.asarray(im.resize((side, side), Image.Resampling.BOX))
    return img.astype(np.float32) / 255.0


def manifest_arrays(manifest: Manifest, side: int,
                    limit: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Load a manifest into (N,1,side,side) floats and an int label vector.
    `limit` keeps the first n records of each class (manifest order)."""
    records = manifest.records
    if limit is not None:
        per: dict[int, int] = {0: 0, 1: 0}
        keep = []
        for rec in records:
            if per[rec.label] < limit:
                per[rec.label] += 1
                keep.append(rec)
        records = keep
    xs = np.stack([prepare_image(load_png(manifest.resolve(r)), side)
                   for r in records])
    ys = np.array([r.label for r in records], dtype=np.int64)
    return xs[:, None, :, :], ys


def augment_batch(x: np.ndarray, cfg: AugmentConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Label-preserving batch augmentation; every transform draws
    per-sample coin flips from the given stream."""
    b, _, h, w = x.shape
    out = x.copy()
    if cfg.hflip:
        flip = rng.random(b) < 0.5
        out[flip] = out[flip, :, :, ::-1]
    if cfg.vflip:
        flip = rng.random(b) < 0.5
        out[flip] = out[flip, :, ::-1, :]
    if cfg.shift_frac > 0:
        span = max(1, int(round(cfg.shift_frac * w)))
        shifts = rng.integers(-span, span + 1, size=(b, 2))
        for i, (dy, dx) in enumerate(shifts):
            if dy or dx:
                rolled = np.roll(out[i, 0], (dy, dx), axis=(0, 1))
                # zero-fill the wrapped margin
                if dy > 0:
                    rolled[:dy] = 0
                elif dy < 0:
                    rolled[dy:] = 0
                if dx > 0:
                    rolled[:, :dx] = 0
                elif dx < 0:
                    rolled[:, dx:] = 0
                out[i, 0] = rolled
    if cfg.rotation_deg > 0:
        angles = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg, size=b)
        for i, ang in enumerate(angles):
            im = Image.fromarray(out[i, 0], mode="F")
            out[i, 0] = np.asarray(
                im.rotate(float(ang), resample=Image.Resampling.BILINEAR,
                          fillcolor=0.0))
    return out


# ---------------------------------------------------------------------------
# Training.


@dataclass
class Checkpoint:
    model: ModelConfig
    train: TrainConfig
    params: dict
    history: list  # rows of (epoch, loss, train_err, val_err)
    best_epoch: int

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        meta = {"format": _CHECKPOINT_FORMAT, "version": __version__,
                "model": asdict(self.model),
                "train": asdict(self.train),
                "history": self.history, "best_epoch": self.best_epoch}
        arrays = {k: np.asarray(v) for k, v in self.params.items()}
        np.savez_compressed(path, meta=json.dumps(meta), **arrays)
        return path

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with np.load(path, allow_pickle=False) as blob:
            meta = json.loads(str(blob["meta"]))
            if meta.get("format") != _CHECKPOINT_FORMAT:
                raise DataError(f"unsupported checkpoint format {meta.get('format')!r}")
            params = {k: blob[k] for k in blob.files if k != "meta"}
        aug = meta["train"].pop("augment", None)
        tc = TrainConfig(**meta["train"])
        tc.augment = AugmentConfig(**aug) if aug else None
        return cls(ModelConfig(**meta["model"]), tc, params,
                   [tuple(r) for r in meta["history"]], int(meta["best_epoch"]))

    def history_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("epoch", "loss", "train_err", "val_err"))
            w.writerows(self.history)
        return path


def error_rate(params, x, y) -> float:
    """Misclassification rate in percent."""
    pred = predict_classes(params, x)
    return 100.0 * float((pred != y).mean())


def train(model_cfg: ModelConfig, train_cfg: TrainConfig,
          x: np.ndarray, y: np.ndarray,
          xv: np.ndarray, yv: np.ndarray) -> Checkpoint:
    """SGD with momentum; returns the minimum-validation-error epoch.

    The logged train error is the running average over the epoch's own
    (augmented) batches, measured before each update; validation error
    is an exact pass over xv. Raises TrainingError (with .history
    attached) on non-finite loss.
    """
    if train_cfg.epochs < 1:
        raise DataError("epochs must be >= 1")
    if train_cfg.batch_size > len(x):
        raise DataError(f"batch size {train_cfg.batch_size} exceeds "
                        f"training set size {len(x)}")
    params = init_params(model_cfg)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    rng = make_rng(train_cfg.seed)
    history: list[tuple] = []
    best_err = np.inf
    best_epoch = -1
    best_params = {k: v.copy() for k, v in params.items()}
    n = len(x)
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        wrong = 0
        seen = 0
        batches = 0
        for start in range(0, n - train_cfg.batch_size + 1, train_cfg.batch_size):
            take = order[start:start + train_cfg.batch_size]
            xb = x[take]
            if train_cfg.augment is not None:
                xb = augment_batch(xb, train_cfg.augment, rng)
            loss, probs, grads = loss_and_grads(params, xb, y[take])
            if not np.isfinite(loss):
                err = TrainingError(f"loss diverged at epoch {epoch}")
                err.history = history
                raise err
            epoch_loss += loss
            wrong += int((np.argmax(probs, axis=1) != y[take]).sum())
            seen += len(take)
            batches += 1
            for k in params:
                velocity[k] = (train_cfg.momentum * velocity[k]
                               - train_cfg.lr * grads[k])
                params[k] += velocity[k]
        train_err = 100.0 * wrong / max(seen, 1)
        val_err = error_rate(params, xv, yv)
        history.append((epoch, epoch_loss / max(batches, 1), train_err, val_err))
        if val_err < best_err:
            best_err = val_err
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
    return Checkpoint(model_cfg, train_cfg, best_params, history, best_epoch)


def train_on_manifests(model_cfg: ModelConfig, train_cfg: TrainConfig,
                       train_manifest: Manifest, val_manifest: Manifest,
                       limit: Optional[int] = None) -> Checkpoint:
    x, y = manifest_arrays(train_manifest, model_cfg.input_side, limit)
    xv, yv = manifest_arrays(val_manifest, model_cfg.input_side)
    return train(model_cfg, train_cfg, x, y, xv, yv)


def predict_manifest(ckpt: Checkpoint, manifest: Manifest) -> dict[str, int]:
    """Per-record class ids keyed by manifest path, ready for evaluate()."""
    x, _ = manifest_arrays(manifest, ckpt.model.input_side)
    classes = predict_classes(ckpt.params, x)
    return {rec.path: int(c) for rec, c in zip(manifest.records, classes)}
