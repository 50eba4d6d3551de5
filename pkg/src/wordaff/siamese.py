"""Siamese affinity network: a small MLP trained on pairwise constraints.

Both members of each constrained pair go through the same weights; the
affinity of the latent outputs is exp(-||u - u'||^2) and the loss is the
summed cross-entropy of those affinities against the constraint labels.
The network is Dropout-Linear-ReLU, Dropout-Linear-ReLU, Dropout-Linear.
"""

from __future__ import annotations

import base64
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .constraints import ConstraintSet
from .features import Representation

PROB_EPS = 1e-7
CHECKPOINT_FORMAT = "wordaff-embedding/1"


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during optimization."""


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-4
    dropout_p: float = 0.2
    grad_clip_norm: float = 5.0
    init_std: float = 0.01
    rng_seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def validate(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0 or self.grad_clip_norm <= 0 or self.init_std <= 0:
            raise ValueError("learning_rate, grad_clip_norm and init_std must be > 0")
        if not (0 <= self.dropout_p < 1):
            raise ValueError("dropout_p must be in [0, 1)")


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    seconds: float = 0.0
    n_must: int = 0
    n_cannot: int = 0
    must_mean_affinity: float = float("nan")
    cannot_mean_affinity: float = float("nan")
    must_satisfied: float = float("nan")
    cannot_satisfied: float = float("nan")

    def to_payload(self) -> dict:
        def safe(v):
            return v if math.isfinite(v) else None  # NaN marks an absent rate

        return {
            "epoch_losses": self.epoch_losses,
            "seconds": self.seconds,
            "n_must": self.n_must,
            "n_cannot": self.n_cannot,
            "must_mean_affinity": safe(self.must_mean_affinity),
            "cannot_mean_affinity": safe(self.cannot_mean_affinity),
            "must_satisfied": safe(self.must_satisfied),
            "cannot_satisfied": safe(self.cannot_satisfied),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TrainReport":
        data = dict(payload)
        for key in ("must_mean_affinity", "cannot_mean_affinity",
                    "must_satisfied", "cannot_satisfied"):
            if data.get(key) is None:
                data[key] = float("nan")
        return cls(**data)


@dataclass
class EmbeddingModel:
    """MLP parameters; ``layer_dims`` is (D, hidden..., d)."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def latent_dim(self) -> int:
        return self.layer_dims[-1]

    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_model(
    input_dim: int,
    latent_dim: int = 20,
    hidden_dims: Sequence[int] = (50, 2000),
    init_std: float = 0.01,
    seed: int = 0,
) -> EmbeddingModel:
    """Weights drawn from N(0, init_std^2) with a seeded generator; biases zero."""
    if input_dim < 1 or latent_dim < 1 or any(h < 1 for h in hidden_dims):
        raise ValueError("all layer dims must be >= 1")
    dims = (input_dim, *hidden_dims, latent_dim)
    rng = np.random.default_rng(seed)
    weights = [rng.normal(0.0, init_std, (dims[i], dims[i + 1])) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return EmbeddingModel(layer_dims=dims, weights=weights, biases=biases)


def _dropout_masks(model: EmbeddingModel, n_rows: int, p: float, rng: np.random.Generator):
    """Inverted-dropout masks for the input of every linear layer."""
    keep = 1.0 - p
    return [
        (rng.random((n_rows, model.layer_dims[l])) >= p) / keep
        for l in range(len(model.weights))
    ]


def _forward(model: EmbeddingModel, X: np.ndarray, masks=None):
    """Forward pass; returns (output, cache) with the inputs seen by each linear."""
    lin_inputs = []
    relu_pos = []
    a = X
    h = a
    last = len(model.weights) - 1
    for l, (W, b) in enumerate(zip(model.weights, model.biases)):
        if masks is not None:
            a = a * masks[l]
        lin_inputs.append(a)
        h = a @ W + b
        if l < last:
            relu_pos.append(h > 0)
            a = np.maximum(h, 0.0)
    return h, (lin_inputs, relu_pos, masks)


def _backward(model: EmbeddingModel, cache, d_out: np.ndarray):
    """Parameter gradients from one (possibly twin-stacked) backward pass."""
    lin_inputs, relu_pos, masks = cache
    n_layers = len(model.weights)
    gW: list = [None] * n_layers
    gB: list = [None] * n_layers
    d = d_out
    for l in range(n_layers - 1, -1, -1):
        gW[l] = lin_inputs[l].T @ d
        gB[l] = d.sum(axis=0)
        if l > 0:
            da = d @ model.weights[l].T
            if masks is not None:
                da *= masks[l]
            da *= relu_pos[l - 1]
            d = da
    return gW, gB


def forward(
    model: EmbeddingModel,
    z: np.ndarray,
    train: bool = False,
    dropout_p: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Map representations to the latent space; EVAL mode unless ``train``."""
    Z = np.atleast_2d(np.asarray(z, dtype=float))
    if Z.shape[1] != model.input_dim:
        raise ValueError(f"expected input dim {model.input_dim}, got {Z.shape[1]}")
    masks = None
    if train and dropout_p > 0:
        if rng is None:
            raise ValueError("train-mode forward with dropout needs an rng")
        masks = _dropout_masks(model, Z.shape[0], dropout_p, rng)
    out, _ = _forward(model, Z, masks)
    return out[0] if np.ndim(z) == 1 else out


def affinity(u: np.ndarray, v: np.ndarray) -> float:
    """exp of the negative squared Euclidean distance; 1 iff identical."""
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return float(np.exp(-np.dot(d, d)))


def affinity_from_sq_distances(sqd: np.ndarray) -> np.ndarray:
    return np.exp(-np.asarray(sqd, dtype=float))


def _pair_terms(sqd: np.ndarray, y: np.ndarray):
    """Per-pair cross-entropy terms and their gradients w.r.t. sq distance.

    Probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before the logs;
    gradients are zero inside the clamped regions.
    """
    p = np.exp(-sqd)
    pc = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    terms = np.where(y == 1, -np.log(pc), -np.log1p(-pc))
    active = (p > PROB_EPS) & (p < 1.0 - PROB_EPS)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        d_cannot = -p / (1.0 - p)
    dsqd = np.where(y == 1, 1.0, d_cannot)
    return terms, np.where(active, dsqd, 0.0)


def batch_loss(
    model: EmbeddingModel,
    batch: Sequence[tuple[np.ndarray, np.ndarray, int]],
    dropout_p: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Summed loss over (z_i, z_j, y) pairs; EVAL mode unless dropout given."""
    if not len(batch):
        raise ValueError("batch must be non-empty")
    Zi = np.vstack([np.asarray(b[0], dtype=float) for b in batch])
    Zj = np.vstack([np.asarray(b[1], dtype=float) for b in batch])
    y = np.asarray([b[2] for b in batch], dtype=float)
    masks = None
    if dropout_p > 0:
        if rng is None:
            raise ValueError("dropout needs an rng")
        masks = _dropout_masks(model, 2 * len(batch), dropout_p, rng)
    loss, _, _ = loss_and_gradients(model, Zi, Zj, y, masks)
    return loss


def loss_and_gradients(
    model: EmbeddingModel,
    Zi: np.ndarray,
    Zj: np.ndarray,
    y: np.ndarray,
    masks=None,
):
    """Loss plus parameter gradients accumulated over both twins.

    The twins are stacked into one pass through the shared weights; rows
    0..B-1 of ``masks`` belong to the first twin, B..2B-1 to the second, so
    the two dropout masks stay independent.
    """
    B = Zi.shape[0]
    U, cache = _forward(model, np.vstack([Zi, Zj]), masks)
    diff = U[:B] - U[B:]
    sqd = (diff * diff).sum(axis=1)
    terms, dsqd = _pair_terms(sqd, y)
    dUi = (2.0 * dsqd)[:, None] * diff
    gW, gB = _backward(model, cache, np.vstack([dUi, -dUi]))
    return float(terms.sum()), gW, gB


def clip_gradients(gW: list, gB: list, max_norm: float) -> float:
    """Scale all gradients so the global L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float(np.dot(g.ravel(), g.ravel())) for g in gW + gB))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in gW + gB:
            g *= scale
    return total


class Adam:
    """Adam with bias correction; one state slot per parameter array."""

    def __init__(self, model: EmbeddingModel, cfg: TrainConfig):
        self.cfg = cfg
        self.mW = [np.zeros_like(W) for W in model.weights]
        self.vW = [np.zeros_like(W) for W in model.weights]
        self.mB = [np.zeros_like(b) for b in model.biases]
        self.vB = [np.zeros_like(b) for b in model.biases]
        self._scratch = [np.empty_like(a) for a in (*model.weights, *model.biases)]
        self.t = 0

    def step(self, model: EmbeddingModel, gW: list, gB: list):
        self.t += 1
        b1, b2 = self.cfg.beta1, self.cfg.beta2
        lr, eps = self.cfg.learning_rate, self.cfg.adam_eps
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        slots = zip(
            model.weights + model.biases,
            gW + gB,
            self.mW + self.mB,
            self.vW + self.vB,
            self._scratch,
        )
        for p, g, m, v, tmp in slots:
            m *= b1
            np.multiply(g, 1.0 - b1, out=tmp)
            m += tmp
            v *= b2
            np.multiply(g, g, out=tmp)
            tmp *= 1.0 - b2
            v += tmp
            np.divide(v, c2, out=tmp)
            np.sqrt(tmp, out=tmp)
            tmp += eps
            np.divide(m, tmp, out=tmp)
            tmp *= lr / c1
            p -= tmp


def train(
    model: EmbeddingModel,
    reps: list[Representation],
    constraint_set: ConstraintSet,
    cfg: TrainConfig,
) -> tuple[EmbeddingModel, TrainReport]:
    """Optimize the shared weights over shuffled constraint batches.

    Gradients from both twins accumulate into the same parameters; the
    global gradient norm is clipped before each Adam step. An empty
    constraint set is a warned no-op.
    """
    cfg.validate()
    rows = {r.word_id: k for k, r in enumerate(reps)}
    cons = constraint_set.constraints
    report = TrainReport()
    if not cons:
        warnings.warn("empty constraint set; training skipped")
        return model, report
    missing = [c for c in cons if c.i not in rows or c.j not in rows]
    if missing:
        raise ValueError(f"constraint references unknown word id: {missing[0].pair}")

    X = np.vstack([r.z for r in reps])
    pairs = np.array([[rows[c.i], rows[c.j]] for c in cons])
    y = np.array([float(c.label) for c in cons])
    n_pairs = len(cons)
    rng = np.random.default_rng(cfg.rng_seed)
    adam = Adam(model, cfg)
    t0 = time.perf_counter()
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n_pairs)
        total = 0.0
        for s in range(0, n_pairs, cfg.batch_size):
            idx = perm[s: s + cfg.batch_size]
            Zi, Zj, yb = X[pairs[idx, 0]], X[pairs[idx, 1]], y[idx]
            masks = None
            if cfg.dropout_p > 0:
                masks = _dropout_masks(model, 2 * len(idx), cfg.dropout_p, rng)
            loss, gW, gB = loss_and_gradients(model, Zi, Zj, yb, masks)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch offset {s}"
                )
            clip_gradients(gW, gB, cfg.grad_clip_norm)
            adam.step(model, gW, gB)
            total += loss
        report.epoch_losses.append(total / n_pairs)
    report.seconds = time.perf_counter() - t0

    U, _ = _forward(model, X)
    diff = U[pairs[:, 0]] - U[pairs[:, 1]]
    aff = affinity_from_sq_distances((diff * diff).sum(axis=1))
    must, cannot = y == 1, y == 0
    report.n_must = int(must.sum())
    report.n_cannot = int(cannot.sum())
    if report.n_must:
        report.must_mean_affinity = float(aff[must].mean())
        report.must_satisfied = float((aff[must] >= 0.5).mean())
    if report.n_cannot:
        report.cannot_mean_affinity = float(aff[cannot].mean())
        report.cannot_satisfied = float((aff[cannot] < 0.5).mean())
    return model, report


def embed_all(model: EmbeddingModel, reps: list[Representation]) -> np.ndarray:
    """EVAL-mode latents for every representation, one row each."""
    if not reps:
        return np.zeros((0, model.latent_dim))
    out, _ = _forward(model, np.vstack([r.z for r in reps]))
    return out


GRAD_ZERO_TOL = 1e-7


def gradient_check(
    model: EmbeddingModel,
    batch: Sequence[tuple[np.ndarray, np.ndarray, int]],
    h: float = 1e-5,
    max_coords_per_array: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Dropout is disabled. The relative error uses max(|a|, |n|, 1e-8) as the
    denominator. Coordinates where both sides sit below GRAD_ZERO_TOL count
    as exact agreement: central differences of structurally-zero gradients
    (the shared output bias cancels out of every pairwise distance) return
    only float roundoff, around 1e-10 for losses of order one.
    """
    Zi = np.vstack([np.asarray(b[0], dtype=float) for b in batch])
    Zj = np.vstack([np.asarray(b[1], dtype=float) for b in batch])
    y = np.asarray([b[2] for b in batch], dtype=float)
    _, gW, gB = loss_and_gradients(model, Zi, Zj, y)
    params = model.weights + model.biases
    grads = gW + gB
    if rng is None:
        rng = np.random.default_rng(0)

    def f() -> float:
        Ui, _ = _forward(model, Zi)
        Uj, _ = _forward(model, Zj)
        d = Ui - Uj
        terms, _ = _pair_terms((d * d).sum(axis=1), y)
        return float(terms.sum())

    max_rel = 0.0
    for arr, g in zip(params, grads):
        flat, gflat = arr.ravel(), g.ravel()
        coords = np.arange(flat.size)
        if max_coords_per_array is not None and flat.size > max_coords_per_array:
            coords = rng.choice(flat.size, size=max_coords_per_array, replace=False)
        for idx in coords:
            orig = flat[idx]
            flat[idx] = orig + h
            fp = f()
            flat[idx] = orig - h
            fm = f()
            flat[idx] = orig
            numeric = (fp - fm) / (2 * h)
            if abs(gflat[idx]) < GRAD_ZERO_TOL and abs(numeric) < GRAD_ZERO_TOL:
                continue
            rel = abs(gflat[idx] - numeric) / max(abs(gflat[idx]), abs(numeric), 1e-8)
            max_rel = max(max_rel, rel)
    return max_rel


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode_array(payload: dict) -> np.ndarray:
    raw = base64.b64decode(payload["data"])
    return np.frombuffer(raw, dtype=np.float64).reshape(payload["shape"]).copy()


def checkpoint_bytes(model: EmbeddingModel) -> bytes:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "layer_dims": list(model.layer_dims),
        "weights": [_encode_array(W) for W in model.weights],
        "biases": [_encode_array(b) for b in model.biases],
    }
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("ascii")


def model_from_checkpoint_bytes(raw: bytes) -> EmbeddingModel:
    payload = json.loads(raw.decode("ascii"))
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format: {payload.get('format')!r}")
    return EmbeddingModel(
        layer_dims=tuple(payload["layer_dims"]),
        weights=[_decode_array(p) for p in payload["weights"]],
        biases=[_decode_array(p) for p in payload["biases"]],
    )


def save_checkpoint(model: EmbeddingModel, path: str | Path):
    Path(path).write_bytes(checkpoint_bytes(model))


def load_checkpoint(path: str | Path) -> EmbeddingModel:
    return model_from_checkpoint_bytes(Path(path).read_bytes())
