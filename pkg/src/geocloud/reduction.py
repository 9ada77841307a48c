"""Two-dimensional embeddings of fixed-size point-cloud samples.

Two reducers are available:

* PCA on the flattened ``3s`` coordinate vectors (deterministic, fast).
* A fully connected autoencoder, ``3s -> 1024 -> 512 -> 256 -> 2`` with
  leaky-ReLU hidden layers and ``2 -> 256 -> 512 -> 3s`` with ReLU hidden
  layers, trained with Adam on the Chamfer reconstruction loss. Gradients
  are hand-derived; nearest-neighbour assignments inside the loss are held
  fixed for each forward pass.
"""

import csv
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .cloud import as_array
from .errors import DimensionError, EmptyRequest, InsufficientData

log = logging.getLogger(__name__)

LEAKY_SLOPE = 0.01


@dataclass
class LatentSet:
    rows: np.ndarray
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64).reshape(len(self.rows), -1)
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("latent coordinates must be finite")
        if self.labels and len(self.labels) != len(self.rows):
            raise ValueError("labels must align with rows")

    def __len__(self):
        return len(self.rows)

    def select(self, label):
        return self.rows[[i for i, lab in enumerate(self.labels) if lab == label]]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "label"])
            for i, row in enumerate(self.rows):
                lab = self.labels[i] if self.labels else ""
                w.writerow([repr(float(row[0])), repr(float(row[1])), lab])

    @classmethod
    def from_csv(cls, path):
        rows, labels = [], []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                rows.append((float(rec["x"]), float(rec["y"])))
                labels.append(rec.get("label", ""))
        return cls(np.array(rows).reshape(-1, 2), labels)


def flatten_samples(samples):
    """Stack samples of s 3-D points into an (N, 3s) matrix, row-major per point."""
    if not samples:
        raise EmptyRequest("no samples given")
    arrs = [as_array(s) for s in samples]
    shape = arrs[0].shape
    for a in arrs:
        if a.shape != shape:
            raise DimensionError(f"samples must share one shape, got {a.shape} and {shape}")
    return np.stack([a.ravel() for a in arrs])


def _labels_of(samples):
    return [getattr(s, "label", None) or "" for s in samples]


# -- PCA ---------------------------------------------------------------------

@dataclass
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray  # (3s, target_dim), orthonormal columns
    explained_variance: np.ndarray

    def transform(self, flat):
        return (flat - self.mean) @ self.basis

    def inverse_transform(self, latent):
        return latent @ self.basis.T + self.mean

    def to_dict(self):
        return {"kind": "pca", "mean": self.mean.tolist(), "basis": self.basis.tolist(),
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"]), np.array(d["basis"]), np.array(d["explained_variance"]))


def pca_fit(samples, target_dim=2):
    X = flatten_samples(samples)
    if X.shape[0] < 2:
        raise InsufficientData("PCA needs at least 2 samples")
    mean = X.mean(axis=0)
    _, sv, vt = np.linalg.svd(X - mean, full_matrices=False)
    basis = vt[:target_dim].T
    # fix the sign of each direction so fits are reproducible across LAPACK builds
    signs = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    basis = basis * signs
    if basis.shape[1] < target_dim:
        basis = np.hstack([basis, np.zeros((basis.shape[0], target_dim - basis.shape[1]))])
        sv = np.concatenate([sv, np.zeros(target_dim)])
    var = sv[:target_dim] ** 2 / (X.shape[0] - 1)
    return PcaModel(mean, basis, var)


def pca_fit_transform(samples, target_dim=2):
    """Fit PCA on flattened samples and return ``(LatentSet, PcaModel)``."""
    model = pca_fit(samples, target_dim)
    latent = LatentSet(model.transform(flatten_samples(samples)), _labels_of(samples))
    return latent, model


# -- autoencoder ---------------------------------------------------------------

@dataclass
class AutoencoderParams:
    """Weights ``W[i]`` of shape (in, out) and biases ``b[i]`` for each layer.

    ``encoder`` and ``decoder`` list layer widths including input and output,
    e.g. ``[1536, 1024, 512, 256, 2]`` and ``[2, 256, 512, 1536]``.
    """

    encoder: list
    decoder: list
    weights: list
    biases: list
    seed: int = 0

    def __post_init__(self):
        sizes = self.layer_shapes()
        if len(sizes) != len(self.weights) or len(sizes) != len(self.biases):
            raise DimensionError("layer count does not match architecture")
        for (fi, fo), W, b in zip(sizes, self.weights, self.biases):
            if W.shape != (fi, fo) or b.shape != (fo,):
                raise DimensionError(f"layer expects ({fi}, {fo}), got {W.shape} / {b.shape}")
        if self.encoder[-1] != self.decoder[0]:
            raise DimensionError("encoder output must match decoder input")

    def layer_shapes(self):
        enc = list(zip(self.encoder[:-1], self.encoder[1:]))
        dec = list(zip(self.decoder[:-1], self.decoder[1:]))
        return enc + dec

    @property
    def n_encoder(self):
        return len(self.encoder) - 1

    @property
    def points_per_sample(self):
        return self.encoder[0] // 3

    def copy(self):
        return AutoencoderParams(list(self.encoder), list(self.decoder),
                                 [W.copy() for W in self.weights],
                                 [b.copy() for b in self.biases], self.seed)

    def to_dict(self):
        return {
            "kind": "autoencoder",
            "architecture": {"encoder": list(self.encoder), "decoder": list(self.decoder),
                             "encoder_activation": "leaky_relu", "decoder_activation": "relu",
                             "leaky_slope": LEAKY_SLOPE, "output_activation": "linear"},
            "seeds": {"init": self.seed},
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d):
        arch = d["architecture"]
        return cls(list(arch["encoder"]), list(arch["decoder"]),
                   [np.array(W, dtype=np.float64) for W in d["weights"]],
                   [np.array(b, dtype=np.float64) for b in d["biases"]],
                   d.get("seeds", {}).get("init", 0))


def init_autoencoder(points_per_sample=512, seed=0, encoder_hidden=(1024, 512, 256),
                     latent_dim=2, decoder_hidden=(256, 512)):
    """Glorot-uniform weights, zero biases."""
    d_in = 3 * points_per_sample
    encoder = [d_in, *encoder_hidden, latent_dim]
    decoder = [latent_dim, *decoder_hidden, d_in]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fi, fo in list(zip(encoder[:-1], encoder[1:])) + list(zip(decoder[:-1], decoder[1:])):
        limit = np.sqrt(6.0 / (fi + fo))
        weights.append(rng.uniform(-limit, limit, size=(fi, fo)))
        biases.append(np.zeros(fo))
    return AutoencoderParams(encoder, decoder, weights, biases, seed)


def _leaky(z):
    # max(z, a z) equals the leaky ReLU for 0 < a < 1
    return np.maximum(z, LEAKY_SLOPE * z)


def _relu(z):
    return np.maximum(z, 0.0)


def _forward(params, X):
    """Batched forward pass; returns (latent, reconstruction, cache of pre-activations and inputs)."""
    h = X
    inputs, pre = [], []
    n_enc = params.n_encoder
    n_layers = len(params.weights)
    latent = None
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ W + b
        pre.append(z)
        last_enc = i == n_enc - 1
        last_dec = i == n_layers - 1
        if last_enc or last_dec:
            h = z
        elif i < n_enc:
            h = _leaky(z)
        else:
            h = _relu(z)
        if last_enc:
            latent = h
    return latent, h, (inputs, pre)


def ae_forward(params, sample):
    """Encode one sample to its latent vector and decode it back to a flat 3s-vector."""
    x = as_array(sample).ravel()
    if x.size != params.encoder[0]:
        raise DimensionError(f"sample has {x.size} coordinates, model expects {params.encoder[0]}")
    latent, recon, _ = _forward(params, x[None, :])
    return latent[0], recon[0]


def _nn_assign(r, t):
    """Pairwise distances plus nearest-neighbour indices in both directions (lowest index on ties).

    Works on single clouds (s, 3) or batches (B, s, 3).
    """
    diff = r[..., :, None, :] - t[..., None, :, :]
    d = np.sqrt(np.einsum("...ijk,...ijk->...ij", diff, diff))
    return d, d.argmin(axis=-1), d.argmin(axis=-2)


def chamfer_loss(reconstructed, target):
    """Chamfer distance between a flat 3s reconstruction and an s-point target."""
    t = as_array(target)
    r = np.asarray(reconstructed, dtype=np.float64)
    if r.size != t.size or t.shape[1] != 3:
        raise DimensionError(f"reconstruction of size {r.size} does not match target {t.shape}")
    r = r.reshape(-1, 3)
    d, a, b = _nn_assign(r, t)
    return float(d[np.arange(len(r)), a].mean() + d[b, np.arange(len(t))].mean())


def _batch_chamfer(R, T, grad=False):
    """Per-sample Chamfer losses for batches R, T of shape (B, s, 3), optionally with dL/dR."""
    B, s_r, _ = R.shape
    s_t = T.shape[1]
    # |r|^2 + |t|^2 - 2 r.t keeps the batch on BLAS; rounding below zero is clamped
    d2 = (np.einsum("bik,bik->bi", R, R)[:, :, None] + np.einsum("bjk,bjk->bj", T, T)[:, None, :]
          - 2.0 * (R @ np.swapaxes(T, 1, 2)))
    a, b = d2.argmin(axis=2), d2.argmin(axis=1)
    d_ra = np.sqrt(np.maximum(np.take_along_axis(d2, a[:, :, None], axis=2)[:, :, 0], 0.0))
    d_tb = np.sqrt(np.maximum(np.take_along_axis(d2, b[:, None, :], axis=1)[:, 0, :], 0.0))
    losses = d_ra.mean(axis=1) + d_tb.mean(axis=1)
    if not grad:
        return losses, None
    bi = np.arange(B)[:, None]
    g = np.zeros_like(R)
    diff = R - T[bi, a]
    safe = np.where(d_ra > 0, d_ra, 1.0)
    g += np.where(d_ra[..., None] > 0, diff / safe[..., None], 0.0) / s_r
    diff = R[bi, b] - T
    safe = np.where(d_tb > 0, d_tb, 1.0)
    contrib = np.where(d_tb[..., None] > 0, diff / safe[..., None], 0.0) / s_t
    np.add.at(g, (np.broadcast_to(bi, b.shape), b), contrib)
    return losses, g


def _stack(samples, dtype=np.float64):
    if isinstance(samples, np.ndarray):
        return samples.astype(dtype, copy=False)
    return np.stack([as_array(s) for s in samples]).astype(dtype, copy=False)


def loss_and_grad(params, batch):
    """Mean Chamfer reconstruction loss over a batch and its gradient per layer."""
    T = _stack(batch, params.weights[0].dtype)
    X = T.reshape(len(T), -1)
    _, recon, (inputs, pre) = _forward(params, X)
    B = X.shape[0]
    losses, gR = _batch_chamfer(recon.reshape(T.shape), T, grad=True)
    g = gR.reshape(B, -1) / B
    n_enc = params.n_encoder
    n_layers = len(params.weights)
    gW = [None] * n_layers
    gb = [None] * n_layers
    for i in range(n_layers - 1, -1, -1):
        # g is d(loss)/d(output of layer i); turn it into d(loss)/d(pre-activation)
        if i != n_layers - 1 and i != n_enc - 1:
            z = pre[i]
            if i < n_enc:
                g = np.where(z > 0, g, LEAKY_SLOPE * g)
            else:
                g = g * (z > 0)
        gW[i] = inputs[i].T @ g
        gb[i] = g.sum(axis=0)
        if i > 0:
            g = g @ params.weights[i].T
    return float(losses.mean()), gW, gb


class Adam:
    """Adam with bias correction, updating a list of arrays in place."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self._tmp = [np.empty_like(p) for p in params]

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        # bias correction folded into the step size and epsilon
        alpha = self.lr * np.sqrt(c2) / c1
        eps = self.eps * np.sqrt(c2)
        for p, g, m, v, tmp in zip(self.params, grads, self.m, self.v, self._tmp):
            np.multiply(g, 1.0 - self.beta1, out=tmp)
            m *= self.beta1
            m += tmp
            np.multiply(g, g, out=tmp)
            tmp *= 1.0 - self.beta2
            v *= self.beta2
            v += tmp
            np.sqrt(v, out=tmp)
            tmp += eps
            np.divide(m, tmp, out=tmp)
            tmp *= alpha
            p -= tmp


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 400
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    encoder_hidden: tuple = (1024, 512, 256)
    decoder_hidden: tuple = (256, 512)
    # float32 halves memory traffic in the optimiser; results are stored as float64
    dtype: str = "float64"

    def __post_init__(self):
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


def mean_loss(params, samples, chunk=64):
    """Average Chamfer reconstruction loss over a list of samples."""
    T = _stack(samples, params.weights[0].dtype)
    total = 0.0
    for lo in range(0, len(T), chunk):
        Tb = T[lo:lo + chunk]
        _, recon, _ = _forward(params, Tb.reshape(len(Tb), -1))
        total += _batch_chamfer(recon.reshape(Tb.shape), Tb)[0].sum()
    return float(total / len(T))


def ae_train(samples, val=None, config=None):
    """Train an autoencoder with mini-batch Adam.

    Returns ``(params, history)``. ``history["train"]`` is each epoch's mean
    batch loss (accumulated while the weights move), ``history["val"]`` is the
    validation loss after the epoch, and ``history["initial"]`` is the full
    training loss before any update.
    """
    cfg = config or TrainConfig()
    if not samples:
        raise EmptyRequest("training set is empty")
    s = as_array(samples[0]).shape[0]
    params = init_autoencoder(s, cfg.seed, cfg.encoder_hidden, 2, cfg.decoder_hidden)
    dt = np.dtype(cfg.dtype)
    params.weights = [W.astype(dt) for W in params.weights]
    params.biases = [b.astype(dt) for b in params.biases]
    train = _stack(samples, dt)
    val = _stack(val, dt) if val is not None and len(val) else None
    opt = Adam(params.weights + params.biases, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
    rng = np.random.default_rng([cfg.seed, 7])
    history = {"initial": mean_loss(params, train), "train": [], "val": []}
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train))
        total = 0.0
        for start in range(0, len(train), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, gW, gb = loss_and_grad(params, train[idx])
            total += loss * len(idx)
            opt.step(gW + gb)
        history["train"].append(total / len(train))
        if val is not None:
            history["val"].append(mean_loss(params, val))
        log.debug("epoch %d train %.6f", epoch, history["train"][-1])
    params.weights = [W.astype(np.float64) for W in params.weights]
    params.biases = [b.astype(np.float64) for b in params.biases]
    return params, history


def embed(samples, model):
    """Map each sample to its 2-D latent vector, preserving order."""
    if isinstance(model, PcaModel):
        X = flatten_samples(samples)
        if X.shape[1] != model.mean.size:
            raise DimensionError(f"samples flatten to {X.shape[1]} values, model expects {model.mean.size}")
        rows = model.transform(X)
    elif isinstance(model, AutoencoderParams):
        X = flatten_samples(samples)
        if X.shape[1] != model.encoder[0]:
            raise DimensionError(f"samples flatten to {X.shape[1]} values, model expects {model.encoder[0]}")
        rows, _, _ = _forward(model, X)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return LatentSet(rows, _labels_of(samples))


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh)


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    if d.get("kind") == "pca":
        return PcaModel.from_dict(d)
    return AutoencoderParams.from_dict(d)
