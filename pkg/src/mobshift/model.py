"""Recurrent variational clustering model over fused staypoint features.

A trip is a sequence of staypoints, each carrying a 42-wide temporal vector
and a 39-wide spatial vector.  Both blocks are projected to the hidden width,
concatenated and passed through a tanh fusion layer; a GRU consumes the fused
sequence and its final state gives the latent mean and log-variance.  Cluster
responsibilities come from a softmax head on the latent mean, and the cluster
embedding table splits the latent mean into a shared part ``z_c`` and an
individual residual ``z_b``.  A GRU decoder driven by the latent code
reconstructs both feature blocks at every step.

Objective per batch::

    recon   = alpha * MSE(temporal) + beta * MSE(spatial)     (per element)
    kl      = mean over trips of KL(N(mu, var) || N(0, I))
    entropy = sign * mean over trips of sum_k g_k log g_k     (sign -1 by default)
    center  = mean over trips of ||mu - E[argmax g]||^2
    total   = recon + kl_weight * kl + entropy + center

Gradients are derived by hand; ``tests/test_gradients.py`` checks them
against central finite differences.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _kernels

log = logging.getLogger(__name__)

TEMPORAL_DIM = 42
SPATIAL_DIM = 39
CHECKPOINT_MAGIC = b"MSHFTCM\x00"
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    def __init__(self, message, model=None, history=None):
        super().__init__(message)
        self.model = model
        self.history = history


@dataclass
class ModelConfig:
    K: int = 6
    hidden: int = 64
    latent: int = 16
    alpha: float = 1.5
    beta: float = 1.2
    epochs: int = 50
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    kl_warmup_epochs: int = 10
    grad_clip: float = 5.0
    entropy_sign: float = -1.0     # -1 penalises assignment entropy (sharpens); +1 rewards it
    use_temporal: bool = True
    use_spatial: bool = True
    temporal_dim: int = TEMPORAL_DIM
    spatial_dim: int = SPATIAL_DIM

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    H, D, K = cfg.hidden, cfg.latent, cfg.K
    return {
        "Wt": (cfg.temporal_dim, H), "bt": (H,),
        "Ws": (cfg.spatial_dim, H), "bs": (H,),
        "Wf": (2 * H, H), "bf": (H,),
        "enc_Wx": (H, 3 * H), "enc_bx": (3 * H,), "enc_Wh": (H, 3 * H), "enc_bh": (3 * H,),
        "Wm": (H, D), "bm": (D,), "Wv": (H, D), "bv": (D,),
        "Wc": (D, K), "bc": (K,),
        "E": (K, D),
        "Wd0": (D, H), "bd0": (H,),
        "dec_Wx": (D, 3 * H), "dec_bx": (3 * H,), "dec_Wh": (H, 3 * H), "dec_bh": (3 * H,),
        "Wot": (H, cfg.temporal_dim), "bot": (cfg.temporal_dim,),
        "Wos": (H, cfg.spatial_dim), "bos": (cfg.spatial_dim,),
    }


class ClusterModel:
    def __init__(self, config: ModelConfig | None = None, params: dict[str, np.ndarray] | None = None):
        self.config = config or ModelConfig()
        shapes = param_shapes(self.config)
        if params is None:
            rng = np.random.default_rng(self.config.seed)
            params = {}
            for name, shape in shapes.items():
                if len(shape) == 1:
                    params[name] = np.zeros(shape)
                else:
                    params[name] = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), size=shape)
        for name, shape in shapes.items():
            if params[name].shape != shape:
                raise ValueError(f"parameter {name} has shape {params[name].shape}, expected {shape}")
        self.params = {k: np.ascontiguousarray(params[k], dtype=np.float64) for k in shapes}

    @property
    def K(self) -> int:
        return self.config.K

    def copy(self) -> "ClusterModel":
        return ClusterModel(ModelConfig(**asdict(self.config)), {k: v.copy() for k, v in self.params.items()})

    def input_gates(self) -> tuple[float, float]:
        return float(self.config.use_temporal), float(self.config.use_spatial)


# --------------------------------------------------------------------------
# batches
# --------------------------------------------------------------------------

@dataclass
class TripBatch:
    """Time-major, right-padded trip features."""
    temporal: np.ndarray  # (L, B, 42)
    spatial: np.ndarray   # (L, B, 39)
    mask: np.ndarray      # (L, B)

    @property
    def size(self) -> int:
        return self.mask.shape[1]


def pack_batch(trips) -> TripBatch:
    """``trips`` is a sequence of (temporal (L_i, 42), spatial (L_i, 39)) pairs."""
    if len(trips) == 0:
        raise ValueError("empty batch")
    lengths = [len(t) for t, _ in trips]
    if min(lengths) < 1:
        raise ValueError("trip with no staypoints")
    L, B = max(lengths), len(trips)
    dt, ds = trips[0][0].shape[1], trips[0][1].shape[1]
    xt = np.zeros((L, B, dt))
    xs = np.zeros((L, B, ds))
    mask = np.zeros((L, B))
    for b, (t, s) in enumerate(trips):
        n = len(t)
        xt[:n, b] = t
        xs[:n, b] = s
        mask[:n, b] = 1.0
    return TripBatch(xt, xs, mask)


# --------------------------------------------------------------------------
# forward pieces
# --------------------------------------------------------------------------

def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def fuse(temporal, spatial, model: ClusterModel) -> np.ndarray:
    """Fused hidden-width vector(s) for one or many staypoints."""
    temporal = np.asarray(temporal, dtype=np.float64)
    spatial = np.asarray(spatial, dtype=np.float64)
    if not (np.isfinite(temporal).all() and np.isfinite(spatial).all()):
        raise ValueError("non-finite feature input")
    return _fuse(temporal, spatial, model)[2]


def _fuse(xt, xs, model):
    p = model.params
    gt, gs = model.input_gates()
    pt = (gt * xt) @ p["Wt"] + p["bt"]
    ps = (gs * xs) @ p["Ws"] + p["bs"]
    c = np.concatenate([pt, ps], axis=-1)
    u = np.tanh(c @ p["Wf"] + p["bf"])
    return c, u, u


def _encode(batch: TripBatch, model: ClusterModel):
    p = model.params
    c, u, _ = _fuse(batch.temporal, batch.spatial, model)
    gx = np.ascontiguousarray(u @ p["enc_Wx"] + p["enc_bx"])
    h0 = np.zeros((batch.size, model.config.hidden))
    enc = _kernels.gru_forward(gx, h0, p["enc_Wh"], p["enc_bh"], np.ascontiguousarray(batch.mask))
    h_last = enc[0][-1]
    mu = h_last @ p["Wm"] + p["bm"]
    logvar = h_last @ p["Wv"] + p["bv"]
    logits = mu @ p["Wc"] + p["bc"]
    return {"c": c, "u": u, "enc": enc, "h_last": h_last, "mu": mu, "logvar": logvar, "logits": logits}


def _decode(z, steps, model):
    p = model.params
    B = z.shape[0]
    hd0 = np.tanh(z @ p["Wd0"] + p["bd0"])
    gx1 = z @ p["dec_Wx"] + p["dec_bx"]
    gx = np.ascontiguousarray(np.broadcast_to(gx1, (steps, B, gx1.shape[1])))
    dec = _kernels.gru_forward(gx, hd0, p["dec_Wh"], p["dec_bh"], np.ones((steps, B)))
    hs = dec[0][1:]
    xt_hat = hs @ p["Wot"] + p["bot"]
    xs_hat = hs @ p["Wos"] + p["bos"]
    return {"hd0": hd0, "dec": dec, "xt_hat": xt_hat, "xs_hat": xs_hat}


@dataclass
class LatentState:
    z_mean: np.ndarray
    z_logvar: np.ndarray
    gamma: np.ndarray
    cluster_id: int
    z_c: np.ndarray
    z_b: np.ndarray


def encode_trips(trips, model: ClusterModel, batch_size: int = 256):
    """Deterministic encoding of many trips.

    Returns ``(z_mean (N, D), z_logvar (N, D), gamma (N, K))``.
    """
    mus, lvs, gammas = [], [], []
    for lo in range(0, len(trips), batch_size):
        out = _encode(pack_batch(trips[lo:lo + batch_size]), model)
        mus.append(out["mu"])
        lvs.append(out["logvar"])
        gammas.append(_softmax(out["logits"]))
    D, K = model.config.latent, model.K
    if not mus:
        return np.zeros((0, D)), np.zeros((0, D)), np.zeros((0, K))
    return np.concatenate(mus), np.concatenate(lvs), np.concatenate(gammas)


def encode_trip(temporal, spatial, model: ClusterModel) -> LatentState:
    temporal = np.atleast_2d(np.asarray(temporal, dtype=np.float64))
    spatial = np.atleast_2d(np.asarray(spatial, dtype=np.float64))
    if temporal.shape[0] == 0:
        raise ValueError("cannot encode an empty trip")
    if not (np.isfinite(temporal).all() and np.isfinite(spatial).all()):
        raise ValueError("non-finite feature input")
    mu, lv, gamma = encode_trips([(temporal, spatial)], model)
    z_c = gamma[0] @ model.params["E"]
    return LatentState(mu[0], lv[0], gamma[0], int(np.argmax(gamma[0])), z_c, mu[0] - z_c)


def decode_trip(z, length: int, model: ClusterModel):
    """Reconstructions ``(length, 42)`` and ``(length, 39)`` for latent ``z``."""
    if length <= 0:
        raise ValueError("length must be >= 1")
    out = _decode(np.atleast_2d(np.asarray(z, dtype=np.float64)), int(length), model)
    return out["xt_hat"][:, 0, :], out["xs_hat"][:, 0, :]


# --------------------------------------------------------------------------
# loss and gradients
# --------------------------------------------------------------------------

def loss_and_grads(model: ClusterModel, batch: TripBatch, eps: np.ndarray | None,
                   kl_weight: float = 1.0, need_grads: bool = True):
    """Total loss, per-term breakdown and (optionally) parameter gradients.

    ``eps`` is the reparameterisation noise of shape (B, latent); ``None``
    decodes from the latent mean.
    """
    cfg = model.config
    p = model.params
    B = batch.size
    L = batch.mask.shape[0]
    alpha = cfg.alpha if cfg.use_temporal else 0.0
    beta = cfg.beta if cfg.use_spatial else 0.0

    enc = _encode(batch, model)
    mu, logvar, logits = enc["mu"], enc["logvar"], enc["logits"]
    std = np.exp(0.5 * logvar)
    z = mu + std * eps if eps is not None else mu
    dec = _decode(z, L, model)

    m = batch.mask[..., None]
    n_valid = batch.mask.sum()
    rt = (dec["xt_hat"] - batch.temporal) * m
    rs = (dec["xs_hat"] - batch.spatial) * m
    mse_t = (rt ** 2).sum() / (n_valid * cfg.temporal_dim)
    mse_s = (rs ** 2).sum() / (n_valid * cfg.spatial_dim)
    recon = alpha * mse_t + beta * mse_s

    kl_per = -0.5 * (1.0 + logvar - mu ** 2 - np.exp(logvar)).sum(axis=1)
    kl = kl_per.mean()

    log_g = _log_softmax(logits)
    g = np.exp(log_g)
    neg_ent = (g * log_g).sum(axis=1)
    entropy = cfg.entropy_sign * neg_ent.mean()

    hard = np.argmax(g, axis=1)
    diff = mu - p["E"][hard]
    center = (diff ** 2).sum(axis=1).mean()

    total = recon + kl_weight * kl + entropy + center
    terms = {"total": float(total), "recon": float(recon), "mse_temporal": float(mse_t),
             "mse_spatial": float(mse_s), "kl": float(kl), "entropy": float(entropy), "center": float(center)}
    if not need_grads:
        return total, terms, None

    gr = {k: np.zeros_like(v) for k, v in p.items()}
    H = cfg.hidden

    # decoder heads
    dxt = (2.0 * alpha / (n_valid * cfg.temporal_dim)) * rt
    dxs = (2.0 * beta / (n_valid * cfg.spatial_dim)) * rs
    hsd = dec["dec"][0][1:]
    flat_h = hsd.reshape(-1, H)
    gr["Wot"] = flat_h.T @ dxt.reshape(-1, cfg.temporal_dim)
    gr["bot"] = dxt.reshape(-1, cfg.temporal_dim).sum(axis=0)
    gr["Wos"] = flat_h.T @ dxs.reshape(-1, cfg.spatial_dim)
    gr["bos"] = dxs.reshape(-1, cfg.spatial_dim).sum(axis=0)
    dh_out = np.ascontiguousarray(dxt @ p["Wot"].T + dxs @ p["Wos"].T)

    # decoder GRU
    _, r_d, z_d, n_d, ghn_d = dec["dec"]
    dgxd, dhd0, gr["dec_Wh"], gr["dec_bh"] = _kernels.gru_backward(
        dh_out, np.zeros((B, H)), dec["dec"][0], r_d, z_d, n_d, ghn_d, p["dec_Wh"], np.ones((L, B)))
    dgx1 = dgxd.sum(axis=0)
    gr["dec_Wx"] = z.T @ dgx1
    gr["dec_bx"] = dgx1.sum(axis=0)
    dz = dgx1 @ p["dec_Wx"].T
    da0 = dhd0 * (1.0 - dec["hd0"] ** 2)
    gr["Wd0"] = z.T @ da0
    gr["bd0"] = da0.sum(axis=0)
    dz += da0 @ p["Wd0"].T

    # reparameterisation
    dmu = dz.copy()
    dlv = dz * eps * 0.5 * std if eps is not None else np.zeros_like(logvar)

    # KL
    dmu += kl_weight * mu / B
    dlv += kl_weight * (-0.5) * (1.0 - np.exp(logvar)) / B

    # negative entropy through the softmax
    dlogits = cfg.entropy_sign * g * (log_g - neg_ent[:, None]) / B
    gr["Wc"] = mu.T @ dlogits
    gr["bc"] = dlogits.sum(axis=0)
    dmu += dlogits @ p["Wc"].T

    # center
    dmu += 2.0 * diff / B
    np.add.at(gr["E"], hard, -2.0 * diff / B)

    # latent heads
    h_last = enc["h_last"]
    gr["Wm"] = h_last.T @ dmu
    gr["bm"] = dmu.sum(axis=0)
    gr["Wv"] = h_last.T @ dlv
    gr["bv"] = dlv.sum(axis=0)
    dh_last = np.ascontiguousarray(dmu @ p["Wm"].T + dlv @ p["Wv"].T)

    # encoder GRU
    hs_e, r_e, z_e, n_e, ghn_e = enc["enc"]
    dgx, _, gr["enc_Wh"], gr["enc_bh"] = _kernels.gru_backward(
        np.zeros((L, B, H)), dh_last, hs_e, r_e, z_e, n_e, ghn_e, p["enc_Wh"],
        np.ascontiguousarray(batch.mask))
    u = enc["u"]
    gr["enc_Wx"] = u.reshape(-1, H).T @ dgx.reshape(-1, 3 * H)
    gr["enc_bx"] = dgx.reshape(-1, 3 * H).sum(axis=0)
    du = dgx @ p["enc_Wx"].T

    # fusion and projections
    da = du * (1.0 - u ** 2)
    c = enc["c"]
    gr["Wf"] = c.reshape(-1, 2 * H).T @ da.reshape(-1, H)
    gr["bf"] = da.reshape(-1, H).sum(axis=0)
    dc = da @ p["Wf"].T
    gt, gs = model.input_gates()
    gr["Wt"] = (gt * batch.temporal).reshape(-1, cfg.temporal_dim).T @ dc[..., :H].reshape(-1, H)
    gr["bt"] = dc[..., :H].reshape(-1, H).sum(axis=0)
    gr["Ws"] = (gs * batch.spatial).reshape(-1, cfg.spatial_dim).T @ dc[..., H:].reshape(-1, H)
    gr["bs"] = dc[..., H:].reshape(-1, H).sum(axis=0)
    return total, terms, gr


def total_loss(trips, model: ClusterModel, rng_seed: int | None = 0, kl_weight: float = 1.0):
    """Loss of a list of (temporal, spatial) trips; ``rng_seed=None`` uses no sampling."""
    batch = pack_batch(trips)
    eps = None
    if rng_seed is not None:
        eps = np.random.default_rng(rng_seed).standard_normal((batch.size, model.config.latent))
    total, terms, _ = loss_and_grads(model, batch, eps, kl_weight, need_grads=False)
    if not np.isfinite(total):
        raise FloatingPointError(f"non-finite loss: {terms}")
    return float(total), terms


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------

def kmeans(x: np.ndarray, k: int, rng: np.random.Generator, iters: int = 50) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding; returns (k, d) centers."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    for _ in range(iters):
        dist = ((x[:, None, :] - centers[None]) ** 2).sum(axis=2)
        lab = dist.argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            sel = lab == j
            if sel.any():
                new[j] = x[sel].mean(axis=0)
        if np.allclose(new, centers):
            break
        centers = new
    return centers


def init_clusters(model: ClusterModel, trips, rng: np.random.Generator) -> None:
    """Seed the embedding table with k-means on the current latent means and
    set the responsibility head to the matching soft nearest-center rule."""
    mu, _, _ = encode_trips(trips, model)
    centers = kmeans(mu, model.K, rng)
    d2 = ((mu[:, None, :] - centers[None]) ** 2).sum(axis=2).min(axis=1)
    temp = max(float(np.mean(d2)), 1e-8)
    model.params["E"] = centers.copy()
    model.params["Wc"] = np.ascontiguousarray(2.0 * centers.T / temp)
    model.params["bc"] = -(centers ** 2).sum(axis=1) / temp


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.b1 ** self.t
        c2 = 1.0 - self.b2 ** self.t
        for k in params:
            g = grads[k]
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass
class TrainResult:
    model: ClusterModel
    history: list[dict] = field(default_factory=list)


def train(trips, config: ModelConfig | None = None, epochs: int | None = None, batch_size: int | None = None,
          learning_rate: float | None = None, seed: int | None = None, init_model: ClusterModel | None = None,
          progress=None) -> TrainResult:
    """Fit the model on training trips (list of (temporal, spatial) pairs).

    Deterministic for a given seed.  Raises :class:`TrainingDiverged` carrying
    the last finite model if the loss becomes non-finite.
    """
    cfg = ModelConfig(**asdict(config or ModelConfig()))
    if epochs is not None:
        cfg.epochs = epochs
    if batch_size is not None:
        cfg.batch_size = batch_size
    if learning_rate is not None:
        cfg.lr = learning_rate
    if seed is not None:
        cfg.seed = seed
    if len(trips) < cfg.K:
        raise ValueError(f"need at least K={cfg.K} training trips, got {len(trips)}")
    model = init_model.copy() if init_model is not None else ClusterModel(cfg)
    model.config = cfg
    rng = np.random.default_rng([cfg.seed, 1])
    init_clusters(model, trips, rng)
    opt = Adam(model.params, lr=cfg.lr)
    history: list[dict] = []
    n = len(trips)
    for epoch in range(cfg.epochs):
        kl_w = min(1.0, epoch / cfg.kl_warmup_epochs) if cfg.kl_warmup_epochs > 0 else 1.0
        order = rng.permutation(n)
        sums: dict[str, float] = {}
        good = model.copy()
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            batch = pack_batch([trips[i] for i in idx])
            eps = rng.standard_normal((batch.size, cfg.latent))
            total, terms, grads = loss_and_grads(model, batch, eps, kl_w)
            if not np.isfinite(total) or not all(np.isfinite(g).all() for g in grads.values()):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}: {terms}", good, history)
            if cfg.grad_clip > 0:
                norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
                if norm > cfg.grad_clip:
                    for g in grads.values():
                        g *= cfg.grad_clip / norm
            opt.step(model.params, grads)
            for k, v in terms.items():
                sums[k] = sums.get(k, 0.0) + v * batch.size
        record = {"epoch": epoch, "kl_weight": kl_w, **{k: v / n for k, v in sums.items()}}
        history.append(record)
        if progress is not None:
            progress(record)
        log.debug("epoch %d total %.5f", epoch, record["total"])
    return TrainResult(model, history)


def cluster_centers(model: ClusterModel, trips=None, latents=None) -> np.ndarray:
    """Mean latent mean per hard-assigned cluster; empty clusters use their embedding row.

    Pass either the training ``trips`` or precomputed ``latents=(z_mean, gamma)``.
    """
    if latents is None:
        mu, _, gamma = encode_trips(trips, model)
    else:
        mu, gamma = latents
    centers = model.params["E"].copy()
    if len(mu):
        hard = np.argmax(gamma, axis=1)
        for k in range(model.K):
            sel = hard == k
            if sel.any():
                centers[k] = mu[sel].mean(axis=0)
    return centers


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def save_checkpoint(model: ClusterModel, path: str | Path) -> None:
    """Binary layout: 8-byte magic, uint32 version, uint32 header length,
    UTF-8 JSON header (config and ordered parameter shapes), then every
    parameter as little-endian float64 in row-major order."""
    shapes = param_shapes(model.config)
    header = json.dumps({"config": asdict(model.config),
                         "params": [[k, list(s)] for k, s in shapes.items()]}, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        f.write(header)
        for k in shapes:
            f.write(np.ascontiguousarray(model.params[k], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> ClusterModel:
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(data[16:16 + hlen])
    offset = 16 + hlen
    params = {}
    for name, shape in header["params"]:
        count = int(np.prod(shape))
        params[name] = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * count
    return ClusterModel(ModelConfig.from_dict(header["config"]), params)
