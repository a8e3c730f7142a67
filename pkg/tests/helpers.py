"""Independent oracles shared by several test modules."""
import itertools
import math

import numpy as np

from mobshift import model as M


def tiny_model(seed=3, **overrides):
    cfg = M.ModelConfig(K=3, hidden=8, latent=4, seed=seed, **overrides)
    mdl = M.ClusterModel(cfg)
    r = np.random.default_rng(seed + 100)
    for k in mdl.params:  # move biases and E off zero so every term is exercised
        mdl.params[k] = mdl.params[k] + r.normal(0, 0.3, mdl.params[k].shape)
    return mdl


def tiny_batch(seed=0, lengths=(5, 3)):
    r = np.random.default_rng(seed)
    return [(r.random((n, 42)), r.random((n, 39))) for n in lengths]


def gradient_check(mdl, trips, eps, kl_weight=1.0, step=1e-4):
    """Central differences for every parameter entry.

    Returns (relative errors, analytic grads)."""
    batch = M.pack_batch(trips)
    _, _, grads = M.loss_and_grads(mdl, batch, eps, kl_weight)
    rel = []
    for name, v in mdl.params.items():
        for i in range(v.size):
            old = v.flat[i]
            v.flat[i] = old + step
            lp = M.loss_and_grads(mdl, batch, eps, kl_weight, need_grads=False)[0]
            v.flat[i] = old - step
            lm = M.loss_and_grads(mdl, batch, eps, kl_weight, need_grads=False)[0]
            v.flat[i] = old
            num = (lp - lm) / (2 * step)
            a = grads[name].flat[i]
            rel.append(abs(a - num) / max(abs(a), abs(num), 1e-8))
    return np.array(rel), grads


# ---------------------------------------------------------------- straight-line loss

def _sig(x):
    return 1.0 / (1.0 + math.exp(-x))


def _gru_step(x, h, Wx, bx, Wh, bh):
    H = h.size
    gx = x @ Wx + bx
    gh = h @ Wh + bh
    out = np.empty(H)
    for j in range(H):
        r = _sig(gx[j] + gh[j])
        z = _sig(gx[H + j] + gh[H + j])
        n = math.tanh(gx[2 * H + j] + r * gh[2 * H + j])
        out[j] = (1 - z) * n + z * h[j]
    return out


def oracle_loss(mdl, trips, eps=None, kl_weight=1.0):
    """Loss written trip by trip, step by step, without the batched code path."""
    p, cfg = mdl.params, mdl.config
    alpha = cfg.alpha if cfg.use_temporal else 0.0
    beta = cfg.beta if cfg.use_spatial else 0.0
    se_t = se_s = 0.0
    n_steps = 0
    kl = ent = cen = 0.0
    for b, (xt, xs) in enumerate(trips):
        h = np.zeros(cfg.hidden)
        for t in range(len(xt)):
            pt = (xt[t] if cfg.use_temporal else 0 * xt[t]) @ p["Wt"] + p["bt"]
            ps = (xs[t] if cfg.use_spatial else 0 * xs[t]) @ p["Ws"] + p["bs"]
            u = np.tanh(np.concatenate([pt, ps]) @ p["Wf"] + p["bf"])
            h = _gru_step(u, h, p["enc_Wx"], p["enc_bx"], p["enc_Wh"], p["enc_bh"])
        mu = h @ p["Wm"] + p["bm"]
        lv = h @ p["Wv"] + p["bv"]
        logits = mu @ p["Wc"] + p["bc"]
        g = np.exp(logits - logits.max())
        g /= g.sum()
        z = mu + np.exp(0.5 * lv) * eps[b] if eps is not None else mu
        hd = np.tanh(z @ p["Wd0"] + p["bd0"])
        for t in range(len(xt)):
            hd = _gru_step(z, hd, p["dec_Wx"], p["dec_bx"], p["dec_Wh"], p["dec_bh"])
            se_t += float(((hd @ p["Wot"] + p["bot"] - xt[t]) ** 2).sum())
            se_s += float(((hd @ p["Wos"] + p["bos"] - xs[t]) ** 2).sum())
            n_steps += 1
        kl += sum(-0.5 * (1 + lv[j] - mu[j] ** 2 - math.exp(lv[j])) for j in range(cfg.latent))
        ent += sum(gk * math.log(gk) for gk in g)
        k = int(np.argmax(g))
        cen += float(((mu - p["E"][k]) ** 2).sum())
    B = len(trips)
    mse_t = se_t / (n_steps * cfg.temporal_dim)
    mse_s = se_s / (n_steps * cfg.spatial_dim)
    recon = alpha * mse_t + beta * mse_s
    terms = {"recon": recon, "mse_temporal": mse_t, "mse_spatial": mse_s, "kl": kl / B,
             "entropy": cfg.entropy_sign * ent / B, "center": cen / B}
    terms["total"] = recon + kl_weight * terms["kl"] + terms["entropy"] + terms["center"]
    return terms


# ---------------------------------------------------------------- scoring oracles

def js_oracle(P, Q):
    total = 0.0
    for p, q in zip(P, Q):
        m = (p + q) / 2
        if p > 0:
            total += 0.5 * p * math.log2(p / m)
        if q > 0:
            total += 0.5 * q * math.log2(q / m)
    return total


def frob_oracle(A, B):
    K = len(A)
    s = 0.0
    for i in range(K):
        for j in range(K):
            s += (A[i][j] - B[i][j]) ** 2
    return math.sqrt(s) / math.sqrt(2 * K)


def new_oracle(Dtr, Dte, eps=1e-6):
    return sum(q for p, q in zip(Dtr, Dte) if p <= eps)


def random_prob(r, K, sparse=True):
    x = r.random(K)
    if sparse:
        x[r.random(K) < 0.3] = 0.0
        if x.sum() == 0:
            x[r.integers(K)] = 1.0
    return x / x.sum()


def random_stochastic(r, K):
    return np.array([random_prob(r, K) for _ in range(K)])


def entropy_oracle(D):
    return -sum(p * math.log2(p) for p in D if p > 0)


def entropy_change_oracle(Ha, Hb, K):
    return abs(Ha - Hb) / math.log2(K) if K > 1 else 0.0


def frequency_oracle(a, b):
    return abs(a - b) / max(a, b)


# ---------------------------------------------------------------- ranking metrics

def auroc_pairs(scores, labels):
    """Positive-negative pair enumeration, ties worth one half."""
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    wins = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return wins / (len(pos) * len(neg))


def ap_ranks(scores, labels, ids):
    """Average precision from explicit ranks: rank = 1 + items ordered strictly ahead."""
    n = len(scores)

    def ahead(j, i):
        return scores[j] > scores[i] or (scores[j] == scores[i] and ids[j] < ids[i])

    rank = [1 + sum(ahead(j, i) for j in range(n)) for i in range(n)]
    total = 0.0
    for i in range(n):
        if labels[i]:
            hits = sum(1 for j in range(n) if labels[j] and rank[j] <= rank[i])
            total += hits / rank[i]
    return total / sum(labels)


def metric_configurations(max_n):
    """Every (tie pattern, label vector) over ranked positions, for n = 1..max_n.

    Position p gets score = number of tie-group boundaries after p, so the
    scores are descending with the given tie structure.  Joint permutations of
    positions cannot change either metric, so this covers all configurations.
    """
    for n in range(1, max_n + 1):
        for cuts in itertools.product((0, 1), repeat=n - 1):
            scores = [0.0] * n
            level = sum(cuts)
            for p in range(n):
                scores[p] = float(level)
                if p < n - 1:
                    level -= cuts[p]
            for labels in itertools.product((0, 1), repeat=n):
                yield scores, list(labels)
