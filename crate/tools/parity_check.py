#!/usr/bin/env python3
"""Cross-implementation parity check.

Re-implements the full pipeline — seeded streams, blob generation, split
and basis selection, parameter init, per-example gradients, cosine kernel,
least squares, thresholded scoring, and one SGD epoch — in NumPy, then
compares against the CSV the Rust binary wrote for the same config.

Usage:
    cargo run -p gradkernel-cli -- run --config tools/parity.cfg --out /tmp/parity.csv
    python3 tools/parity_check.py /tmp/parity.csv

Exits nonzero on any disagreement beyond floating-point noise.
"""

import math
import sys

import numpy as np

M = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
TAU = 2.0 * math.pi


def mix(z):
    z &= M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return (z ^ (z >> 31)) & M


def splitmix(seed, k):
    return mix((seed + GAMMA * k) & M)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


class Stream:
    """xoshiro256++ seeded from four SplitMix64 outputs."""

    def __init__(self, seed):
        self.s = [splitmix(seed, k + 1) for k in range(4)]

    def next_u64(self):
        s = self.s
        res = (rotl((s[0] + s[3]) & M, 23) + s[0]) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return res

    def next_f64(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.next_f64()

    def below(self, n):
        return (self.next_u64() * n) >> 64

    def normal(self):
        u1 = 1.0 - self.next_f64()
        u2 = self.next_f64()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(TAU * u2)

    def sample_distinct(self, pool, k):
        scratch = list(pool)
        for i in range(k):
            j = i + self.below(len(scratch) - i)
            scratch[i], scratch[j] = scratch[j], scratch[i]
        return scratch[:k]


# Mirror of tools/parity.cfg.
MASTER = 0
DIM, SEP, NOISE = 6, 8.0, 0.5
WIDTHS = [6, 8, 4, 1]
TRAIN_PC, TEST_PC, BASIS_PC = 20, 15, 8
BATCH, STEPS, LR = 10, 10, 0.1
EPOCHS = 1
THRESH = 0.5


def build_dataset():
    split_seed = splitmix(MASTER, 2)
    n_pc = TRAIN_PC + TEST_PC
    rng = Stream(split_seed)
    examples, labels = [], []
    for center, label in [(SEP / 2, 1), (-SEP / 2, 0)]:
        for _ in range(n_pc):
            x = [(center if d == 0 else 0.0) + NOISE * rng.normal() for d in range(DIM)]
            examples.append(x)
            labels.append(label)
    X = np.array(examples)
    y = np.array(labels)
    train_idx = list(range(0, TRAIN_PC)) + list(range(n_pc, n_pc + TRAIN_PC))
    test_idx = list(range(TRAIN_PC, n_pc)) + list(range(n_pc + TRAIN_PC, 2 * n_pc))

    rngb = Stream(splitmix(MASTER, 3))
    basis_idx = []
    for cls in (1, 0):
        pool = [i for i in train_idx if y[i] == cls]
        basis_idx += rngb.sample_distinct(pool, BASIS_PC)
    return X, y, train_idx, test_idx, basis_idx


def init_params():
    rng = Stream(splitmix(MASTER, 1))
    weights, biases = [], []
    for fan_in, fan_out in zip(WIDTHS, WIDTHS[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        w = np.array(
            [[rng.uniform(-bound, bound) for _ in range(fan_in)] for _ in range(fan_out)]
        )
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward_trace(ws, bs, x):
    acts = [np.asarray(x, dtype=float)]
    zs = []
    last = len(ws) - 1
    for l, (w, b) in enumerate(zip(ws, bs)):
        z = w @ acts[-1] + b
        zs.append(z)
        acts.append(z if l == last else np.maximum(z, 0.0))
    return zs, acts


def grad_logit(ws, bs, x):
    zs, acts = forward_trace(ws, bs, x)
    delta = np.array([1.0])
    parts = [None] * len(ws)
    for l in range(len(ws) - 1, -1, -1):
        parts[l] = np.concatenate([np.outer(delta, acts[l]).ravel(), delta])
        if l > 0:
            delta = (ws[l].T @ delta) * (zs[l - 1] > 0.0)
    return np.concatenate(parts)


def logit(ws, bs, x):
    return forward_trace(ws, bs, x)[1][-1][0]


def sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))


def scores(ws, bs, X, y, train_idx, test_idx, basis_idx):
    g_basis = np.array([grad_logit(ws, bs, X[i]) for i in basis_idx])
    g_train = np.array([grad_logit(ws, bs, X[i]) for i in train_idx])
    g_test = np.array([grad_logit(ws, bs, X[i]) for i in test_idx])

    def norm_kernel(gq, gb):
        raw = gq @ gb.T
        qs = np.sum(gq * gq, axis=1)
        bn = np.sum(gb * gb, axis=1)
        return raw / np.sqrt(np.outer(qs, bn))

    k_train = norm_kernel(g_train, g_basis)
    k_test = norm_kernel(g_test, g_basis)
    alpha, _, rank, sv = np.linalg.lstsq(k_train, y[train_idx].astype(float), rcond=1e-10)

    def accuracy(K, idx):
        preds = K @ alpha
        return float(np.mean((preds > THRESH) == (y[idx] == 1)))

    preds_test = k_test @ alpha
    sse = float(np.sum((y[test_idx] - preds_test) ** 2))
    sv_ratio = float(sv[sv >= 1e-10 * sv.max()].min() / sv.max())

    def net_acc(idx):
        hits = sum(1 for i in idx if (sigmoid(logit(ws, bs, X[i])) > 0.5) == (y[i] == 1))
        return hits / len(idx)

    return {
        "kernel_train_acc": accuracy(k_train, train_idx),
        "kernel_test_acc": accuracy(k_test, test_idx),
        "net_train_acc": net_acc(train_idx),
        "net_test_acc": net_acc(test_idx),
        "kernel_test_sse": sse,
        "fit_rank": int(rank),
        "sv_ratio": sv_ratio,
    }


def sgd_epoch(ws, bs, X, y, train_idx, epoch_index):
    rng = Stream(splitmix(splitmix(MASTER, 4), epoch_index + 1))
    ws = [w.copy() for w in ws]
    bs = [b.copy() for b in bs]
    shapes = [(w.size, b.size) for w, b in zip(ws, bs)]
    total = sum(wn + bn for wn, bn in shapes)
    for _ in range(STEPS):
        batch = [train_idx[rng.below(len(train_idx))] for _ in range(BATCH)]
        grad = np.zeros(total)
        for i in batch:
            scale = (sigmoid(logit(ws, bs, X[i])) - float(y[i])) / BATCH
            grad += scale * grad_logit(ws, bs, X[i])
        off = 0
        for l, (wn, bn) in enumerate(shapes):
            ws[l] -= LR * grad[off : off + wn].reshape(ws[l].shape)
            off += wn
            bs[l] -= LR * grad[off : off + bn]
            off += bn
    return ws, bs


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    csv_path = sys.argv[1]
    with open(csv_path) as f:
        header = f.readline().strip().split(",")
        rows = [line.strip().split(",") for line in f if line.strip()]
    if len(rows) != EPOCHS + 1:
        sys.exit(f"expected {EPOCHS + 1} rows in {csv_path}, found {len(rows)}")

    X, y, train_idx, test_idx, basis_idx = build_dataset()
    ws, bs = init_params()

    failures = 0
    for epoch in range(EPOCHS + 1):
        mine = scores(ws, bs, X, y, train_idx, test_idx, basis_idx)
        theirs = dict(zip(header, rows[epoch]))
        checks = [
            ("kernel_train_acc", 1e-6),
            ("kernel_test_acc", 1e-6),
            ("net_train_acc", 1e-6),
            ("net_test_acc", 1e-6),
            ("kernel_test_sse", 1e-9),
            ("fit_rank", 0),
            ("sv_ratio", 1e-9),
        ]
        for key, tol in checks:
            ours = mine[key]
            other = float(theirs[key])
            scale = max(abs(ours), abs(other), 1e-30)
            ok = ours == other if tol == 0 else abs(ours - other) <= tol * scale
            status = "ok" if ok else "MISMATCH"
            if not ok:
                failures += 1
            print(f"epoch {epoch} {key}: rust {other} vs numpy {ours} [{status}]")
        if epoch < EPOCHS:
            ws, bs = sgd_epoch(ws, bs, X, y, train_idx, epoch)

    if failures:
        sys.exit(f"{failures} mismatches")
    print("parity check passed")


if __name__ == "__main__":
    main()
