"""Learned clearance fields: sinusoidal encoding, MLP, training, evaluation.

The network maps a joint vector to the full vector of per-voxel clearances
in one forward pass, so a stacked batch of configurations turns collision
estimation into a handful of matrix multiplications. Gradients are computed
analytically in-repo; training uses mean absolute error and Adam.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

WEIGHTS_MAGIC = b"CFN1"
_HEADER = struct.Struct("<4sIIIIIifI")
# magic, version, N, V, L, n_hidden, skip_layer, dropout_p, dim countـtail

_FORMAT_VERSION = 1


class SignatureMismatch(ValueError):
    """Weights were trained against a different robot or grid."""


class TrainingDiverged(RuntimeError):
    pass


def positional_encode(q, levels: int) -> np.ndarray:
    """Multi-frequency sinusoidal features of a configuration batch.

    Rows map to [sin(2^0 pi q), cos(2^0 pi q), ..., sin(2^(L-1) pi q),
    cos(2^(L-1) pi q)] with each block expanded per joint, giving 2*L*N
    features per row.
    """
    if levels < 1:
        raise ValueError("encoding needs at least one level")
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    blocks = []
    for level in range(levels):
        arg = (2.0 ** level) * np.pi * q
        blocks.append(np.sin(arg))
        blocks.append(np.cos(arg))
    return np.concatenate(blocks, axis=1)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 50
    epochs: int = 60
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    dropout_p: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


class ClearanceNet:
    """Fully-connected ReLU/dropout stack with one additive skip connection.

    ``layer_dims`` is [encoded_in, hidden..., out]. The encoded input is
    projected by a dedicated matrix and added to the pre-activation of hidden
    layer ``skip_layer`` (0-based among hidden layers); the output layer is
    linear. Dropout applies to hidden activations in training mode only.

    Joint values are normalized per joint to [-1, 1] before the sinusoidal
    kernel. The kernel is 2-periodic in its argument, so feeding raw radians
    over ranges wider than 2 would alias distinct configurations onto the
    same features; normalization makes one period cover the joint range
    exactly once.
    """

    def __init__(self, n_joints, n_out, levels=3, hidden=(256, 256, 256, 256),
                 skip_layer=2, dropout_p=0.1, grid_signature="", robot_signature="",
                 input_lo=None, input_hi=None, dtype=np.float64, rng=None):
        if not 0 <= skip_layer < len(hidden):
            raise ValueError("skip_layer must index a hidden layer")
        self.n_joints = int(n_joints)
        self.n_out = int(n_out)
        self.levels = int(levels)
        self.skip_layer = int(skip_layer)
        self.dropout_p = float(dropout_p)
        self.grid_signature = grid_signature
        self.robot_signature = robot_signature
        self.input_lo = np.full(self.n_joints, -1.0) if input_lo is None \
            else np.asarray(input_lo, dtype=np.float64)
        self.input_hi = np.full(self.n_joints, 1.0) if input_hi is None \
            else np.asarray(input_hi, dtype=np.float64)
        if self.input_lo.shape != (self.n_joints,) or self.input_hi.shape != (self.n_joints,):
            raise ValueError("input_lo/input_hi must have one entry per joint")
        self.dtype = np.dtype(dtype)
        enc = 2 * self.levels * self.n_joints
        self.layer_dims = [enc] + list(int(h) for h in hidden) + [self.n_out]
        rng = rng or np.random.default_rng(0)
        self.weights = []
        self.biases = []
        for d_in, d_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            self.weights.append(self._init_matrix(rng, d_in, d_out))
            self.biases.append(np.zeros(d_out, dtype=self.dtype))
        self.skip_weight = self._init_matrix(rng, enc, self.layer_dims[1 + self.skip_layer])

    def normalize(self, Q) -> np.ndarray:
        span = self.input_hi - self.input_lo
        span = np.where(span == 0.0, 1.0, span)
        return 2.0 * (Q - self.input_lo) / span - 1.0

    def _init_matrix(self, rng, d_in, d_out):
        limit = np.sqrt(6.0 / d_in)
        return rng.uniform(-limit, limit, size=(d_in, d_out)).astype(self.dtype)

    @property
    def n_hidden(self) -> int:
        return len(self.layer_dims) - 2

    def parameters(self) -> list:
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        params.append(self.skip_weight)
        return params

    def set_parameters(self, params) -> None:
        flat = list(params)
        for k in range(len(self.weights)):
            self.weights[k] = flat[2 * k]
            self.biases[k] = flat[2 * k + 1]
        self.skip_weight = flat[-1]

    def _forward(self, Q, dropout_masks=None):
        """Forward pass returning the output and the backprop cache."""
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.n_joints:
            raise ValueError(f"batch has {Q.shape[1]} columns, expected {self.n_joints}")
        x = positional_encode(self.normalize(Q), self.levels).astype(self.dtype)
        h = x
        hiddens = [x]
        relu_masks = []
        for k in range(self.n_hidden):
            z = h @ self.weights[k] + self.biases[k]
            if k == self.skip_layer:
                z += x @ self.skip_weight
            mask = z > 0
            h = np.where(mask, z, 0.0)
            relu_masks.append(mask)
            if dropout_masks is not None:
                h = h * dropout_masks[k]
            hiddens.append(h)
        out = h @ self.weights[-1] + self.biases[-1]
        cache = (x, hiddens, relu_masks, dropout_masks)
        return out, cache

    def make_dropout_masks(self, m, rng) -> list:
        """Inverted-dropout masks for a batch of m rows."""
        keep = 1.0 - self.dropout_p
        masks = []
        for k in range(self.n_hidden):
            raw = rng.random((m, self.layer_dims[k + 1])) < keep
            masks.append(raw.astype(self.dtype) / keep)
        return masks

    def forward(self, Q, training_mode=False, rng=None) -> np.ndarray:
        """Batched inference; dropout only when training_mode is set."""
        masks = None
        if training_mode and self.dropout_p > 0.0:
            if rng is None:
                raise ValueError("training-mode forward needs an rng for dropout")
            Q2 = np.atleast_2d(np.asarray(Q))
            masks = self.make_dropout_masks(Q2.shape[0], rng)
        out, _ = self._forward(Q, masks)
        return out

    def infer(self, Q, chunk=2048) -> np.ndarray:
        """Inference-mode forward, chunked to bound peak memory."""
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[0] == 0:
            return np.zeros((0, self.n_out), dtype=self.dtype)
        outs = [self.forward(Q[i:i + chunk]) for i in range(0, Q.shape[0], chunk)]
        return np.concatenate(outs, axis=0)

    def loss_and_gradients(self, Q, target, dropout_masks=None):
        """L1 loss plus analytic gradients for every parameter."""
        target = np.atleast_2d(np.asarray(target, dtype=self.dtype))
        out, cache = self._forward(Q, dropout_masks)
        x, hiddens, relu_masks, masks = cache
        m = out.shape[0]
        diff = out - target
        loss = float(np.mean(np.abs(diff)))

        g = np.sign(diff).astype(self.dtype) / diff.size
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        grads_w[-1] = hiddens[-1].T @ g
        grads_b[-1] = g.sum(axis=0)
        grad_skip = np.zeros_like(self.skip_weight)
        gh = g @ self.weights[-1].T
        for k in range(self.n_hidden - 1, -1, -1):
            if masks is not None:
                gh = gh * masks[k]
            gz = gh * relu_masks[k]
            grads_w[k] = hiddens[k].T @ gz
            grads_b[k] = gz.sum(axis=0)
            if k == self.skip_layer:
                grad_skip = x.T @ gz
            if k > 0:
                gh = gz @ self.weights[k].T
        grads = []
        for w, b in zip(grads_w, grads_b):
            grads.extend([w, b])
        grads.append(grad_skip)
        return loss, grads

    # serialization ----------------------------------------------------

    def save(self, path) -> None:
        """Little-endian binary: header, dims, signatures, float32 matrices."""
        dims = np.asarray(self.layer_dims, dtype="<u4")
        head = _HEADER.pack(WEIGHTS_MAGIC, _FORMAT_VERSION, self.n_joints, self.n_out,
                            self.levels, self.n_hidden, self.skip_layer,
                            self.dropout_p, len(dims))
        gsig = self.grid_signature.encode().ljust(16, b"\0")[:16]
        rsig = self.robot_signature.encode().ljust(16, b"\0")[:16]
        with open(path, "wb") as f:
            f.write(head)
            f.write(dims.tobytes())
            f.write(gsig)
            f.write(rsig)
            f.write(np.ascontiguousarray(self.input_lo, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(self.input_hi, dtype="<f8").tobytes())
            for arr in self.parameters():
                f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())

    @classmethod
    def load(cls, path, expect_grid=None, expect_robot=None) -> "ClearanceNet":
        with open(path, "rb") as f:
            blob = f.read()
        if len(blob) < _HEADER.size or blob[:4] != WEIGHTS_MAGIC:
            raise ValueError("not a clearance-net weights file")
        (_, version, n_joints, n_out, levels, n_hidden, skip_layer,
         dropout_p, n_dims) = _HEADER.unpack(blob[:_HEADER.size])
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported weights version {version}")
        off = _HEADER.size
        dims = np.frombuffer(blob, dtype="<u4", count=n_dims, offset=off)
        off += 4 * n_dims
        gsig = blob[off:off + 16].rstrip(b"\0").decode()
        rsig = blob[off + 16:off + 32].rstrip(b"\0").decode()
        off += 32
        if expect_grid is not None and gsig != expect_grid:
            raise SignatureMismatch(f"weights bound to grid {gsig}, expected {expect_grid}")
        if expect_robot is not None and rsig != expect_robot:
            raise SignatureMismatch(f"weights bound to robot {rsig}, expected {expect_robot}")
        if len(blob) < off + 16 * n_joints:
            raise ValueError("weights file truncated")
        input_lo = np.frombuffer(blob, dtype="<f8", count=n_joints, offset=off).copy()
        off += 8 * n_joints
        input_hi = np.frombuffer(blob, dtype="<f8", count=n_joints, offset=off).copy()
        off += 8 * n_joints
        net = cls(n_joints=n_joints, n_out=n_out, levels=levels,
                  hidden=tuple(int(d) for d in dims[1:-1]), skip_layer=skip_layer,
                  dropout_p=dropout_p, grid_signature=gsig, robot_signature=rsig,
                  input_lo=input_lo, input_hi=input_hi, dtype=np.float32)
        if net.layer_dims != [int(d) for d in dims]:
            raise ValueError("weights file layer dims inconsistent with header")
        params = []
        for ref in net.parameters():
            count = ref.size
            need = off + 4 * count
            if need > len(blob):
                raise ValueError("weights file truncated")
            arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
            params.append(arr.reshape(ref.shape).copy())
            off = need
        if off != len(blob):
            raise ValueError("weights file carries trailing bytes")
        net.set_parameters(params)
        return net


def init_output_layer(net: ClearanceNet, Y_train) -> None:
    """Start the output layer at the per-cell median with zero weights.

    The L1 loss of a freshly initialized net is dominated by the net's own
    random output variance; its steepest descent direction then shuts the
    hidden stack down, which is irreversible under ReLU. Starting the output
    at the best constant predictor removes that transient: the first
    gradients the stack sees are already data-aligned.
    """
    Y_train = np.asarray(Y_train)
    net.biases[-1] = np.median(Y_train, axis=0).astype(net.dtype)
    net.weights[-1] = np.zeros_like(net.weights[-1])


def forward_batch(net: ClearanceNet, Q, training_mode=False, rng=None) -> np.ndarray:
    return net.forward(Q, training_mode=training_mode, rng=rng)


def l1_loss(pred, target) -> float:
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target)))


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, t: int, cfg: TrainConfig):
    """One Adam update with bias correction; mutates params and state."""
    if t < 1:
        raise ValueError("step index starts at 1")
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def train(net: ClearanceNet, X_train, Y_train, X_val, Y_val, cfg: TrainConfig,
          log=None):
    """Mini-batch Adam on L1 loss; deterministic given cfg.seed.

    Returns a history dict with per-epoch mean train loss, validation loss,
    and the total optimizer step count.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    Y_train = np.asarray(Y_train, dtype=net.dtype)
    n = X_train.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(cfg.seed)
    net.dropout_p = cfg.dropout_p
    params = net.parameters()
    state = AdamState.for_params(params)
    history = {"train": [], "val": [], "steps": 0}
    t = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        seen = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            masks = net.make_dropout_masks(len(idx), rng) if cfg.dropout_p > 0 else None
            loss, grads = net.loss_and_gradients(X_train[idx], Y_train[idx], masks)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became {loss} at epoch {epoch}, step {t + 1}")
            t += 1
            adam_step(params, grads, state, t, cfg)
            epoch_loss += loss * len(idx)
            seen += len(idx)
        net.set_parameters(params)
        val = validation_loss(net, X_val, Y_val)
        history["train"].append(epoch_loss / seen)
        history["val"].append(val)
        if log:
            log(f"epoch {epoch + 1}/{cfg.epochs}  train L1 {epoch_loss / seen:.5f}  "
                f"val L1 {val:.5f}")
    history["steps"] = t
    return history


def validation_loss(net: ClearanceNet, X, Y) -> float:
    if len(X) == 0:
        return float("nan")
    return l1_loss(net.infer(X), np.asarray(Y, dtype=net.dtype))


def evaluate_classifier(net, X, Y_exact, threshold: float):
    """Collision classification quality of thresholded inferred clearances.

    A (configuration, voxel) pair is predicted in collision when the inferred
    clearance falls below ``threshold``; it actually is in collision when the
    exact clearance is negative. Returns precision, recall and the raw
    confusion counts so alternative readings can be reconstructed.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    pred = np.asarray(net.infer(X)) < threshold
    actual = np.asarray(Y_exact) < 0
    tp = int(np.sum(pred & actual))
    fp = int(np.sum(pred & ~actual))
    fn = int(np.sum(~pred & actual))
    tn = int(np.sum(~pred & ~actual))
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    return precision, recall, {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
