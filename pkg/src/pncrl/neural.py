"""Minimal feed-forward Q-network in numpy.

Fixed architecture family: affine layers with rectifier hidden
activations and a linear output. Training is plain stochastic gradient
descent on the mean squared error of the selected action's output;
gradients flow only through the chosen outputs. A target copy can be
synchronized softly (tau-blend) or hard (tau=1).
"""

from __future__ import annotations

import io
import struct

import numpy as np

MAGIC = b"QNETV1\n"


class MLP:
    """Affine/rectifier stack; `layer_sizes` includes input and output."""

    def __init__(self, layer_sizes, rng: np.random.Generator | None = None):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate a single input (d,) or a batch (n, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[-1] != self.input_size:
            raise ValueError(f"expected input size {self.input_size}, got {h.shape[-1]}")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ W + b
            if i < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
        return h[0] if single else h

    def _forward_cached(self, x: np.ndarray):
        activations = [x]
        pre = []
        h = x
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pre.append(z)
            h = np.maximum(z, 0.0) if i < len(self.weights) - 1 else z
            activations.append(h)
        return activations, pre

    def gradients(self, inputs: np.ndarray, actions: np.ndarray, targets: np.ndarray):
        """Loss and parameter gradients for the selected-action MSE."""
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        actions = np.asarray(actions, dtype=int)
        targets = np.asarray(targets, dtype=float)
        n = inputs.shape[0]
        if n == 0:
            raise ValueError("empty batch")
        if not np.all(np.isfinite(targets)):
            raise ValueError("non-finite target")
        activations, pre = self._forward_cached(inputs)
        preds = activations[-1][np.arange(n), actions]
        errors = preds - targets
        loss = float(np.mean(errors**2))

        delta = np.zeros_like(activations[-1])
        delta[np.arange(n), actions] = 2.0 * errors / n
        grads_w = [np.empty(0)] * len(self.weights)
        grads_b = [np.empty(0)] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            grads_w[i] = activations[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i].T) * (pre[i - 1] > 0.0)
        return loss, grads_w, grads_b

    def train_batch(
        self,
        inputs: np.ndarray,
        actions: np.ndarray,
        targets: np.ndarray,
        lr: float,
        grad_clip: float | None = None,
    ) -> float:
        """One SGD step; returns the pre-update loss.

        With `grad_clip` set, the global gradient norm is rescaled to at
        most that value before the step. Large bootstrap targets early in
        Q-learning otherwise produce updates violent enough to push every
        rectifier unit into the dead (always-zero) regime, from which
        plain SGD cannot recover.
        """
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        if grad_clip is not None and grad_clip <= 0:
            raise ValueError("grad_clip must be positive")
        loss, grads_w, grads_b = self.gradients(inputs, actions, targets)
        if grad_clip is not None:
            norm = np.sqrt(sum(float(np.sum(g**2)) for g in grads_w + grads_b))
            if norm > grad_clip:
                scale = grad_clip / norm
                grads_w = [g * scale for g in grads_w]
                grads_b = [g * scale for g in grads_b]
        for W, b, gw, gb in zip(self.weights, self.biases, grads_w, grads_b):
            W -= lr * gw
            b -= lr * gb
        return loss

    def copy(self) -> "MLP":
        clone = MLP.__new__(MLP)
        clone.layer_sizes = self.layer_sizes
        clone.weights = [W.copy() for W in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    # --- serialization: magic, layer count, layer sizes, then parameters
    # (weights row-major, then bias, per layer), little-endian float64.

    def save_bytes(self) -> bytes:
        buf = io.BytesIO()
        buf.write(MAGIC)
        buf.write(struct.pack("<I", len(self.layer_sizes)))
        buf.write(struct.pack(f"<{len(self.layer_sizes)}I", *self.layer_sizes))
        for W, b in zip(self.weights, self.biases):
            buf.write(W.astype("<f8").tobytes(order="C"))
            buf.write(b.astype("<f8").tobytes())
        return buf.getvalue()

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.save_bytes())

    @classmethod
    def load_bytes(cls, data: bytes) -> "MLP":
        buf = io.BytesIO(data)
        if buf.read(len(MAGIC)) != MAGIC:
            raise ValueError("not a model file (bad magic)")
        (count,) = struct.unpack("<I", buf.read(4))
        sizes = struct.unpack(f"<{count}I", buf.read(4 * count))
        net = cls.__new__(cls)
        net.layer_sizes = tuple(sizes)
        net.weights = []
        net.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            W = np.frombuffer(buf.read(8 * fan_in * fan_out), dtype="<f8").reshape(fan_in, fan_out)
            b = np.frombuffer(buf.read(8 * fan_out), dtype="<f8")
            net.weights.append(W.copy())
            net.biases.append(b.copy())
        if buf.read(1):
            raise ValueError("trailing bytes in model file")
        return net

    @classmethod
    def load(cls, path) -> "MLP":
        with open(path, "rb") as fh:
            return cls.load_bytes(fh.read())


def sync_target(online: MLP, target: MLP, tau: float) -> MLP:
    """Blend target towards online in place: tau*online + (1-tau)*target."""
    if online.layer_sizes != target.layer_sizes:
        raise ValueError("architecture mismatch between online and target nets")
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    for Wt, Wo in zip(target.weights, online.weights):
        Wt *= 1.0 - tau
        Wt += tau * Wo
    for bt, bo in zip(target.biases, online.biases):
        bt *= 1.0 - tau
        bt += tau * bo
    return target
