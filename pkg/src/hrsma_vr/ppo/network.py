"""Fully connected tanh networks with hand-written backpropagation."""

from __future__ import annotations

import numpy as np

__all__ = ["MLP"]


class MLP:
    """Fully connected network: tanh hidden layers, linear output.

    Parameters live in a single flat float64 vector ordered layer by layer
    as ``W_0 (row-major, out x in), b_0, W_1, b_1, ...``; ``weights`` and
    ``biases`` are views into it.
    """

    def __init__(self, sizes, params=None):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        self._shapes = [(o, i) for i, o in zip(self.sizes[:-1], self.sizes[1:])]
        n = sum(o * i + o for o, i in self._shapes)
        if params is None:
            params = np.zeros(n)
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (n,):
            raise ValueError(f"expected {n} parameters, got shape {params.shape}")
        self.params = params.copy()

    @property
    def num_params(self) -> int:
        return self.params.size

    def _views(self, flat):
        out, pos = [], 0
        for o, i in self._shapes:
            W = flat[pos : pos + o * i].reshape(o, i)
            pos += o * i
            b = flat[pos : pos + o]
            pos += o
            out.append((W, b))
        return out

    @property
    def layers(self):
        return self._views(self.params)

    @classmethod
    def initialized(cls, sizes, rng: np.random.Generator, out_scale: float = 0.01):
        """Scaled-normal initialization; the output layer starts small."""
        net = cls(sizes)
        layers = net.layers
        for n, (W, b) in enumerate(layers):
            fan_in = W.shape[1]
            scale = out_scale if n == len(layers) - 1 else 1.0
            W[...] = rng.standard_normal(W.shape) * scale / np.sqrt(fan_in)
            b[...] = 0.0
        return net

    def forward(self, x, cache: bool = False):
        """Evaluate on a single input (d,) or a batch (N, d)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.sizes[0]:
            raise ValueError(f"input has {h.shape[1]} features, network expects {self.sizes[0]}")
        acts = [h]
        layers = self.layers
        for n, (W, b) in enumerate(layers):
            z = h @ W.T + b
            h = np.tanh(z) if n < len(layers) - 1 else z
            acts.append(h)
        out = h[0] if single else h
        return (out, acts) if cache else out

    def backward(self, acts, grad_out) -> np.ndarray:
        """Gradient of ``sum(grad_out * output)`` w.r.t. the flat parameters."""
        grad = np.zeros_like(self.params)
        gviews = self._views(grad)
        layers = self.layers
        g = np.asarray(grad_out, dtype=np.float64).reshape(acts[-1].shape)
        for n in range(len(layers) - 1, -1, -1):
            W, _ = layers[n]
            gW, gb = gviews[n]
            gW[...] = g.T @ acts[n]
            gb[...] = g.sum(axis=0)
            if n > 0:
                g = (g @ W) * (1.0 - acts[n] ** 2)
        return grad
