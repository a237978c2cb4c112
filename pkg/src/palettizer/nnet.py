"""Minimal dense networks with hand-written backprop.

float64 throughout; tanh hidden activations keep every operation smooth so
analytic gradients can be validated against central finite differences.
No autodiff framework is used anywhere in training.
"""

from __future__ import annotations

import numpy as np


class MLP:
    """Fully connected net: linear layers with tanh between, linear output."""

    def __init__(self, sizes: list[int], rng: np.random.Generator, out_scale: float = 0.05):
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            scale = np.sqrt(1.0 / fan_in)
            if i == len(sizes) - 2:
                scale *= out_scale
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    def forward(self, x: np.ndarray):
        """Returns (output, cache) where cache holds pre-activation inputs."""
        cache = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            cache.append(h)
            h = h @ w + b
            if i != last:
                h = np.tanh(h)
                cache.append(h)  # store activation for tanh backprop
        return h, cache

    def backward(self, cache, dout: np.ndarray):
        """Gradient of a scalar objective wrt params and input, given
        d(objective)/d(output). Returns (dx, [(dW, db), ...])."""
        grads = [None] * len(self.weights)
        d = dout
        last = len(self.weights) - 1
        ci = len(cache) - 1
        for i in range(last, -1, -1):
            if i != last:
                act = cache[ci]
                ci -= 1
                d = d * (1.0 - act * act)
            x_in = cache[ci]
            ci -= 1
            grads[i] = (x_in.T @ d, d.sum(axis=0))
            d = d @ self.weights[i].T
        return d, grads

    # flat parameter access for optimizers and finite-difference checks
    def flat_params(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])

    def set_flat_params(self, vec: np.ndarray) -> None:
        pos = 0
        for i in range(len(self.weights)):
            for arr in (self.weights[i], self.biases[i]):
                n = arr.size
                arr[...] = vec[pos : pos + n].reshape(arr.shape)
                pos += n
        if pos != vec.size:
            raise ValueError("parameter vector size mismatch")

    @staticmethod
    def flat_grads(grads) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in grads for a in pair])

    def clone(self) -> "MLP":
        dup = MLP.__new__(MLP)
        dup.sizes = list(self.sizes)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        return dup


class MomentumSGD:
    """Plain SGD with momentum and cosine-decayed step size. Maximizes:
    callers pass gradients of the objective to ascend."""

    def __init__(self, n_params: int, lr: float, momentum: float, total_steps: int, lr_min_factor: float = 0.1):
        self.velocity = np.zeros(n_params)
        self.lr0 = lr
        self.momentum = momentum
        self.total_steps = max(1, total_steps)
        self.lr_min = lr * lr_min_factor
        self.step_count = 0

    def current_lr(self) -> float:
        t = min(self.step_count, self.total_steps) / self.total_steps
        return self.lr_min + 0.5 * (self.lr0 - self.lr_min) * (1.0 + np.cos(np.pi * t))

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        lr = self.current_lr()
        self.velocity = self.momentum * self.velocity + lr * grad
        self.step_count += 1
        return params + self.velocity
