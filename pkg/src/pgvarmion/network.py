"""Self-contained differentiable MLP with hat activation and Dirichlet cutoff.

The network maps points of the domain to an N-vector of basis weights.
Hidden layers use the piecewise-linear hat bump

    hat(z) = ReLU(z) - ReLU(2z - 2) + ReLU(z - 2),

zero outside [0, 2] and peaking at hat(1) = 1; the output layer is affine
(the final bias is optional). When a cutoff exponent p is set, every
output component is multiplied by a factor that vanishes to ~2e^-p at the
boundary of the unit interval or square, so Dirichlet conditions hold by
construction. The cutoff is evaluated in a form whose exponents are all
non-positive, so no p overflows.

Gradients are exact reverse mode under the kink convention
ReLU'(0) := 0, i.e. hat'(z) = 1(z>0) - 2(z>1) + 1(z>2) with strict
comparisons. AdamW implements decoupled weight decay with bias-corrected
moments and a stepped learning-rate schedule indexed by epoch.
"""

import numpy as np

from .errors import InvalidArgumentError
from .rng import STREAM_INIT, philox
from .validation import check_positive_float, check_positive_int


def hat(z):
    """Piecewise-linear bump: rises on [0,1], falls on [1,2], zero outside."""
    z = np.asarray(z, dtype=float)
    return (np.maximum(z, 0.0) - np.maximum(2.0 * z - 2.0, 0.0)
            + np.maximum(z - 2.0, 0.0))


def hat_derivative(z):
    z = np.asarray(z, dtype=float)
    return ((z > 0.0).astype(float) - 2.0 * (z > 1.0).astype(float)
            + (z > 2.0).astype(float))


def cutoff(points, p):
    """Boundary cutoff on [0,1]^d: product of 1D factors per coordinate.

    The 1D factor is 1 - (e^{p(x-1)} + e^{-px}) / (1 - e^{-p}), which is
    ~ -2e^{-p} at the endpoints and 1 - 2e^{-p/2} at the center.
    """
    p = check_positive_float("p", p)
    if p < 1.0:
        raise InvalidArgumentError(f"cutoff exponent must be >= 1, got {p}")
    x = np.asarray(points, dtype=float)
    den = -np.expm1(-p)
    g = 1.0 - (np.exp(p * (x - 1.0)) + np.exp(-p * x)) / den
    if g.ndim == 2:
        g = np.prod(g, axis=1)
    return g


class Mlp:
    """Feedforward net with hat hidden activations and optional cutoff.

    Parameters are float64 and owned by the instance; parameters() returns
    the live arrays in a fixed order (W1, b1, W2, b2, ..., W_L[, b_L]) so
    an optimizer can update them in place.
    """

    def __init__(self, layer_dims, cutoff_p=None, final_bias=True, seed=0):
        dims = [check_positive_int(f"layer_dims[{i}]", d)
                for i, d in enumerate(layer_dims)]
        if len(dims) < 2:
            raise InvalidArgumentError("need at least input and output dims")
        self.layer_dims = dims
        self.cutoff_p = None if cutoff_p is None else float(cutoff_p)
        if self.cutoff_p is not None and self.cutoff_p < 1.0:
            raise InvalidArgumentError("cutoff_p must be >= 1")
        self.final_bias = bool(final_bias)
        self.seed = int(seed)
        rng = philox(self.seed, STREAM_INIT)
        self.weights = []
        self.biases = []
        last = len(dims) - 2
        for layer, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            if layer == last and not self.final_bias:
                self.biases.append(None)
            else:
                self.biases.append(rng.uniform(-bound, bound, fan_out))

    @property
    def n_inputs(self):
        return self.layer_dims[0]

    @property
    def n_outputs(self):
        return self.layer_dims[-1]

    @property
    def n_parameters(self):
        return sum(w.size for w in self.weights) \
            + sum(b.size for b in self.biases if b is not None)

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            if b is not None:
                out.append(b)
        return out

    def _check_input(self, points):
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[1] != self.n_inputs:
            raise InvalidArgumentError(
                f"points: expected (m, {self.n_inputs}), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidArgumentError("points must be finite")
        return x

    def forward(self, points, cache=None):
        """Evaluate at a batch of points -> (m, N).

        Pass a dict as cache to retain the per-layer pre-activations
        needed by backward.
        """
        x = self._check_input(points)
        h = x
        pre = []
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w if b is None else h @ w + b
            if layer < len(self.weights) - 1:
                pre.append(z)
                h = hat(z)
            else:
                h = z
        if self.cutoff_p is not None:
            g = cutoff(x, self.cutoff_p)
            out = h * g[:, None]
        else:
            g = None
            out = h
        if cache is not None:
            cache["x"] = x
            cache["pre"] = pre
            cache["g"] = g
        return out

    def backward(self, cache, cotangent):
        """Gradient of sum_rows <cotangent_row, forward(x_row)> w.r.t. params.

        Returns arrays matching parameters() order.
        """
        x, pre, g = cache["x"], cache["pre"], cache["g"]
        cot = np.asarray(cotangent, dtype=float)
        if cot.shape != (x.shape[0], self.n_outputs):
            raise InvalidArgumentError(
                f"cotangent: expected {(x.shape[0], self.n_outputs)}, got {cot.shape}")
        if g is not None:
            cot = cot * g[:, None]
        activations = [x] + [hat(z) for z in pre]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.weights)
        delta = cot
        for layer in range(len(self.weights) - 1, -1, -1):
            grads_w[layer] = activations[layer].T @ delta
            if self.biases[layer] is not None:
                grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights[layer].T) * hat_derivative(pre[layer - 1])
        out = []
        for gw, gb in zip(grads_w, grads_b):
            out.append(gw)
            if gb is not None:
                out.append(gb)
        return out

    def descriptor(self):
        return {"layer_dims": list(self.layer_dims), "activation": "hat",
                "cutoff_p": self.cutoff_p, "final_bias": self.final_bias,
                "seed": self.seed}


class AdamW:
    """Decoupled-weight-decay Adam with a stepped learning-rate schedule.

    The learning rate for a step is lr_initial * gamma^floor(epoch /
    interval); the caller passes the current epoch so the schedule follows
    epochs, not raw step counts.
    """

    def __init__(self, lr_initial=1e-3, beta1=0.5, beta2=0.9, eps=1e-8,
                 weight_decay=0.0, schedule_interval=100, schedule_gamma=0.75):
        self.lr_initial = check_positive_float("lr_initial", lr_initial)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.weight_decay = float(weight_decay)
        self.schedule_interval = check_positive_int("schedule_interval",
                                                    schedule_interval)
        self.schedule_gamma = float(schedule_gamma)
        self.t = 0
        self._m = None
        self._v = None

    def learning_rate(self, epoch):
        return self.lr_initial * self.schedule_gamma ** (epoch // self.schedule_interval)

    def step(self, params, grads, epoch):
        """Update params in place from matching grads."""
        if len(params) != len(grads):
            raise InvalidArgumentError("params and grads must align")
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        for p, gr, m in zip(params, grads, self._m):
            if p.shape != gr.shape or p.shape != m.shape:
                raise InvalidArgumentError("parameter/gradient shape mismatch")
        self.t += 1
        lr = self.learning_rate(epoch)
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, gr, m, v in zip(params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * gr
            v *= self.beta2
            v += (1.0 - self.beta2) * gr * gr
            if self.weight_decay != 0.0:
                p *= 1.0 - lr * self.weight_decay
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state_blocks(self):
        """Moment arrays and counters for checkpointing."""
        return {"t": self.t, "m": self._m, "v": self._v}
