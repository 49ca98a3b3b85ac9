"""Training engine for complex-valued networks.

The loss is the squared modulus of the output error, E = sum |y - t|^2, a
real function of complex parameters. Steepest descent on such a loss moves
against the derivative taken with respect to the conjugated parameter
(Wirtinger convention), so the gradients returned here are dE/d(conj W) and
dE/d(conj b); ``sgd_step`` subtracts eta times them.

Delta recursion, with z the pre-activation and x = f(z):

    delta_L = f'(conj z_L) * (x_L - t)
    delta_l = conj(W_{l+1}).T @ delta_{l+1} * f'(conj z_l)
    dW_l    = outer(delta_l, conj x_{l-1}),   db_l = delta_l

For analytic activations f'(conj z) == conj(f'(z)), so the same gradients can
be assembled from the derivative at z itself; ``cr_variant_delta`` computes
that second route as an independent cross-check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cnet import activate_deriv, forward, _forward_arrays
from .errors import DimensionMismatch, NonFiniteLoss

__all__ = [
    "Gradients",
    "TrainConfig",
    "LearningCurve",
    "loss",
    "backward",
    "cr_variant_delta",
    "numeric_gradients",
    "gradient_gap",
    "grad_check",
    "sgd_step",
    "train",
]


@dataclass(frozen=True)
class Gradients:
    """Per-layer weight and bias gradients, shapes mirroring the network."""

    dw: tuple
    db: tuple


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    epochs: int
    loss_floor: float = 0.0
    seed: int = 0
    log_every: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.loss_floor < 0:
            raise ValueError("loss_floor must be non-negative")


@dataclass
class LearningCurve:
    """Per-epoch (index, mean loss, seconds since start) records."""

    epochs: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def append(self, epoch, mean_loss, elapsed):
        self.epochs.append(int(epoch))
        self.losses.append(float(mean_loss))
        self.seconds.append(float(elapsed))

    def __len__(self):
        return len(self.epochs)

    @property
    def final_loss(self):
        return self.losses[-1]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("epoch,loss,seconds\n")
            for e, l, s in zip(self.epochs, self.losses, self.seconds):
                fh.write(f"{e},{l:.17g},{s:.6f}\n")


def loss(output, target):
    """Sum of squared moduli of the error, a non-negative real."""
    output = np.asarray(output, dtype=np.complex128)
    target = np.asarray(target, dtype=np.complex128)
    if output.shape != target.shape:
        raise DimensionMismatch(
            f"output shape {output.shape} != target shape {target.shape}"
        )
    err = output - target
    return float(np.sum(err.real**2 + err.imag**2))


def _deltas(net, pres, posts, targets, conjugate_route):
    """Backward recursion over a batch of column vectors.

    conjugate_route=True evaluates f' at conj(z) (the canonical rule);
    False evaluates conj(f'(z)) instead (the analytic-derivative variant).
    """
    last = net.layers[-1]

    def fprime(layer, z):
        if conjugate_route:
            return activate_deriv(layer.activation, np.conj(z))
        return np.conj(activate_deriv(layer.activation, z))

    delta = fprime(last, pres[-1]) * (posts[-1] - targets)
    deltas = [delta]
    for k in range(len(net.layers) - 2, -1, -1):
        w_next = net.layers[k + 1].weight
        delta = (np.conj(w_next).T @ delta) * fprime(net.layers[k], pres[k])
        deltas.append(delta)
    deltas.reverse()
    return deltas


def _assemble(net, deltas, posts, x0, scale):
    dws, dbs = [], []
    for k, delta in enumerate(deltas):
        x_prev = x0 if k == 0 else posts[k - 1]
        if delta.ndim == 1:
            dws.append(np.outer(delta, np.conj(x_prev)) * scale)
            dbs.append(delta * scale)
        else:
            dws.append((delta @ np.conj(x_prev).T) * scale)
            dbs.append(np.sum(delta, axis=1) * scale)
    return Gradients(dw=tuple(dws), db=tuple(dbs))


def backward(net, trace, target):
    """Single-sample gradients from a forward trace."""
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != trace.post[-1].shape:
        raise DimensionMismatch("target length does not match network output")
    deltas = _deltas(net, trace.pre, trace.post, target, conjugate_route=True)
    return _assemble(net, deltas, trace.post, trace.input, scale=1.0)


def cr_variant_delta(net, trace, target):
    """Gradients via conj(f'(z)); must agree with ``backward`` to roundoff."""
    target = np.asarray(target, dtype=np.complex128)
    if target.shape != trace.post[-1].shape:
        raise DimensionMismatch("target length does not match network output")
    deltas = _deltas(net, trace.pre, trace.post, target, conjugate_route=False)
    return _assemble(net, deltas, trace.post, trace.input, scale=1.0)


def _with_entry(net, layer_idx, attr, flat_idx, value):
    """Copy of the network with one weight or bias entry replaced."""
    layers = list(net.layers)
    layer = layers[layer_idx]
    w = np.array(layer.weight)
    b = np.array(layer.bias)
    if attr == "w":
        w.flat[flat_idx] = value
    else:
        b[flat_idx] = value
    layers[layer_idx] = type(layer)(weight=w, bias=b, activation=layer.activation)
    return type(net)(layers=tuple(layers))


def numeric_gradients(net, x0, target, h=1e-5):
    """Finite-difference dE/d(conj w) for every weight and bias entry.

    For w = a + ib the derivative is assembled from central differences
    along both axes as (dE/da + i dE/db) / 2. This route never touches the
    backward recursion, so it serves as an independent oracle for it.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x0 = np.asarray(x0, dtype=np.complex128)
    target = np.asarray(target, dtype=np.complex128)

    def loss_at(candidate):
        return loss(forward(candidate, x0).output, target)

    dws, dbs = [], []
    for k, layer in enumerate(net.layers):
        for attr, arr, sink in (("w", layer.weight, dws),
                                ("b", layer.bias, dbs)):
            flat = arr.ravel()
            grad = np.empty(flat.size, dtype=np.complex128)
            for idx in range(flat.size):
                w0 = flat[idx]
                ep = loss_at(_with_entry(net, k, attr, idx, w0 + h))
                em = loss_at(_with_entry(net, k, attr, idx, w0 - h))
                ipl = loss_at(_with_entry(net, k, attr, idx, w0 + 1j * h))
                imn = loss_at(_with_entry(net, k, attr, idx, w0 - 1j * h))
                grad[idx] = ((ep - em) + 1j * (ipl - imn)) / (4.0 * h)
            sink.append(grad.reshape(arr.shape))
    return Gradients(dw=tuple(dws), db=tuple(dbs))


def gradient_gap(analytic, numeric):
    """Max relative entry gap, |a - n| / max(|a|, |n|).

    Entries where both sides sit below 1e-12 count as agreeing: there the
    true gradient vanishes and the difference is pure roundoff.
    """
    worst = 0.0
    for a, b in zip(analytic.dw + analytic.db, numeric.dw + numeric.db):
        denom = np.maximum(np.abs(a), np.abs(b))
        ratio = np.where(denom > 1e-12, np.abs(a - b) / np.maximum(denom, 1e-300), 0.0)
        worst = max(worst, float(np.max(ratio)))
    return worst


def grad_check(net, x0, target, h=1e-5):
    """Max relative error between backward() and the finite-difference oracle."""
    x0 = np.asarray(x0, dtype=np.complex128)
    target = np.asarray(target, dtype=np.complex128)
    analytic = backward(net, forward(net, x0), target)
    numeric = numeric_gradients(net, x0, target, h=h)
    return gradient_gap(analytic, numeric)


def sgd_step(net, grads, eta):
    """One gradient-descent update: W <- W - eta*dW, b <- b - eta*db."""
    if len(grads.dw) != len(net.layers) or len(grads.db) != len(net.layers):
        raise DimensionMismatch("gradient layer count does not match network")
    layers = []
    for layer, dw, db in zip(net.layers, grads.dw, grads.db):
        if dw.shape != layer.weight.shape or db.shape != layer.bias.shape:
            raise DimensionMismatch("gradient shape does not match layer")
        layers.append(
            type(layer)(
                weight=layer.weight - eta * dw,
                bias=layer.bias - eta * db,
                activation=layer.activation,
            )
        )
    return type(net)(layers=tuple(layers))


def _as_pair(sample):
    if hasattr(sample, "input") and hasattr(sample, "target"):
        return sample.input, sample.target
    x, t = sample
    return x, t


def train(net, samples, cfg):
    """Full-batch gradient descent.

    Each epoch runs one batched forward pass, records the mean per-sample
    loss, and applies one step with the mean gradient. Stops early once the
    recorded loss reaches cfg.loss_floor. Deterministic for a fixed sample
    order; raises NonFiniteLoss if the loss leaves the reals.
    """
    pairs = [_as_pair(s) for s in samples]
    if not pairs:
        raise DimensionMismatch("no training samples")
    xs = np.stack([np.asarray(x, dtype=np.complex128) for x, _ in pairs], axis=1)
    ts = np.stack([np.asarray(t, dtype=np.complex128) for _, t in pairs], axis=1)
    if xs.shape[0] != net.in_dim:
        raise DimensionMismatch("sample inputs do not match network input width")
    if ts.shape[0] != net.out_dim:
        raise DimensionMismatch("sample targets do not match network output width")
    n = xs.shape[1]

    curve = LearningCurve()
    start = time.perf_counter()
    # overflow is detected through the loss and reported as NonFiniteLoss,
    # so the intermediate warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, cfg.epochs + 1):
            pres, posts = _forward_arrays(net, xs)
            err = posts[-1] - ts
            mean_loss = float(np.sum(err.real**2 + err.imag**2)) / n
            if not np.isfinite(mean_loss):
                raise NonFiniteLoss(f"loss became non-finite at epoch {epoch}")
            curve.append(epoch, mean_loss, time.perf_counter() - start)
            if cfg.log_every and epoch % cfg.log_every == 0:
                print(f"epoch {epoch}: loss {mean_loss:.6e}")
            if mean_loss <= cfg.loss_floor:
                break
            deltas = _deltas(net, pres, posts, ts, conjugate_route=True)
            grads = _assemble(net, deltas, posts, xs, scale=1.0 / n)
            net = sgd_step(net, grads, cfg.learning_rate)
    return net, curve
