"""Complex-valued dense networks: activations, forward pass, initialization.

All numeric state is carried by numpy ``complex128`` arrays: vectors are 1-D,
weight matrices 2-D with shape (out, in). Containers are frozen after
construction (their arrays are marked read-only), so values can be shared
freely across threads; the forward pass is a pure function.

The supported activations are the complex-analytic extensions of the usual
real functions. They inherit the conjugation symmetry f(conj(z)) == conj(f(z))
of any real-coefficient analytic function, which is what lets one backward
rule serve real and complex problems alike.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, PoleProximity

# Hard guard around the poles of sigmoid/tanh in the complex plane. Closer
# than this the value is numerically meaningless and training diagnostics
# would silently corrupt.
POLE_GUARD = 1e-9

DEFAULT_HALF_WIDTH = 0.5


class Activation(Enum):
    """Pointwise activation, applied to complex arguments by substitution."""

    IDENTITY = "identity"
    SIGMOID = "sigmoid"
    TANH = "tanh"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown activation {name!r}") from None


def pole_distance(kind, z):
    """Distance from each entry of z to the nearest pole of the activation.

    Sigmoid has poles at i*pi*(2k+1), tanh at i*pi*(k+1/2); identity has none.
    """
    z = np.asarray(z, dtype=np.complex128)
    im = z.imag
    if kind is Activation.SIGMOID:
        k = np.round((im / math.pi - 1.0) / 2.0)
        pole_im = (2.0 * k + 1.0) * math.pi
    elif kind is Activation.TANH:
        k = np.round(im / math.pi - 0.5)
        pole_im = (k + 0.5) * math.pi
    else:
        return np.full(np.shape(z), np.inf)
    return np.hypot(z.real, im - pole_im)


def _guard_poles(kind, z):
    dist = pole_distance(kind, z)
    if np.any(dist < POLE_GUARD):
        worst = float(np.min(dist))
        raise PoleProximity(
            f"{kind.value} evaluated within {worst:.3e} of a pole "
            f"(guard radius {POLE_GUARD:.0e})"
        )


def activate(kind, z):
    """Apply the activation to a complex scalar or array.

    Sigmoid is evaluated as 0.5*(1 + tanh(z/2)), which equals 1/(1 + exp(-z))
    identically but never overflows for large |Re z|.
    """
    z = np.asarray(z, dtype=np.complex128)
    _guard_poles(kind, z)
    if kind is Activation.IDENTITY:
        return z.copy() if z.ndim else z + 0
    if kind is Activation.SIGMOID:
        return 0.5 + 0.5 * np.tanh(0.5 * z)
    if kind is Activation.TANH:
        return np.tanh(z)
    raise ValueError(f"unknown activation {kind!r}")


def activate_deriv(kind, z):
    """Derivative of the activation at z, via the real formulas.

    Sigmoid' = f(1-f), tanh' = 1 - f**2, identity' = 1. For these analytic
    functions this coincides with the complex derivative.
    """
    z = np.asarray(z, dtype=np.complex128)
    _guard_poles(kind, z)
    if kind is Activation.IDENTITY:
        return np.ones_like(z)
    if kind is Activation.SIGMOID:
        f = 0.5 + 0.5 * np.tanh(0.5 * z)
        return f * (1.0 - f)
    if kind is Activation.TANH:
        f = np.tanh(z)
        return 1.0 - f * f
    raise ValueError(f"unknown activation {kind!r}")


def _frozen_complex(x, ndim, name):
    arr = np.array(x, dtype=np.complex128)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Layer:
    """One dense layer: weight (out, in), bias (out,), activation kind."""

    weight: np.ndarray
    bias: np.ndarray
    activation: Activation

    def __post_init__(self):
        w = _frozen_complex(self.weight, 2, "weight")
        b = _frozen_complex(self.bias, 1, "bias")
        if w.shape[0] != b.shape[0]:
            raise DimensionMismatch(
                f"weight rows {w.shape[0]} != bias length {b.shape[0]}"
            )
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def out_dim(self):
        return self.weight.shape[0]

    @property
    def in_dim(self):
        return self.weight.shape[1]


@dataclass(frozen=True)
class Network:
    """Ordered dense layers; adjacent layers must be dimension compatible."""

    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionMismatch("network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].in_dim != layers[k - 1].out_dim:
                raise DimensionMismatch(
                    f"layer {k} expects {layers[k].in_dim} inputs, "
                    f"layer {k - 1} emits {layers[k - 1].out_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim


@dataclass(frozen=True)
class ForwardTrace:
    """Cached pre-activations and activations from one forward pass."""

    input: np.ndarray
    pre: tuple
    post: tuple

    @property
    def output(self):
        return self.post[-1]


def _forward_arrays(net, x):
    """Shared forward engine; x is 1-D or a 2-D batch of column vectors."""
    pres, posts = [], []
    for layer in net.layers:
        b = layer.bias if x.ndim == 1 else layer.bias[:, None]
        z = layer.weight @ x + b
        x = activate(layer.activation, z)
        pres.append(z)
        posts.append(x)
    return pres, posts


def forward(net, x0):
    """Run the network on one input vector and return the full trace."""
    x0 = np.asarray(x0, dtype=np.complex128)
    if x0.ndim != 1 or x0.shape[0] != net.in_dim:
        raise DimensionMismatch(
            f"input shape {x0.shape} does not match network input {net.in_dim}"
        )
    pres, posts = _forward_arrays(net, x0)
    return ForwardTrace(input=x0, pre=tuple(pres), post=tuple(posts))


class InitKind(Enum):
    """Weight initialization families, all zero mean in expectation."""

    SEPARATE_UNIFORM = "separate"
    PHASE_ONLY = "phase"
    REAL_MIRROR_IMAG = "mirror"
    REAL_ONLY = "real"
    IMAG_ONLY = "imag"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown init scheme {name!r}") from None


@dataclass(frozen=True)
class InitScheme:
    kind: InitKind
    half_width: float = DEFAULT_HALF_WIDTH
    seed: int = 0

    def __post_init__(self):
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


# Entropy domain tags keep weight streams disjoint from sample-generator
# streams that share the same user seed.
_WEIGHT_DOMAIN = 0x57


def layer_rng(seed, stream):
    """PCG64 generator for one layer.

    Stream-splitting rule: layer k of a network is drawn from a generator
    seeded with the entropy triple (weight-domain tag, seed, k).
    Bit-identical across platforms.
    """
    return np.random.default_rng([_WEIGHT_DOMAIN, int(seed), int(stream)])


def init_layer(scheme, out_dim, in_dim, activation=Activation.IDENTITY, stream=0):
    """Draw one layer. Biases start at zero; only weights are randomized."""
    if out_dim < 1 or in_dim < 1:
        raise DimensionMismatch("layer dimensions must be >= 1")
    rng = layer_rng(scheme.seed, stream)
    h = scheme.half_width
    shape = (out_dim, in_dim)
    kind = scheme.kind
    if kind is InitKind.SEPARATE_UNIFORM:
        w = rng.uniform(-h, h, shape) + 1j * rng.uniform(-h, h, shape)
    elif kind is InitKind.PHASE_ONLY:
        w = np.exp(1j * rng.uniform(-math.pi, math.pi, shape))
    elif kind is InitKind.REAL_MIRROR_IMAG:
        re = rng.uniform(-h, h, shape)
        w = re + 1j * re
    elif kind is InitKind.REAL_ONLY:
        w = rng.uniform(-h, h, shape) + 0j
    elif kind is InitKind.IMAG_ONLY:
        w = 1j * rng.uniform(-h, h, shape)
    else:
        raise ValueError(f"unknown init scheme {kind!r}")
    return Layer(weight=w, bias=np.zeros(out_dim), activation=activation)


def init_network(widths, activations, scheme):
    """Build a network of len(widths)-1 layers.

    ``activations`` is one Activation applied everywhere, or a sequence with
    one entry per layer (e.g. tanh hidden, sigmoid output).
    """
    widths = [int(w) for w in widths]
    if len(widths) < 2:
        raise DimensionMismatch("need at least input and output widths")
    n_layers = len(widths) - 1
    if isinstance(activations, Activation):
        acts = [activations] * n_layers
    else:
        acts = list(activations)
        if len(acts) != n_layers:
            raise DimensionMismatch(
                f"{len(acts)} activations for {n_layers} layers"
            )
    layers = [
        init_layer(scheme, widths[k + 1], widths[k], acts[k], stream=k)
        for k in range(n_layers)
    ]
    return Network(layers=tuple(layers))


def interleave(h):
    """Map a complex vector (z1, ..., zn) to (re z1, im z1, ..., re zn, im zn)."""
    h = np.asarray(h, dtype=np.complex128)
    out = np.empty(2 * h.shape[0])
    out[0::2] = h.real
    out[1::2] = h.imag
    return out


def complex_to_block_real(w):
    """Expand a complex matrix into its (2r x 2c) real block representation.

    Each entry a+ib becomes the 2x2 block [[a, -b], [b, a]], so that
    block @ interleave(h) == interleave(w @ h) for every complex h.
    """
    w = np.asarray(w, dtype=np.complex128)
    r, c = w.shape
    out = np.empty((2 * r, 2 * c))
    out[0::2, 0::2] = w.real
    out[0::2, 1::2] = -w.imag
    out[1::2, 0::2] = w.imag
    out[1::2, 1::2] = w.real
    return out


def _complex_pairs(arr):
    flat = np.asarray(arr, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def _pairs_to_complex(pairs, name):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must be a list of [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr[:, 0] + 1j * arr[:, 1]


def network_to_dict(net):
    """JSON-ready dict; complex numbers are stored as [re, im] pairs."""
    layers = []
    for layer in net.layers:
        layers.append(
            {
                "rows": layer.out_dim,
                "cols": layer.in_dim,
                "activation": layer.activation.value,
                "weight": _complex_pairs(layer.weight),
                "bias": _complex_pairs(layer.bias),
            }
        )
    return {"layers": layers}


def network_from_dict(doc):
    layers = []
    for k, entry in enumerate(doc["layers"]):
        rows, cols = int(entry["rows"]), int(entry["cols"])
        w = _pairs_to_complex(entry["weight"], f"layer {k} weight")
        if w.shape[0] != rows * cols:
            raise ValueError(f"layer {k}: {w.shape[0]} weights for {rows}x{cols}")
        b = _pairs_to_complex(entry["bias"], f"layer {k} bias")
        if b.shape[0] != rows:
            raise ValueError(f"layer {k}: {b.shape[0]} biases for {rows} rows")
        layers.append(
            Layer(
                weight=w.reshape(rows, cols),
                bias=b,
                activation=Activation.from_name(entry["activation"]),
            )
        )
    return Network(layers=tuple(layers))


def save_network(net, path):
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh)


def load_network(path):
    with open(path) as fh:
        return network_from_dict(json.load(fh))
