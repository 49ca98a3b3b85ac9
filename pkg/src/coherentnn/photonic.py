"""Photonic back-ends: MZI meshes and the fractional diffraction operator.

An interferometer unit couples two neighboring ports through two 3 dB
couplers and two phase shifters, transfer matrix R = T_phi M T_theta M.
A rectangular mesh of such units realizes an N x N unitary; for four ports
the layout is stages S1..S4 with units on ports (0,1),(2,3) | (1,2) |
(0,1),(2,3) | (1,2).

Phase placement note: in this unit the phi shifter sits on the top OUTPUT
arm. A phase diagonal applied after the mesh therefore folds into the
units' phi parameters (leaving only a global phase), so it cannot complete
the parameterization of U(N). A diagonal applied at the INPUT ports can,
and that is the form ``decompose_unitary`` produces:

    mesh_matrix(mesh) @ diag(input_phases) == U

The diffraction side models free-space propagation between layers as an
N x N unitary with entries (1/sqrt N) W^((1/2)[(n-m)^2 - n^2 eps^2]),
W = exp(2i pi / N), eps in [0, 1] interpolating Fresnel (0) to a
chirp-modulated Fourier kernel (1). A trained dense layer is realized
optically as this fixed operator followed by an elementwise modulation
mask r, recovered by ``extract_modulation``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cnet import forward
from .errors import (
    DimensionMismatch,
    NearZeroDivisor,
    NotUnitary,
    RankDeficient,
)

TAU = 2.0 * math.pi

DIVISION_GUARD = 1e-9


def _wrap_phase(x):
    """Reduce an angle to (-pi, pi]."""
    x = math.remainder(float(x), TAU)
    if x <= -math.pi:
        x += TAU
    return x


@dataclass(frozen=True)
class MziUnit:
    """One interferometer unit, parameterized by its two shifter phases."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "theta", _wrap_phase(self.theta))
        object.__setattr__(self, "phi", _wrap_phase(self.phi))


@dataclass(frozen=True)
class MziMesh:
    """Stages of units; units within a stage act on disjoint port pairs."""

    n_ports: int
    stages: tuple

    def __post_init__(self):
        stages = tuple(tuple(stage) for stage in self.stages)
        for stage in stages:
            seen = set()
            for top, unit in stage:
                if not isinstance(unit, MziUnit):
                    raise TypeError("stage entries must be (top_port, MziUnit)")
                if top < 0 or top + 1 >= self.n_ports:
                    raise DimensionMismatch(
                        f"unit at port {top} does not fit {self.n_ports} ports"
                    )
                if top in seen or top + 1 in seen:
                    raise DimensionMismatch(
                        f"overlapping port pairs in one stage (top={top})"
                    )
                seen.update((top, top + 1))
        object.__setattr__(self, "stages", stages)

    @property
    def unit_count(self):
        return sum(len(stage) for stage in self.stages)


def coupler_matrix():
    """3 dB coupler, (1/sqrt 2) [[1, i], [i, 1]]."""
    return np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=np.complex128) / math.sqrt(2)


def _phase_shifter(angle):
    return np.array([[np.exp(1j * angle), 0.0], [0.0, 1.0]], dtype=np.complex128)


def mzi_matrix(unit):
    """Unit transfer matrix, evaluated as the product T_phi M T_theta M."""
    m = coupler_matrix()
    return _phase_shifter(unit.phi) @ m @ _phase_shifter(unit.theta) @ m


def _embed(n, top, block):
    out = np.eye(n, dtype=np.complex128)
    out[top : top + 2, top : top + 2] = block
    return out


def mesh_matrix(mesh):
    """Total transfer matrix, first stage applied first (rightmost factor)."""
    total = np.eye(mesh.n_ports, dtype=np.complex128)
    for stage in mesh.stages:
        stage_mat = np.eye(mesh.n_ports, dtype=np.complex128)
        for top, unit in stage:
            stage_mat[top : top + 2, top : top + 2] = mzi_matrix(unit)
        total = stage_mat @ total
    return total


def project_to_unitary(w, tol=1e-12, max_iter=100):
    """Nearest unitary in Frobenius norm (the polar factor of w).

    Newton iteration X <- (X + X^-H)/2, which converges quadratically for
    any nonsingular start. Raises RankDeficient when the smallest singular
    value is below 1e-10, where the polar factor is ill-defined.
    """
    w = np.asarray(w, dtype=np.complex128)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise DimensionMismatch("projection needs a square matrix")
    smin = np.linalg.svd(w, compute_uv=False)[-1]
    if smin <= 1e-10:
        raise RankDeficient(f"smallest singular value {smin:.3e} too small")
    # scale toward unit spectral radius so the first steps do not overshoot
    x = w / math.sqrt(
        np.abs(w).sum(axis=0).max() * np.abs(w).sum(axis=1).max()
    )
    eye = np.eye(w.shape[0])
    for _ in range(max_iter):
        x = 0.5 * (x + np.linalg.inv(x).conj().T)
        if np.abs(x.conj().T @ x - eye).max() < tol:
            return x
    raise RankDeficient("polar iteration failed to converge")


def _right_null_params(a, b):
    """(theta, phi) so that a right column op zeroes the entry holding a."""
    if abs(a) <= 1e-14:
        return math.pi, 0.0  # bar state, preserves the existing zero
    theta = 2.0 * math.atan2(abs(b), abs(a))
    phi = float(np.angle(-b * np.conj(a)))
    return theta, phi


def _left_null_params(above, target):
    """(theta, phi) so that a left dagger row op zeroes ``target``."""
    if abs(target) <= 1e-14:
        return math.pi, 0.0
    theta = 2.0 * math.atan2(abs(above), abs(target))
    phi = float(np.angle(above * np.conj(target)))
    return theta, phi


def _unit_2x2(theta, phi):
    return mzi_matrix(MziUnit(theta=theta, phi=phi))


def _pack_stages(units):
    """Greedy left-to-right packing of an applied-order unit list into stages."""
    stages = []
    current, occupied = [], set()
    for top, unit in units:
        if top in occupied or top + 1 in occupied:
            stages.append(tuple(current))
            current, occupied = [], set()
        current.append((top, unit))
        occupied.update((top, top + 1))
    if current:
        stages.append(tuple(current))
    return tuple(stages)


def decompose_unitary(u, atol=1e-8):
    """Factor a unitary into a rectangular mesh and input port phases.

    Returns (mesh, input_phases) with
    mesh_matrix(mesh) @ diag(input_phases) == u to roundoff. For N = 4 the
    mesh is exactly the default six-unit rectangle.

    Two-sided nulling: odd antidiagonals are zeroed by right column ops with
    proper units, even ones by left row ops with daggered units. The
    resulting middle diagonal is swept right through the dagger chain using
    diag(d1, d2) R(t, p)^H == R(t, arg(d1/d2)) diag(d1', d2'), which turns
    every dagger into a proper unit and leaves the diagonal at the input.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionMismatch("decomposition needs a square matrix")
    n = u.shape[0]
    defect = np.abs(u.conj().T @ u - np.eye(n)).max()
    if defect > atol:
        raise NotUnitary(f"unitarity defect {defect:.3e} exceeds {atol:.0e}")

    v = u.copy()
    rights, lefts = [], []  # (top_port, theta, phi) in application order
    for d in range(1, n):
        if d % 2 == 1:
            for j in range(d):
                r, c = n - 1 - j, d - 1 - j
                theta, phi = _right_null_params(v[r, c], v[r, c + 1])
                v[:, c : c + 2] = v[:, c : c + 2] @ _unit_2x2(theta, phi)
                rights.append((c, theta, phi))
        else:
            for j in range(d - 1, -1, -1):
                r, c = n - 1 - j, d - 1 - j
                theta, phi = _left_null_params(v[r - 1, c], v[r, c])
                block = _unit_2x2(theta, phi).conj().T
                v[r - 1 : r + 1, :] = block @ v[r - 1 : r + 1, :]
                lefts.append((r - 1, theta, phi))

    phases = np.diag(v).copy()
    converted_rev = []
    for top, theta, phi in reversed(rights):
        d2 = phases[top + 1]
        phi_new = float(np.angle(phases[top] * np.conj(d2)))
        phases[top] = -np.exp(-1j * theta) * np.exp(-1j * phi) * d2
        phases[top + 1] = -np.exp(-1j * theta) * d2
        converted_rev.append((top, theta, phi_new))

    ordered = [
        (top, MziUnit(theta=t, phi=p)) for top, t, p in reversed(converted_rev)
    ] + [(top, MziUnit(theta=t, phi=p)) for top, t, p in reversed(lefts)]
    mesh = MziMesh(n_ports=n, stages=_pack_stages(ordered))
    return mesh, phases


@dataclass(frozen=True)
class DiffractionOperator:
    """Cached N x N fractional diffraction matrix with factor eps."""

    size: int
    epsilon: float
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def diffraction_matrix(size, epsilon):
    """Build the operator from its closed-form entries.

    entry(n, m) = (1/sqrt N) exp(i pi [(n-m)^2 - n^2 eps^2] / N), zero-based
    indices. Equals diag-chirp @ conj-DFT-kernel @ diag-chirp, hence unitary
    for every eps.
    """
    if size < 1:
        raise DimensionMismatch("operator size must be >= 1")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("fractional factor must lie in [0, 1]")
    n = np.arange(size)[:, None]
    m = np.arange(size)[None, :]
    exponent = 0.5 * ((n - m) ** 2 - (n**2) * epsilon**2)
    matrix = np.exp(1j * TAU * exponent / size) / math.sqrt(size)
    return DiffractionOperator(size=size, epsilon=float(epsilon), matrix=matrix)


@dataclass(frozen=True)
class GeometryParams:
    """Aperture d, wavelength lam, and sample count per layer (all positive)."""

    aperture: float
    wavelength: float
    samples: int

    def __post_init__(self):
        if self.aperture <= 0 or self.wavelength <= 0 or self.samples <= 0:
            raise ValueError("geometry parameters must be positive")


def diffraction_distance(geom):
    """Layer spacing d^2 / (lambda N) for the given sampling geometry."""
    return geom.aperture**2 / (geom.wavelength * geom.samples)


@dataclass(frozen=True)
class DiffractiveLayer:
    """Fixed diffraction operator followed by an elementwise modulation mask."""

    op: DiffractionOperator
    modulation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.modulation, dtype=np.complex128)
        if r.ndim != 1 or r.shape[0] != self.op.size:
            raise DimensionMismatch("modulation length must equal operator size")
        r = r.copy()
        r.flags.writeable = False
        object.__setattr__(self, "modulation", r)


def extract_modulation(layer_fn_output, op, y_in):
    """Solve (op @ y_in) * r == layer_fn_output elementwise for r.

    Raises NearZeroDivisor (with the offending indices) when any diffracted
    amplitude falls below the guard threshold; there r would be noise.
    """
    out = np.asarray(layer_fn_output, dtype=np.complex128)
    y_in = np.asarray(y_in, dtype=np.complex128)
    if out.shape != (op.size,) or y_in.shape != (op.size,):
        raise DimensionMismatch("vector lengths must equal operator size")
    diffracted = op.matrix @ y_in
    small = np.abs(diffracted) <= DIVISION_GUARD
    if np.any(small):
        idx = np.nonzero(small)[0]
        raise NearZeroDivisor(
            f"diffracted field below {DIVISION_GUARD:.0e} at {idx.tolist()}",
            indices=idx,
        )
    return out / diffracted


def diffractive_forward(layers, y0):
    """Chain y_n = (D_n @ y_{n-1}) * r_n over the given layers."""
    y = np.asarray(y0, dtype=np.complex128)
    for layer in layers:
        if y.shape != (layer.op.size,):
            raise DimensionMismatch("field length does not match operator size")
        y = (layer.op.matrix @ y) * layer.modulation
    return y


def compile_diffractive(net, op, y0):
    """Express a trained network's action on y0 as diffractive layers.

    Runs the network once, then extracts one modulation mask per layer from
    the traced activations. The returned chain reproduces forward(net, y0)
    up to roundoff; inputs whose diffracted field vanishes somewhere raise
    NearZeroDivisor.
    """
    trace = forward(net, y0)
    layers = []
    x_prev = trace.input
    for k, post in enumerate(trace.post):
        r = extract_modulation(post, op, x_prev)
        layers.append(DiffractiveLayer(op=op, modulation=r))
        x_prev = post
    return layers


def mesh_to_dict(mesh, input_phases):
    return {
        "ports": mesh.n_ports,
        "stages": [
            [
                {"top": top, "theta": unit.theta, "phi": unit.phi}
                for top, unit in stage
            ]
            for stage in mesh.stages
        ],
        "input_phases": [
            [float(z.real), float(z.imag)] for z in np.asarray(input_phases)
        ],
    }


def mesh_from_dict(doc):
    stages = tuple(
        tuple(
            (int(entry["top"]), MziUnit(theta=entry["theta"], phi=entry["phi"]))
            for entry in stage
        )
        for stage in doc["stages"]
    )
    mesh = MziMesh(n_ports=int(doc["ports"]), stages=stages)
    pairs = np.asarray(doc["input_phases"], dtype=float)
    phases = pairs[:, 0] + 1j * pairs[:, 1]
    return mesh, phases


def save_mesh(mesh, input_phases, path):
    with open(path, "w") as fh:
        json.dump(mesh_to_dict(mesh, input_phases), fh)


def load_mesh(path):
    with open(path) as fh:
        return mesh_from_dict(json.load(fh))
