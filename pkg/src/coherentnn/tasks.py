"""Datasets: phase XOR, real XOR, synthetic diffractive fields, MNIST.

Real and complex samples share one representation (complex vectors with
zero imaginary part where applicable), so mixed sets train through the
same channel without special casing.
"""

from __future__ import annotations

import gzip
import json
import math
import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadMagic, CountMismatch, DimensionMismatch, TruncatedFile

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class SamplePair:
    """One training example: complex input, complex target, label text."""

    input: np.ndarray
    target: np.ndarray
    tag: str = ""

    def __post_init__(self):
        x = np.asarray(self.input, dtype=np.complex128)
        t = np.asarray(self.target, dtype=np.complex128)
        for arr in (x, t):
            if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
                raise ValueError("sample entries must be finite")
        object.__setattr__(self, "input", x)
        object.__setattr__(self, "target", t)


def phase_xor_dataset():
    """The two 4-dim phase-XOR pairs: phases from the truth table, one
    amplitude per row (2 for the first pair, 1 for the second)."""
    rows = [
        (2.0, [1 / 4, 3 / 4, 5 / 4, 7 / 4], [0 / 6, 3 / 6, 6 / 6, 9 / 6], "phase1"),
        (1.0, [1 / 3, 5 / 6, 8 / 6, 11 / 6], [1 / 6, 4 / 6, 7 / 6, 10 / 6], "phase2"),
    ]
    pairs = []
    for amp, xs, ys, tag in rows:
        x = amp * np.exp(1j * math.pi * np.asarray(xs))
        y = amp * np.exp(1j * math.pi * np.asarray(ys))
        pairs.append(SamplePair(input=x, target=y, tag=tag))
    return pairs


def real_xor_dataset():
    """XOR truth table as a real 4 -> 4 intensity mapping.

    Row k (00, 01, 10, 11) is the one-hot vector e_k; its target carries
    XOR(row k) at position k and zeros elsewhere.
    """
    pairs = []
    for k, bits in enumerate(("00", "01", "10", "11")):
        x = np.zeros(4, dtype=np.complex128)
        x[k] = 1.0
        t = np.zeros(4, dtype=np.complex128)
        t[k] = float(int(bits[0]) ^ int(bits[1]))
        pairs.append(SamplePair(input=x, target=t, tag=bits))
    return pairs


class SampleKind(Enum):
    AMPLITUDE_ONLY = "amplitude"
    PHASE_ONLY = "phase"
    AMPLITUDE_PHASE = "amplitude-phase"

    @classmethod
    def from_name(cls, name):
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown sample kind {name!r}") from None


@dataclass(frozen=True)
class DiffractiveSampleSpec:
    kind: SampleKind
    length: int
    seed: int = 0

    def __post_init__(self):
        if self.length < 2:
            raise DimensionMismatch("sample length must be >= 2")


def gen_diffractive_samples(spec, count, op):
    """Random 1-D input fields paired with their diffracted counterparts.

    Targets are op.matrix @ input, the physically propagated field, so the
    set is exactly learnable by a linear layer and energy preserving.
    Reproducible bit-exactly per (spec, seed).
    """
    if op.size != spec.length:
        raise DimensionMismatch("operator size does not match sample length")
    # sample-domain tag keeps this stream disjoint from weight init streams
    rng = np.random.default_rng([0x5A, int(spec.seed)])
    pairs = []
    for i in range(count):
        if spec.kind is SampleKind.AMPLITUDE_ONLY:
            field = rng.uniform(0.0, 1.0, spec.length).astype(np.complex128)
        elif spec.kind is SampleKind.PHASE_ONLY:
            field = np.exp(1j * rng.uniform(-math.pi, math.pi, spec.length))
        else:
            amp = rng.uniform(0.0, 1.0, spec.length)
            field = amp * np.exp(1j * rng.uniform(-math.pi, math.pi, spec.length))
        target = op.matrix @ field
        pairs.append(SamplePair(input=field, target=target, tag=f"{spec.kind.value}-{i}"))
    return pairs


@dataclass(frozen=True)
class MnistSet:
    """Parsed digit images (n, 28, 28) uint8 and labels (n,) in 0..9."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise CountMismatch(
                f"{len(self.images)} images vs {len(self.labels)} labels"
            )

    def __len__(self):
        return len(self.labels)


def _open_maybe_gzip(path):
    if str(path).endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, n, path):
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedFile(f"{path}: wanted {n} bytes, got {len(data)}")
    return data


def _read_idx_images(path):
    with _open_maybe_gzip(path) as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, path))
        if magic != IDX_IMAGES_MAGIC:
            raise BadMagic(f"{path}: magic 0x{magic:08x}, expected images file")
        count, rows, cols = struct.unpack(">III", _read_exact(fh, 12, path))
        if (rows, cols) != (28, 28):
            raise DimensionMismatch(f"{path}: {rows}x{cols} images, expected 28x28")
        raw = _read_exact(fh, count * rows * cols, path)
    return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)


def _read_idx_labels(path):
    with _open_maybe_gzip(path) as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, path))
        if magic != IDX_LABELS_MAGIC:
            raise BadMagic(f"{path}: magic 0x{magic:08x}, expected labels file")
        (count,) = struct.unpack(">I", _read_exact(fh, 4, path))
        raw = _read_exact(fh, count, path)
    labels = np.frombuffer(raw, dtype=np.uint8)
    if labels.size and labels.max() > 9:
        raise ValueError(f"{path}: labels outside 0..9")
    return labels


def load_mnist(images_path, labels_path):
    """Parse the standard big-endian IDX pair into an MnistSet."""
    images = _read_idx_images(images_path)
    labels = _read_idx_labels(labels_path)
    if len(images) != len(labels):
        raise CountMismatch(
            f"{len(images)} images in {images_path} vs {len(labels)} labels"
        )
    return MnistSet(images=images, labels=labels)


def write_idx_images(path, images):
    """Write (n, 28, 28) uint8 images in IDX format (fixtures, exports)."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def _vector_pairs(arr):
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr).ravel()]


def save_samples(pairs, path):
    """Dump sample pairs as JSON, complex entries as [re, im] pairs."""
    doc = {
        "samples": [
            {"tag": p.tag, "input": _vector_pairs(p.input),
             "target": _vector_pairs(p.target)}
            for p in pairs
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_samples(path):
    with open(path) as fh:
        doc = json.load(fh)
    pairs = []
    for entry in doc["samples"]:
        x = np.asarray(entry["input"], dtype=float)
        t = np.asarray(entry["target"], dtype=float)
        pairs.append(
            SamplePair(
                input=x[:, 0] + 1j * x[:, 1],
                target=t[:, 0] + 1j * t[:, 1],
                tag=str(entry.get("tag", "")),
            )
        )
    return pairs


def mnist_to_pairs(dataset, limit):
    """First ``limit`` records as (784-dim intensity, one-hot-10) pairs.

    Pixels scale to [0, 1]; inputs and targets are real-valued complex
    vectors (intensity in, intensity out, no phase information).
    """
    if limit > len(dataset):
        raise CountMismatch(f"limit {limit} exceeds dataset size {len(dataset)}")
    pairs = []
    for img, label in zip(dataset.images[:limit], dataset.labels[:limit]):
        x = (img.reshape(-1).astype(float) / 255.0).astype(np.complex128)
        t = np.zeros(10, dtype=np.complex128)
        t[int(label)] = 1.0
        pairs.append(SamplePair(input=x, target=t, tag=str(int(label))))
    return pairs
