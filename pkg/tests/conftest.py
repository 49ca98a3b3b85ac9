import numpy as np
import pytest

import coherentnn as cn


def haar_unitary(n, rng):
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_default_mesh(rng):
    """Random phases on the four-port rectangle S1..S4."""
    stages = []
    for ports in ([0, 2], [1], [0, 2], [1]):
        stages.append(tuple(
            (p, cn.MziUnit(theta=rng.uniform(-np.pi, np.pi),
                           phi=rng.uniform(-np.pi, np.pi)))
            for p in ports
        ))
    return cn.MziMesh(n_ports=4, stages=tuple(stages))


def pole_guarded_net(activation, seed, margin=0.5, max_depth=3):
    """Random small net plus sample whose trace stays away from poles.

    grad_check's contract only holds away from activation poles, so draws
    whose pre-activations come within ``margin`` of one are rejected.
    """
    for sub in range(64):
        r = np.random.default_rng([300, seed, sub])
        depth = int(r.integers(2, max_depth + 1))
        widths = r.integers(2, 9, size=depth + 1).tolist()
        net = cn.init_network(
            widths, activation,
            cn.InitScheme(cn.InitKind.SEPARATE_UNIFORM, half_width=0.5,
                          seed=int(r.integers(0, 2**31))),
        )
        x = r.normal(size=widths[0]) + 1j * r.normal(size=widths[0])
        t = r.normal(size=widths[-1]) + 1j * r.normal(size=widths[-1])
        trace = cn.forward(net, x)
        dmin = min(float(cn.pole_distance(activation, z).min()) for z in trace.pre)
        if dmin > margin:
            return net, x, t
    raise RuntimeError(f"no pole-guarded net for seed {seed}")


@pytest.fixture(scope="session")
def digits_idx(tmp_path_factory):
    """Real handwritten digits written as a 28x28 IDX pair.

    sklearn's 8x8 digit scans upsampled 3x and padded to the MNIST geometry;
    a desk-scale stand-in exercising the same loader and training path.
    """
    from sklearn.datasets import load_digits

    digits = load_digits()
    up = np.kron(digits.images.astype(float), np.ones((3, 3)))
    up = np.pad(up, ((0, 0), (2, 2), (2, 2)))
    images = np.clip(np.round(up * (255.0 / 16.0)), 0, 255).astype(np.uint8)
    labels = digits.target.astype(np.uint8)

    root = tmp_path_factory.mktemp("digits")
    images_path = root / "digits-images-idx3-ubyte"
    labels_path = root / "digits-labels-idx1-ubyte"
    cn.write_idx_images(images_path, images)
    cn.write_idx_labels(labels_path, labels)
    return str(images_path), str(labels_path)
