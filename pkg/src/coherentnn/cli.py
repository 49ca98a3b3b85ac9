"""Command-line driver for the desk-scale experiments.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure
(divergence, non-convergence, failed check). Every subcommand is
deterministic for fixed flags and seed; COHERENTNN_SEED supplies the seed
when --seed is absent.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import backprop, cnet, photonic, tasks
from .errors import (
    BadMagic,
    CoherentError,
    CountMismatch,
    DimensionMismatch,
    NearZeroDivisor,
    NonFiniteLoss,
    NotUnitary,
    PoleProximity,
    RankDeficient,
    TruncatedFile,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

CONFIG_ERRORS = (ValueError, OSError, DimensionMismatch,
                 BadMagic, TruncatedFile, CountMismatch)
NUMERIC_ERRORS = (NonFiniteLoss, PoleProximity, RankDeficient, NotUnitary,
                  NearZeroDivisor)


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _default_seed():
    return int(os.environ.get("COHERENTNN_SEED", "0"))


def _parse_widths(text):
    widths = [int(w) for w in text.split(",") if w.strip()]
    if len(widths) < 2:
        raise ValueError(f"need at least two widths, got {text!r}")
    return widths


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scheme(args, kind_name=None, seed=None):
    kind = cnet.InitKind.from_name(kind_name or args.init)
    return cnet.InitScheme(
        kind=kind,
        half_width=args.init_width,
        seed=args.seed if seed is None else seed,
    )


def _format_complex(z):
    return f"{z.real:.17g}{z.imag:+.17g}j"


def _write_operator_csv(path, matrix):
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(_format_complex(z) for z in row) + "\n")


def _xor_activations(act, n_layers):
    """Hidden layers carry the activation; the output layer stays linear.

    The XOR targets include moduli at or above 1, which sigmoid/tanh only
    reach near their poles; an activated output layer reliably stalls there.
    """
    return [act] * (n_layers - 1) + [cnet.Activation.IDENTITY]


def cmd_train_phase_xor(args):
    out = _outdir(args)
    act = cnet.Activation.from_name(args.activation)
    scheme = _scheme(args)
    acts = _xor_activations(act, len(args.widths) - 1)
    net = cnet.init_network(args.widths, acts, scheme)
    cfg = backprop.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        loss_floor=args.loss_floor,
        seed=args.seed,
        log_every=args.log_every,
    )
    net, curve = backprop.train(net, tasks.phase_xor_dataset(), cfg)
    tag = f"phase_xor_{act.value}_s{args.seed}"
    curve.to_csv(out / f"curve_{tag}.csv")
    cnet.save_network(net, out / f"model_{tag}.json")
    print(f"final loss {curve.final_loss:.6e} after {len(curve)} epochs")
    return EXIT_OK if curve.final_loss <= args.loss_floor else EXIT_NUMERIC


def _intensity_error(net, pairs):
    worst = 0.0
    for pair in pairs:
        y = cnet.forward(net, pair.input).output
        worst = max(worst, float(np.max(np.abs(np.abs(y) ** 2 - pair.target.real))))
    return worst


def cmd_train_real_xor(args):
    out = _outdir(args)
    act = cnet.Activation.from_name(args.activation)
    pairs = tasks.real_xor_dataset()
    cfg = backprop.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, loss_floor=0.0,
        seed=args.seed, log_every=args.log_every,
    )
    acts = _xor_activations(act, len(args.widths) - 1)
    all_converged = True
    for name in ("phase", "separate", "mirror", "imag"):
        net = cnet.init_network(args.widths, acts, _scheme(args, name))
        net, curve = backprop.train(net, pairs, cfg)
        tag = f"real_xor_{name}_s{args.seed}"
        curve.to_csv(out / f"curve_{tag}.csv")
        cnet.save_network(net, out / f"model_{tag}.json")
        ierr = _intensity_error(net, pairs)
        print(f"{name:>8}: final loss {curve.final_loss:.3e}, "
              f"max intensity error {ierr:.3e}")
        all_converged &= curve.final_loss < args.converged_loss
    return EXIT_OK if all_converged else EXIT_NUMERIC


def _diffractive_pairs(kind_name, n, count, seed, op):
    """One sample kind, or 'mixed': all three kinds mingled in one set."""
    if kind_name == "mixed":
        kinds = list(tasks.SampleKind)
        share = max(1, count // len(kinds))
        pairs = []
        for i, kind in enumerate(kinds):
            spec = tasks.DiffractiveSampleSpec(kind=kind, length=n, seed=seed + i)
            pairs.extend(tasks.gen_diffractive_samples(spec, share, op))
        return pairs
    kind = tasks.SampleKind.from_name(kind_name)
    spec = tasks.DiffractiveSampleSpec(kind=kind, length=n, seed=seed)
    return tasks.gen_diffractive_samples(spec, count, op)


def cmd_train_diffractive(args):
    out = _outdir(args)
    act = cnet.Activation.from_name(args.activation)
    op = photonic.diffraction_matrix(args.n, args.epsilon)
    train_pairs = _diffractive_pairs(args.sample_kind, args.n,
                                     args.train_count, args.seed, op)
    test_pairs = _diffractive_pairs(args.sample_kind, args.n,
                                    args.test_count, args.seed + 100, op)

    net = cnet.init_network([args.n] * 3, act, _scheme(args))
    cfg = backprop.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, loss_floor=0.0,
        seed=args.seed, log_every=args.log_every,
    )
    net, curve = backprop.train(net, train_pairs, cfg)
    tag = f"diffractive_n{args.n}_{act.value}_s{args.seed}"
    curve.to_csv(out / f"curve_{tag}.csv")
    cnet.save_network(net, out / f"model_{tag}.json")

    worst, skipped = 0.0, 0
    for pair in test_pairs:
        try:
            chain = photonic.compile_diffractive(net, op, pair.input)
        except NearZeroDivisor as exc:
            skipped += 1
            print(f"skipped input with vanishing field at {exc.indices}")
            continue
        replay = photonic.diffractive_forward(chain, pair.input)
        reference = cnet.forward(net, pair.input).output
        worst = max(worst, float(np.max(np.abs(replay - reference))))
    print(f"loss {curve.losses[0]:.3e} -> {curve.final_loss:.3e}; "
          f"modulation round-trip max deviation {worst:.3e} "
          f"({skipped} inputs skipped)")
    ok = curve.final_loss < curve.losses[0] and worst < 1e-8
    return EXIT_OK if ok else EXIT_NUMERIC


def _accuracy(net, pairs):
    hits = 0
    for pair in pairs:
        y = cnet.forward(net, pair.input).output
        hits += int(np.argmax(np.abs(y))) == int(pair.tag)
    return hits / len(pairs)


def cmd_train_mnist(args):
    out = _outdir(args)
    dataset = tasks.load_mnist(args.mnist_images, args.mnist_labels)
    pairs = tasks.mnist_to_pairs(dataset, args.limit)
    widths = [784, args.hidden, 10]
    # hidden activation is selectable; the output stays sigmoid for judgment
    acts = [cnet.Activation.from_name(args.activation), cnet.Activation.SIGMOID]
    cfg = backprop.TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, loss_floor=0.0,
        seed=args.seed, log_every=args.log_every,
    )
    all_descended = True
    for name in ("separate", "phase", "mirror"):
        net = cnet.init_network(widths, acts, _scheme(args, name))
        net, curve = backprop.train(net, pairs, cfg)
        tag = f"mnist_{name}_s{args.seed}"
        curve.to_csv(out / f"curve_{tag}.csv")
        acc = _accuracy(net, pairs)
        print(f"{name:>8}: loss {curve.losses[0]:.4f} -> {curve.final_loss:.4f}, "
              f"train accuracy {acc:.3f}")
        all_descended &= curve.final_loss < curve.losses[0]
    return EXIT_OK if all_descended else EXIT_NUMERIC


def _gradcheck_suite(corrupt_sign=False):
    """Seeded sweep of small random nets; returns worst errors per family."""
    rng = np.random.default_rng(20)
    worst = {"identity": 0.0, "tanh": 0.0, "sigmoid": 0.0, "cr": 0.0}
    for act in (cnet.Activation.IDENTITY, cnet.Activation.TANH,
                cnet.Activation.SIGMOID):
        for _ in range(5):
            widths = rng.integers(2, 7, size=3).tolist()
            scheme = cnet.InitScheme(
                kind=cnet.InitKind.SEPARATE_UNIFORM,
                seed=int(rng.integers(0, 2**31)),
            )
            net = cnet.init_network(widths, act, scheme)
            x = rng.normal(size=widths[0]) + 1j * rng.normal(size=widths[0])
            t = rng.normal(size=widths[-1]) + 1j * rng.normal(size=widths[-1])
            trace = cnet.forward(net, x)
            analytic = backprop.backward(net, trace, t)
            if corrupt_sign:
                analytic = backprop.Gradients(
                    dw=tuple(-g for g in analytic.dw),
                    db=tuple(-g for g in analytic.db),
                )
            numeric = backprop.numeric_gradients(net, x, t, h=1e-5)
            worst[act.value] = max(
                worst[act.value], backprop.gradient_gap(analytic, numeric)
            )
            cr = backprop.cr_variant_delta(net, trace, t)
            for gw, cw in zip(analytic.dw, cr.dw):
                worst["cr"] = max(worst["cr"], float(np.max(np.abs(gw - cw))))
    return worst


def cmd_gradcheck(args):
    worst = _gradcheck_suite(corrupt_sign=args.debug_corrupt_sign)
    print(f"identity worst rel err {worst['identity']:.3e} (limit 1e-7)")
    print(f"tanh     worst rel err {worst['tanh']:.3e} (limit 1e-5)")
    print(f"sigmoid  worst rel err {worst['sigmoid']:.3e} (limit 1e-5)")
    print(f"cr-route worst abs gap {worst['cr']:.3e} (limit 1e-12)")
    ok = (worst["identity"] < 1e-7 and worst["tanh"] < 1e-5
          and worst["sigmoid"] < 1e-5 and worst["cr"] < 1e-12)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_mzi_compile(args):
    out = _outdir(args)
    net = cnet.load_network(args.model)
    if not 0 <= args.layer < len(net.layers):
        print(f"model has {len(net.layers)} layers, no index {args.layer}")
        return EXIT_CONFIG
    w = net.layers[args.layer].weight
    if w.shape[0] != w.shape[1]:
        print(f"layer {args.layer} weight is {w.shape[0]}x{w.shape[1]}, not square")
        return EXIT_CONFIG
    u = photonic.project_to_unitary(w)
    mesh, phases = photonic.decompose_unitary(u)
    rebuilt = photonic.mesh_matrix(mesh) @ np.diag(phases)
    projection = float(np.linalg.norm(w - u))
    reconstruction = float(np.max(np.abs(rebuilt - u)))
    tag = f"{Path(args.model).stem}_layer{args.layer}"
    photonic.save_mesh(mesh, phases, out / f"mesh_{tag}.json")
    print(f"projection distance |W - U|_F = {projection:.6e}")
    print(f"mesh reconstruction error     = {reconstruction:.6e}")
    return EXIT_OK


def cmd_dump_operator(args):
    out = _outdir(args)
    op = photonic.diffraction_matrix(args.n, args.epsilon)
    defect = float(np.max(np.abs(
        op.matrix.conj().T @ op.matrix - np.eye(args.n)
    )))
    path = out / f"op_N{args.n}_e{args.epsilon:g}.csv"
    _write_operator_csv(path, op.matrix)
    print(f"wrote {path}; unitarity defect {defect:.3e}")
    return EXIT_OK


def _add_common(p, lr, epochs, init_width=cnet.DEFAULT_HALF_WIDTH):
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--init", default="separate",
                   choices=[k.value for k in cnet.InitKind])
    p.add_argument("--init-width", type=float, default=init_width)
    p.add_argument("--activation", default="tanh",
                   choices=[a.value for a in cnet.Activation])
    p.add_argument("--log-every", type=int, default=0)
    p.add_argument("--out", default="out")


def build_parser():
    parser = _Parser(prog="coherentnn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-phase-xor", help="learn the phase logical XOR pairs")
    _add_common(p, lr=0.1, epochs=500, init_width=1.0)
    p.add_argument("--widths", type=_parse_widths, default=[4, 4, 4])
    p.add_argument("--loss-floor", type=float, default=1e-2)
    p.set_defaults(func=cmd_train_phase_xor)

    p = sub.add_parser("train-real-xor",
                       help="intensity-mapped XOR, one curve per init scheme")
    _add_common(p, lr=0.5, epochs=2000)
    p.add_argument("--widths", type=_parse_widths, default=[4, 4, 4])
    p.add_argument("--converged-loss", type=float, default=1e-2)
    p.set_defaults(func=cmd_train_real_xor)

    p = sub.add_parser("train-diffractive",
                       help="learn a diffraction operator, then compile to masks")
    _add_common(p, lr=0.5, epochs=50, init_width=0.1)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--sample-kind", default="amplitude-phase",
                   choices=[k.value for k in tasks.SampleKind] + ["mixed"])
    p.add_argument("--train-count", type=int, default=200)
    p.add_argument("--test-count", type=int, default=20)
    p.set_defaults(func=cmd_train_diffractive)

    p = sub.add_parser("train-mnist", help="digit classification, desk scale")
    _add_common(p, lr=2.0, epochs=30)
    p.add_argument("--mnist-images", required=True)
    p.add_argument("--mnist-labels", required=True)
    p.add_argument("--limit", type=int, default=1000)
    p.add_argument("--hidden", type=int, default=32)
    p.set_defaults(func=cmd_train_mnist)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--debug-corrupt-sign", action="store_true",
                   help="negative control: flip gradient signs, must fail")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("mzi-compile",
                       help="project a learned square weight onto a mesh")
    p.add_argument("--model", required=True)
    p.add_argument("--layer", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_mzi_compile)

    p = sub.add_parser("dump-operator", help="write a diffraction operator CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_dump_operator)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_CONFIG
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        args.seed = _default_seed()
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CoherentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
