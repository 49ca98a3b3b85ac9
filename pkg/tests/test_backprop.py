import numpy as np
import pytest

import coherentnn as cn
from coherentnn.cnet import Activation, InitKind, InitScheme

from conftest import pole_guarded_net

SIG = Activation.SIGMOID
TANH = Activation.TANH
IDENT = Activation.IDENTITY


def scalar_net(w, act=IDENT):
    return cn.Network(layers=(cn.Layer(np.array([[w]], dtype=complex),
                                       np.zeros(1), act),))


class TestLoss:
    def test_zero_error(self):
        assert cn.loss(np.array([1 + 0j]), np.array([1 + 0j])) == 0.0

    def test_unit_complex_error(self):
        assert cn.loss(np.array([1 + 1j]), np.array([0j])) == pytest.approx(2.0)

    def test_against_elementwise_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            o = rng.normal(size=5) + 1j * rng.normal(size=5)
            t = rng.normal(size=5) + 1j * rng.normal(size=5)
            oracle = sum(abs(a - b) ** 2 for a, b in zip(o, t))
            assert abs(cn.loss(o, t) - oracle) < 1e-14

    def test_length_mismatch(self):
        with pytest.raises(cn.DimensionMismatch):
            cn.loss(np.ones(3, dtype=complex), np.ones(2, dtype=complex))


class TestBackward:
    def test_zero_error_gives_zero_gradients(self):
        net = scalar_net(1.0)
        x = np.array([1 + 0j])
        g = cn.backward(net, cn.forward(net, x), x)
        assert np.all(g.dw[0] == 0) and np.all(g.db[0] == 0)

    def test_unit_error_scalar_case(self):
        net = scalar_net(1.0)
        trace = cn.forward(net, np.array([1 + 0j]))
        g = cn.backward(net, trace, np.array([0j]))
        assert g.dw[0][0, 0] == pytest.approx(1.0 + 0j)
        assert g.db[0][0] == pytest.approx(1.0 + 0j)

    def test_finite_difference_two_layer_tanh(self):
        net, x, t = pole_guarded_net(TANH, seed=123)
        assert cn.grad_check(net, x, t, h=1e-6) < 1e-5

    def test_target_length_checked(self):
        net = scalar_net(1.0)
        trace = cn.forward(net, np.array([1 + 0j]))
        with pytest.raises(cn.DimensionMismatch):
            cn.backward(net, trace, np.ones(2, dtype=complex))


class TestGradCheck:
    def test_zero_at_optimum(self):
        net = scalar_net(1.0)
        x = np.array([1 + 2j])
        assert cn.grad_check(net, x, x) <= 1e-8

    def test_identity_net_is_exact(self):
        # quadratic loss: central differences carry no truncation error
        rng = np.random.default_rng(5)
        net = cn.init_network([4, 3, 2], IDENT,
                              InitScheme(InitKind.SEPARATE_UNIFORM, seed=11))
        x = rng.normal(size=4) + 1j * rng.normal(size=4)
        t = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert cn.grad_check(net, x, t) < 1e-7

    def test_tanh_net_on_phase_sample(self):
        net = cn.init_network([4, 4, 4], TANH,
                              InitScheme(InitKind.SEPARATE_UNIFORM, seed=7))
        pair = cn.phase_xor_dataset()[0]
        trace = cn.forward(net, pair.input)
        dmin = min(float(cn.pole_distance(TANH, z).min()) for z in trace.pre)
        assert dmin > 0.3  # sample stays away from poles for this seed
        assert cn.grad_check(net, pair.input, pair.target) < 1e-5

    def test_invalid_h(self):
        net = scalar_net(1.0)
        with pytest.raises(ValueError):
            cn.grad_check(net, np.array([1j]), np.array([0j]), h=0.0)


class TestCrVariant:
    def test_identity_bitwise_equal(self):
        rng = np.random.default_rng(8)
        net = cn.init_network([3, 3], IDENT,
                              InitScheme(InitKind.SEPARATE_UNIFORM, seed=3))
        x = rng.normal(size=3) + 1j * rng.normal(size=3)
        t = rng.normal(size=3) + 1j * rng.normal(size=3)
        trace = cn.forward(net, x)
        a = cn.backward(net, trace, t)
        b = cn.cr_variant_delta(net, trace, t)
        for ga, gb in zip(a.dw + a.db, b.dw + b.db):
            assert np.array_equal(ga, gb)

    @pytest.mark.parametrize("act", [TANH, SIG])
    def test_agreement_on_random_nets(self, act):
        rng = np.random.default_rng(9)
        for seed in range(10):
            net = cn.init_network(
                [4, 4, 3], act, InitScheme(InitKind.SEPARATE_UNIFORM, seed=seed)
            )
            x = rng.normal(size=4) + 1j * rng.normal(size=4)
            t = rng.normal(size=3) + 1j * rng.normal(size=3)
            trace = cn.forward(net, x)
            a = cn.backward(net, trace, t)
            b = cn.cr_variant_delta(net, trace, t)
            for ga, gb in zip(a.dw + a.db, b.dw + b.db):
                assert np.abs(ga - gb).max() < 1e-12


class TestSgdStep:
    def test_zero_gradient_is_identity(self):
        net = scalar_net(2.0)
        g = cn.Gradients(dw=(np.zeros((1, 1), dtype=complex),),
                         db=(np.zeros(1, dtype=complex),))
        stepped = cn.sgd_step(net, g, 0.1)
        assert np.array_equal(stepped.layers[0].weight, net.layers[0].weight)

    def test_zero_rate_is_identity(self):
        net = scalar_net(2.0)
        g = cn.Gradients(dw=(np.ones((1, 1), dtype=complex),),
                         db=(np.ones(1, dtype=complex),))
        stepped = cn.sgd_step(net, g, 0.0)
        assert np.array_equal(stepped.layers[0].weight, net.layers[0].weight)

    def test_scalar_arithmetic(self):
        net = scalar_net(2.0)
        g = cn.Gradients(dw=(np.array([[1.0 + 0j]]),), db=(np.zeros(1, dtype=complex),))
        assert cn.sgd_step(net, g, 0.1).layers[0].weight[0, 0] == pytest.approx(1.9)

    def test_shape_mismatch(self):
        net = scalar_net(2.0)
        g = cn.Gradients(dw=(np.ones((2, 2), dtype=complex),),
                         db=(np.zeros(1, dtype=complex),))
        with pytest.raises(cn.DimensionMismatch):
            cn.sgd_step(net, g, 0.1)

    def test_descent_contract(self):
        # small step along -grad must reduce the loss when grads are nonzero
        rng = np.random.default_rng(17)
        for seed in range(20):
            act = [TANH, SIG][seed % 2]
            net, x, t = pole_guarded_net(act, seed=1000 + seed)
            trace = cn.forward(net, x)
            before = cn.loss(trace.output, t)
            g = cn.backward(net, trace, t)
            if max(np.abs(a).max() for a in g.dw) < 1e-12:
                continue
            after_net = cn.sgd_step(net, g, 1e-4)
            after = cn.loss(cn.forward(after_net, x).output, t)
            assert after < before


class TestTrain:
    def test_already_optimal_curve_near_zero(self):
        net = scalar_net(1.0)
        samples = [(np.array([1 + 1j]), np.array([1 + 1j]))]
        cfg = cn.TrainConfig(learning_rate=0.1, epochs=10)
        _, curve = cn.train(net, samples, cfg)
        assert max(curve.losses) < 1e-20

    def test_convex_quadratic_descends_monotonically(self):
        rng = np.random.default_rng(2)
        net = cn.init_network([3, 3], IDENT,
                              InitScheme(InitKind.SEPARATE_UNIFORM, seed=6))
        w_true = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        samples = []
        for _ in range(6):
            x = rng.normal(size=3) + 1j * rng.normal(size=3)
            samples.append((x, w_true @ x))
        cfg = cn.TrainConfig(learning_rate=0.05, epochs=200)
        _, curve = cn.train(net, samples, cfg)
        diffs = np.diff(curve.losses)
        assert np.all(diffs < 0)

    def test_phase_xor_converges_with_tanh(self):
        acts = [TANH, IDENT]
        net = cn.init_network([4, 4, 4], acts,
                              InitScheme(InitKind.SEPARATE_UNIFORM, half_width=1.0, seed=1))
        cfg = cn.TrainConfig(learning_rate=0.1, epochs=500, loss_floor=1e-2)
        _, curve = cn.train(net, cn.phase_xor_dataset(), cfg)
        assert curve.final_loss < 1e-2
        assert len(curve) <= 500

    def test_loss_floor_stops_early(self):
        net = scalar_net(2.0)
        samples = [(np.array([1 + 0j]), np.array([0j]))]
        cfg = cn.TrainConfig(learning_rate=0.2, epochs=500, loss_floor=1e-6)
        _, curve = cn.train(net, samples, cfg)
        assert len(curve) < 500
        assert curve.final_loss <= 1e-6

    def test_divergence_raises_nonfinite(self):
        net = scalar_net(1.0)
        samples = [(np.array([1 + 0j]), np.array([0j]))]
        cfg = cn.TrainConfig(learning_rate=1e9, epochs=200)
        with pytest.raises(cn.NonFiniteLoss):
            cn.train(net, samples, cfg)

    def test_mingled_real_and_complex_samples(self):
        samples = cn.real_xor_dataset() + cn.phase_xor_dataset()
        net = cn.init_network([4, 4, 4], [TANH, IDENT],
                              InitScheme(InitKind.SEPARATE_UNIFORM, seed=0))
        cfg = cn.TrainConfig(learning_rate=0.2, epochs=200)
        _, curve = cn.train(net, samples, cfg)
        assert curve.final_loss < curve.losses[0]

    def test_deterministic_for_fixed_inputs(self):
        cfg = cn.TrainConfig(learning_rate=0.1, epochs=50)
        runs = []
        for _ in range(2):
            net = cn.init_network([4, 4, 4], [TANH, IDENT],
                                  InitScheme(InitKind.SEPARATE_UNIFORM, seed=3))
            _, curve = cn.train(net, cn.phase_xor_dataset(), cfg)
            runs.append(curve.losses)
        assert runs[0] == runs[1]

    def test_curve_csv_export(self, tmp_path):
        net = scalar_net(2.0)
        samples = [(np.array([1 + 0j]), np.array([0j]))]
        cfg = cn.TrainConfig(learning_rate=0.1, epochs=5)
        _, curve = cn.train(net, samples, cfg)
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "epoch,loss,seconds"
        assert len(lines) == 6
        epoch, loss_str, secs = lines[1].split(",")
        assert int(epoch) == 1 and float(loss_str) >= 0 and float(secs) >= 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            cn.TrainConfig(learning_rate=0.1, epochs=0)
        with pytest.raises(ValueError):
            cn.TrainConfig(learning_rate=-1.0, epochs=5)
