"""Tests for the hat-activation MLP, its exact gradients, and AdamW."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgvarmion.errors import InvalidArgumentError
from pgvarmion.network import AdamW, Mlp, cutoff, hat, hat_derivative

KINKS = np.array([0.0, 1.0, 2.0])


def scalar_loss(net, x, cot):
    return float(np.sum(cot * net.forward(x)))


def fd_gradient(net, x, cot, h=1e-6):
    """Central-difference gradient of scalar_loss in parameters() order."""
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            lp = scalar_loss(net, x, cot)
            p[idx] = orig - h
            lm = scalar_loss(net, x, cot)
            p[idx] = orig
            g[idx] = (lp - lm) / (2.0 * h)
        grads.append(g)
    return grads


def kink_free_input(net, rng, batch=3):
    """Batch whose hidden pre-activations all sit >= 1e-3 from hat kinks."""
    for _ in range(500):
        x = rng.uniform(0.05, 0.95, (batch, net.n_inputs))
        cache = {}
        net.forward(x, cache=cache)
        if all(np.abs(z[..., None] - KINKS).min() >= 1e-3
               for z in cache["pre"]):
            return x
    raise AssertionError("no kink-free batch found")


def max_relative_gap(analytic, numeric):
    scale = max(max(np.abs(g).max() for g in numeric), 1e-10)
    return max(np.abs(a - f).max() for a, f in zip(analytic, numeric)) / scale


class TestHat:
    def test_reference_values(self):
        z = np.array([0.0, 1.0, 2.0, 0.5, 1.5, 3.0, -1.0])
        expected = np.array([0.0, 1.0, 0.0, 0.5, 0.5, 0.0, 0.0])
        assert np.array_equal(hat(z), expected)

    def test_derivative_convention(self):
        z = np.array([-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5])
        expected = np.array([0.0, 0.0, 1.0, 1.0, -1.0, -1.0, 0.0])
        assert np.array_equal(hat_derivative(z), expected)

    def test_derivative_matches_fd_off_kinks(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(-1.0, 3.0, 400)
        z = z[np.abs(z[:, None] - KINKS).min(axis=1) > 1e-3]
        h = 1e-7
        fd = (hat(z + h) - hat(z - h)) / (2.0 * h)
        np.testing.assert_allclose(hat_derivative(z), fd, atol=1e-9)

    @given(st.floats(-10.0, 10.0))
    def test_range(self, z):
        assert 0.0 <= hat(z) <= 1.0


class TestCutoff:
    def test_endpoint_value(self):
        for p in (1.0, 5.0, 40.0):
            expected = 2.0 / (1.0 - np.exp(p))
            assert cutoff(np.array([0.0]), p)[0] == pytest.approx(expected, rel=1e-12)
            assert cutoff(np.array([1.0]), p)[0] == pytest.approx(expected, rel=1e-12)

    def test_center_value(self):
        p = 10.0
        expected = 1.0 - 2.0 * np.exp(p / 2.0) / (np.exp(p) - 1.0)
        assert cutoff(np.array([0.5]), p)[0] == pytest.approx(expected, rel=1e-14)

    def test_no_overflow_at_large_p(self):
        g = cutoff(np.linspace(0.0, 1.0, 101), 1e4)
        assert np.all(np.isfinite(g))
        assert abs(g[0]) < 1e-300
        assert g[50] == pytest.approx(1.0, abs=1e-12)

    def test_2d_is_coordinate_product(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(0.0, 1.0, (50, 2))
        p = 8.0
        got = cutoff(pts, p)
        want = cutoff(pts[:, 0], p) * cutoff(pts[:, 1], p)
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_rejects_small_exponent(self):
        with pytest.raises(InvalidArgumentError):
            cutoff(np.array([0.5]), 0.5)

    @given(st.floats(1.0, 200.0), st.floats(0.0, 1.0))
    @settings(max_examples=200)
    def test_bounded_and_symmetric(self, p, x):
        gx = cutoff(np.array([x]), p)[0]
        gr = cutoff(np.array([1.0 - x]), p)[0]
        assert gx <= 1.0
        assert gx >= 2.0 / (1.0 - np.exp(min(p, 700.0))) - 1e-15
        assert gx == pytest.approx(gr, abs=1e-13)


class TestMlpStructure:
    def test_parameter_counts(self):
        assert Mlp([1, 10, 20, 30, 10]).n_parameters == 1180
        assert Mlp([1, 10, 20, 30, 40, 30, 15]).n_parameters == 3805
        assert Mlp([2, 50, 100, 100], final_bias=False).n_parameters == 15250

    def test_final_bias_slot_is_absent(self):
        net = Mlp([2, 4, 3], final_bias=False)
        assert net.biases[-1] is None
        assert len(net.parameters()) == 3

    def test_init_distribution_fan_in_bound(self):
        net = Mlp([20, 30, 5], seed=11)
        w0 = net.weights[0]
        bound = 1.0 / np.sqrt(20)
        assert np.abs(w0).max() <= bound
        assert np.abs(w0).max() > 0.8 * bound
        assert abs(w0.mean()) < 0.1 * bound

    def test_same_seed_is_bit_identical(self):
        a, b = Mlp([1, 10, 20, 5], seed=42), Mlp([1, 10, 20, 5], seed=42)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert np.array_equal(pa, pb)

    def test_different_seeds_differ(self):
        a, b = Mlp([1, 8, 4], seed=1), Mlp([1, 8, 4], seed=2)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_forward_shape_and_1d_input(self):
        net = Mlp([1, 6, 4])
        x = np.linspace(0.1, 0.9, 7)
        out = net.forward(x)
        assert out.shape == (7, 4)
        np.testing.assert_array_equal(out, net.forward(x[:, None]))

    def test_input_validation(self):
        net = Mlp([2, 4, 3])
        with pytest.raises(InvalidArgumentError):
            net.forward(np.zeros((5, 3)))
        with pytest.raises(InvalidArgumentError):
            net.forward(np.array([[0.1, np.nan]]))
        with pytest.raises(InvalidArgumentError):
            Mlp([1])
        with pytest.raises(InvalidArgumentError):
            Mlp([1, 5, 2], cutoff_p=0.2)

    def test_boundary_outputs_vanish_with_cutoff(self):
        for p, tol in ((100.0, 1e-8), (400.0, 1e-8), (12.0, None)):
            net = Mlp([1, 10, 8], cutoff_p=p, seed=5)
            out = net.forward(np.array([0.0, 1.0]))
            bound = 2.0 * np.exp(-p / 2.0) + 1e-12
            assert np.abs(out).max() <= bound
            if tol is not None:
                assert np.abs(out).max() <= tol

    def test_boundary_outputs_vanish_2d(self):
        net = Mlp([2, 8, 6], cutoff_p=100.0, final_bias=False, seed=9)
        t = np.linspace(0.0, 1.0, 9)
        edges = np.vstack([
            np.column_stack([t, np.zeros_like(t)]),
            np.column_stack([t, np.ones_like(t)]),
            np.column_stack([np.zeros_like(t), t]),
            np.column_stack([np.ones_like(t), t]),
        ])
        assert np.abs(net.forward(edges)).max() <= 1e-8


class TestBackward:
    def test_gradcheck_small_net(self):
        rng = np.random.default_rng(0)
        net = Mlp([1, 5, 3], seed=31)
        x = kink_free_input(net, rng)
        cot = rng.standard_normal((x.shape[0], 3))
        cache = {}
        net.forward(x, cache=cache)
        analytic = net.backward(cache, cot)
        numeric = fd_gradient(net, x, cot, h=1e-6)
        assert max_relative_gap(analytic, numeric) <= 1e-6

    def test_gradcheck_random_nets(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for trial in range(20):
            depth = int(rng.integers(1, 4))
            dims = [int(rng.integers(1, 3))] \
                + [int(rng.integers(3, 9)) for _ in range(depth)] \
                + [int(rng.integers(2, 7))]
            p = [None, 2.0, 5.0, 30.0][trial % 4]
            net = Mlp(dims, cutoff_p=p,
                      final_bias=bool(rng.integers(0, 2)),
                      seed=int(rng.integers(0, 10_000)))
            x = kink_free_input(net, rng)
            cot = rng.standard_normal((x.shape[0], net.n_outputs))
            cache = {}
            net.forward(x, cache=cache)
            gap = max_relative_gap(net.backward(cache, cot),
                                   fd_gradient(net, x, cot))
            worst = max(worst, gap)
        assert worst <= 1e-6

    def test_gradcheck_2d_cutoff_no_final_bias(self):
        rng = np.random.default_rng(5)
        net = Mlp([2, 4, 5, 3], cutoff_p=3.0, final_bias=False, seed=17)
        x = kink_free_input(net, rng)
        cot = rng.standard_normal((x.shape[0], 3))
        cache = {}
        net.forward(x, cache=cache)
        gap = max_relative_gap(net.backward(cache, cot),
                               fd_gradient(net, x, cot))
        assert gap <= 1e-6

    def test_zero_cotangent_gives_zero_gradient(self):
        net = Mlp([1, 6, 4], cutoff_p=10.0, seed=3)
        x = np.linspace(0.1, 0.9, 5)
        cache = {}
        net.forward(x, cache=cache)
        grads = net.backward(cache, np.zeros((5, 4)))
        assert all(np.all(g == 0.0) for g in grads)

    def test_cotangent_linearity(self):
        rng = np.random.default_rng(8)
        net = Mlp([1, 7, 4], seed=13)
        x = rng.uniform(0.1, 0.9, (6, 1))
        cache = {}
        net.forward(x, cache=cache)
        c1 = rng.standard_normal((6, 4))
        c2 = rng.standard_normal((6, 4))
        a, b = 0.7, -1.3
        combined = net.backward(cache, a * c1 + b * c2)
        parts = [a * g1 + b * g2
                 for g1, g2 in zip(net.backward(cache, c1),
                                   net.backward(cache, c2))]
        for gc, gp in zip(combined, parts):
            np.testing.assert_allclose(gc, gp, atol=1e-12)

    def test_cotangent_shape_validated(self):
        net = Mlp([1, 5, 3])
        cache = {}
        net.forward(np.linspace(0.1, 0.9, 4), cache=cache)
        with pytest.raises(InvalidArgumentError):
            net.backward(cache, np.zeros((4, 2)))


class TestAdamW:
    def test_first_step_direction(self):
        net = Mlp([1, 4, 2], seed=1)
        opt = AdamW()
        params = net.parameters()
        before = [p.copy() for p in params]
        rng = np.random.default_rng(6)
        grads = [rng.standard_normal(p.shape) for p in params]
        opt.step(params, grads, epoch=0)
        lr = 1e-3
        for p, p0, g in zip(params, before, grads):
            expected = p0 - lr * g / (np.abs(g) + 1e-8)
            np.testing.assert_allclose(p, expected, rtol=1e-12, atol=1e-16)

    def test_zero_gradient_leaves_params_unchanged(self):
        net = Mlp([1, 4, 2], seed=1)
        params = net.parameters()
        before = [p.copy() for p in params]
        opt = AdamW()
        zeros = [np.zeros_like(p) for p in params]
        for epoch in range(5):
            opt.step(params, zeros, epoch)
        for p, p0 in zip(params, before):
            assert np.array_equal(p, p0)

    def test_learning_rate_schedule(self):
        opt = AdamW()
        assert opt.learning_rate(0) == 1e-3
        assert opt.learning_rate(99) == 1e-3
        assert opt.learning_rate(100) == pytest.approx(7.5e-4, rel=1e-15)
        assert opt.learning_rate(250) == pytest.approx(5.625e-4, rel=1e-15)
        assert opt.learning_rate(1999) == pytest.approx(1e-3 * 0.75 ** 19, rel=1e-14)

    def test_updates_are_in_place_and_change_forward(self):
        net = Mlp([1, 5, 3], seed=2)
        x = np.linspace(0.1, 0.9, 4)
        out0 = net.forward(x).copy()
        cache = {}
        net.forward(x, cache=cache)
        grads = net.backward(cache, np.ones((4, 3)))
        AdamW().step(net.parameters(), grads, epoch=0)
        assert not np.allclose(net.forward(x), out0)

    def test_deterministic_trajectory(self):
        def run():
            net = Mlp([1, 6, 3], seed=77)
            opt = AdamW()
            x = np.linspace(0.05, 0.95, 8)
            target = np.sin(np.pi * x)[:, None] * np.ones((1, 3))
            for epoch in range(30):
                cache = {}
                out = net.forward(x, cache=cache)
                grads = net.backward(cache, 2.0 * (out - target))
                opt.step(net.parameters(), grads, epoch)
            return [p.copy() for p in net.parameters()]

        a, b = run(), run()
        for pa, pb in zip(a, b):
            assert np.array_equal(pa, pb)

    def test_shape_mismatch_rejected(self):
        net = Mlp([1, 4, 2])
        opt = AdamW()
        grads = [np.zeros_like(p) for p in net.parameters()]
        with pytest.raises(InvalidArgumentError):
            opt.step(net.parameters(), grads[:-1], epoch=0)

    def test_weight_decay_shrinks_params(self):
        p = np.array([1.0, -2.0])
        opt = AdamW(weight_decay=0.1)
        opt.step([p], [np.zeros(2)], epoch=0)
        np.testing.assert_allclose(p, [1.0 - 1e-4, -2.0 + 2e-4], rtol=1e-12)


class TestTrainingSmoke:
    def test_loss_decreases_on_small_regression(self):
        net = Mlp([1, 10, 1], cutoff_p=10.0, seed=4)
        opt = AdamW()
        x = np.linspace(0.0, 1.0, 40)
        target = (np.sin(np.pi * x) * 0.5)[:, None]

        def loss_and_grads():
            cache = {}
            out = net.forward(x, cache=cache)
            resid = out - target
            return float(np.mean(resid ** 2)), net.backward(
                cache, 2.0 * resid / resid.size)

        first, _ = loss_and_grads()
        for epoch in range(400):
            _, grads = loss_and_grads()
            opt.step(net.parameters(), grads, epoch)
        last, _ = loss_and_grads()
        assert last < 0.05 * first
