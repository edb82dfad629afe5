import math

import numpy as np
import pytest

from discrimloss.models import (
    CrossEntropy,
    L2,
    LinearRegressor,
    LinearSoftmax,
    Mlp,
    SmoothL1,
    softmax,
)


def fd_param_gradient(model, inner_loss, x, target, step=1e-6):
    """Central differences of the composed scalar loss over the flat params.

    Uses only the forward/loss-value path, independent of model.backward.
    """
    grad = np.empty_like(model.params)
    for i in range(model.params.size):
        h = step * max(1.0, abs(model.params[i]))
        orig = model.params[i]
        model.params[i] = orig + h
        up, _ = inner_loss.loss_and_grad(model.forward(x), target)
        model.params[i] = orig - h
        down, _ = inner_loss.loss_and_grad(model.forward(x), target)
        model.params[i] = orig
        grad[i] = (up - down) / (2 * h)
    return grad


def analytic_param_gradient(model, inner_loss, x, target):
    _, g = inner_loss.loss_and_grad(model.forward(x), target)
    return model.backward(x, g)


def pairs():
    return [
        ("linear_softmax+ce", lambda s: LinearSoftmax(5, 3, seed=s), CrossEntropy(), "class", 3),
        ("mlp+ce", lambda s: Mlp(5, [7, 4], 3, seed=s), CrossEntropy(), "class", 3),
        ("linear_regressor+l2", lambda s: LinearRegressor(4, seed=s), L2(), "reg", None),
        ("linear_regressor+smooth_l1", lambda s: LinearRegressor(4, seed=s), SmoothL1(), "reg", None),
        ("mlp+l2", lambda s: Mlp(4, [6], 1, seed=s), L2(), "reg", None),
        ("mlp+smooth_l1", lambda s: Mlp(4, [6], 1, seed=s), SmoothL1(), "reg", None),
    ]


class TestForward:
    def test_zero_params_give_zero_logits(self):
        model = LinearSoftmax(3, 4, seed=0)
        model.params[:] = 0.0
        assert np.all(model.forward(np.array([2.0, -1.0, 5.0])) == 0.0)

    def test_linear_regressor_dot_product(self):
        model = LinearRegressor(2, seed=0)
        model.params[:] = [1.0, 2.0, 0.0]
        assert model.forward(np.array([3.0, 4.0])) == pytest.approx(11.0)

    def test_mlp_zero_output_weights_yield_bias(self):
        model = Mlp(3, [5], 2, seed=1)
        # zero the last layer's weights, set its bias
        w_out = 5 * 2
        model.params[-(w_out + 2):-2] = 0.0
        model.params[-2:] = [0.25, -0.5]
        out = model.forward(np.array([0.3, -0.7, 1.1]))
        assert out == pytest.approx([0.25, -0.5])

    def test_batch_and_single_agree(self):
        model = Mlp(4, [6], 3, seed=2)
        X = np.random.default_rng(0).standard_normal((5, 4))
        batch = model.forward(X)
        for i in range(5):
            assert model.forward(X[i]) == pytest.approx(batch[i], rel=1e-15)

    def test_dimension_mismatch_rejected(self):
        model = LinearSoftmax(3, 4, seed=0)
        with pytest.raises(ValueError):
            model.forward(np.zeros(5))

    def test_param_count_is_pure_function_of_architecture(self):
        assert LinearSoftmax(7, 3, seed=1).n_params == LinearSoftmax(7, 3, seed=9).n_params == 7 * 3 + 3
        assert LinearRegressor(7).n_params == 8
        m = Mlp(4, [6, 5], 3, seed=0)
        assert m.n_params == (4 * 6 + 6) + (6 * 5 + 5) + (5 * 3 + 3) == m.params.size

    def test_deterministic_init(self):
        a, b = Mlp(4, [6], 2, seed=11), Mlp(4, [6], 2, seed=11)
        assert np.array_equal(a.params, b.params)


class TestInnerLosses:
    def test_cross_entropy_uniform_logits(self):
        loss, _ = CrossEntropy().loss_and_grad(np.zeros(10), 3)
        assert loss == pytest.approx(math.log(10.0), rel=1e-12)

    def test_cross_entropy_grad_is_softmax_minus_onehot(self):
        logits = np.array([0.2, -1.0, 3.0])
        _, g = CrossEntropy().loss_and_grad(logits, 2)
        p = softmax(logits)
        expected = p.copy()
        expected[2] -= 1.0
        assert g == pytest.approx(expected, rel=1e-12)

    def test_cross_entropy_rejects_bad_class(self):
        with pytest.raises(ValueError):
            CrossEntropy().loss_and_grad(np.zeros(4), 4)
        with pytest.raises(ValueError):
            CrossEntropy().loss_and_grad(np.zeros(4), -1)

    def test_cross_entropy_stable_on_huge_logits(self):
        loss, g = CrossEntropy().loss_and_grad(np.array([1e4, 0.0, -1e4]), 0)
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(g))

    def test_softmax_rows_sum_to_one(self):
        Z = np.random.default_rng(1).standard_normal((50, 7)) * 30
        P = softmax(Z)
        assert np.abs(P.sum(axis=1) - 1.0).max() < 1e-12
        assert np.all(P >= 0)

    def test_l2_value_and_grad(self):
        loss, grad = L2().loss_and_grad(3.0, 1.0)
        assert loss == pytest.approx(4.0)
        assert grad == pytest.approx(4.0)

    def test_smooth_l1_piecewise_values(self):
        sl = SmoothL1(beta=1.0)
        loss_in, _ = sl.loss_and_grad(0.5, 0.0)
        loss_out, _ = sl.loss_and_grad(2.0, 0.0)
        assert loss_in == pytest.approx(0.125)
        assert loss_out == pytest.approx(1.5)

    def test_smooth_l1_continuous_and_c1_at_beta(self):
        for beta in (0.5, 1.0, 2.5):
            sl = SmoothL1(beta=beta)
            eps = 1e-9
            lo, glo = sl.loss_and_grad(beta - eps, 0.0)
            hi, ghi = sl.loss_and_grad(beta + eps, 0.0)
            assert hi - lo == pytest.approx(0.0, abs=1e-8)
            assert ghi - glo == pytest.approx(0.0, abs=1e-8)

    def test_losses_nonnegative(self):
        rng = np.random.default_rng(3)
        preds = rng.standard_normal(200) * 5
        targets = rng.standard_normal(200) * 5
        for loss in (L2(), SmoothL1(0.7)):
            values, _ = loss.loss_and_grad(preds, targets)
            assert np.all(values >= 0)
        Z = rng.standard_normal((100, 6)) * 4
        y = rng.integers(0, 6, 100)
        ce, _ = CrossEntropy().loss_and_grad(Z, y)
        assert np.all(ce >= 0)

    def test_cross_entropy_zero_only_in_one_hot_limit(self):
        # a finite-logit prediction always leaves positive loss
        loss, _ = CrossEntropy().loss_and_grad(np.array([30.0, 0.0]), 0)
        assert loss > 0
        loss_limit, _ = CrossEntropy().loss_and_grad(np.array([1e9, 0.0]), 0)
        assert loss_limit == 0.0


class TestBackward:
    @pytest.mark.parametrize("name,make,loss,task,n_classes", pairs())
    def test_matches_finite_differences(self, name, make, loss, task, n_classes):
        rng = np.random.default_rng(hash(name) % 2**32)
        model = make(5)
        d = model.d_in
        worst = 0.0
        for _ in range(20):
            x = rng.standard_normal(d)
            target = int(rng.integers(0, n_classes)) if task == "class" else float(rng.standard_normal())
            an = analytic_param_gradient(model, loss, x, target)
            fd = fd_param_gradient(model, loss, x, target)
            denom = max(np.abs(fd).max(), 1e-8)
            worst = max(worst, np.abs(an - fd).max() / denom)
        assert worst < 1e-4

    def test_zero_upstream_gives_zero_gradient(self):
        model = Mlp(4, [6], 3, seed=0)
        x = np.ones(4)
        g = model.backward(x, np.zeros(3))
        assert np.all(g == 0.0)

    def test_one_hot_limit_kills_gradient(self):
        model = LinearSoftmax(2, 3, seed=0)
        # drive the correct class logit far above the others
        model.params[:] = 0.0
        W, b = model._views()
        b[0] = 50.0
        x = np.array([0.5, -0.5])
        grad = analytic_param_gradient(model, CrossEntropy(), x, 0)
        assert np.linalg.norm(grad) < 1e-15

    def test_batch_backward_sums_per_sample(self):
        model = LinearSoftmax(3, 4, seed=5)
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 3))
        G = rng.standard_normal((6, 4))
        total = model.backward(X, G)
        parts = sum(model.backward(X[i], G[i]) for i in range(6))
        assert total == pytest.approx(parts, rel=1e-12)

    def test_upstream_shape_mismatch_rejected(self):
        model = LinearSoftmax(3, 4, seed=0)
        with pytest.raises(ValueError):
            model.backward(np.zeros((2, 3)), np.zeros((2, 3)))
