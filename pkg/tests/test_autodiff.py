"""
Tests for the reverse-mode tape

Covers:
1. Leaf binding and shapes
2. Per-op gradients against central differences
3. External VJP injection (single sample and column batch)
4. Hand-computed op values
5. Bitwise-repeatable backward passes, including after reset()
6. Contract errors (non-scalar root, live gradients, shape mismatch)

Run with: pytest tests/test_autodiff.py -v
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from autodiff import (
    Tape,
    add,
    affine,
    backward,
    column_weighted_mse,
    inject_external_vjp,
    mse,
    numerical_gradient,
    relative_error,
    relu,
    scale,
    sigmoid,
    total,
)
from infrastructure.errors import ContractError, DimensionError, NumericError


def _rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


# =============================================================================
# Leaves
# =============================================================================

class TestLeaves:
    """Leaf creation and parameter binding"""

    def test_vectors_become_columns(self):
        tape = Tape()
        v = tape.constant([1.0, 2.0, 3.0])
        assert v.shape == (3, 1)
        s = tape.constant(4.0)
        assert s.shape == (1, 1)
        print("✅ 1-D input is a column, scalars are 1x1")

    def test_rank3_rejected(self):
        with pytest.raises(DimensionError):
            Tape().constant(np.zeros((2, 2, 2)))

    def test_param_bound_once(self):
        tape = Tape()
        W = np.ones((2, 2))
        assert tape.param(W) is tape.param(W)
        assert len(tape) == 1

    def test_shared_param_accumulates(self):
        """y = sum(W·x) + sum(W·x) gives twice the single-use gradient"""
        W = _rng().normal(size=(2, 3))
        x = _rng(1).normal(size=(3, 1))
        b = np.zeros((2, 1))

        tape = Tape()
        first = total(tape, affine(tape, tape.param(W), tape.constant(x), tape.param(b)))
        second = total(tape, affine(tape, tape.param(W), tape.constant(x), tape.param(b)))
        backward(tape, add(tape, first, second))

        expected = 2.0 * np.repeat(x.T, 2, axis=0)
        assert np.allclose(tape.grad_of(W), expected)
        assert np.allclose(tape.grad_of(b), 2.0)
        print("✅ Shared parameter receives one accumulated gradient")

    def test_unbound_array_has_zero_gradient(self):
        tape = Tape()
        assert np.all(tape.grad_of(np.ones((2, 2))) == 0.0)

    def test_item_requires_scalar(self):
        with pytest.raises(ContractError):
            Tape().constant(np.ones((2, 1))).item()


# =============================================================================
# Op gradients
# =============================================================================

class TestOpGradients:
    """Analytic VJPs agree with central differences"""

    def _check(self, build, x: np.ndarray, tol: float = 1e-6):
        def objective(point: np.ndarray) -> float:
            tape = Tape()
            return build(tape, tape.variable(point)).item()

        tape = Tape()
        leaf = tape.variable(x)
        root = build(tape, leaf)
        backward(tape, root)
        numeric = numerical_gradient(objective, x.copy())
        err = relative_error(leaf.gradient, numeric)
        assert err < tol, f"relative error {err:.3e}"

    def test_affine(self):
        W = _rng(2).normal(size=(4, 3))
        b = _rng(3).normal(size=(4, 1))

        def build(tape, x):
            return total(tape, affine(tape, tape.constant(W), x, tape.constant(b)))

        self._check(build, _rng(4).normal(size=(3, 5)))

    def test_affine_weights(self):
        x = _rng(5).normal(size=(3, 2))
        b = _rng(6).normal(size=(4, 1))
        target = _rng(7).normal(size=(4, 2))

        def build(tape, W):
            out = affine(tape, W, tape.constant(x), tape.constant(b))
            return mse(tape, out, tape.constant(target))

        self._check(build, _rng(8).normal(size=(4, 3)))

    def test_relu_away_from_kink(self):
        x = np.array([[-1.5, 0.7], [2.0, -0.3]])
        target = np.ones((2, 2))

        def build(tape, v):
            return mse(tape, relu(tape, v), tape.constant(target))

        self._check(build, x)

    def test_relu_subgradient_zero_at_zero(self):
        tape = Tape()
        x = tape.variable(np.zeros((2, 1)))
        backward(tape, total(tape, relu(tape, x)))
        assert np.all(x.gradient == 0.0)

    def test_sigmoid(self):
        def build(tape, v):
            return total(tape, sigmoid(tape, v))

        self._check(build, _rng(9).normal(size=(3, 2)))

    def test_sigmoid_saturates_without_overflow(self):
        tape = Tape()
        out = sigmoid(tape, tape.constant(np.array([[-800.0], [800.0]])))
        assert np.all(np.isfinite(out.data))
        assert out.data[0, 0] == pytest.approx(0.0)
        assert out.data[1, 0] == pytest.approx(1.0)

    def test_column_weighted_mse(self):
        target = _rng(10).normal(size=(3, 4))
        weights = [0.2, 1.0, 0.0, 0.5]

        def build(tape, v):
            return column_weighted_mse(tape, v, tape.constant(target), weights)

        self._check(build, _rng(11).normal(size=(3, 4)))

    def test_column_weighted_mse_value(self):
        tape = Tape()
        a = tape.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
        b = tape.constant(np.zeros((2, 2)))
        value = column_weighted_mse(tape, a, b, [1.0, 0.5]).item()
        # columns: mean(1, 9) = 5, mean(4, 16) = 10
        assert value == pytest.approx((1.0 * 5.0 + 0.5 * 10.0) / 2.0)

    def test_scale_by_column(self):
        factor = np.array([1.0, 2.0, 3.0])

        def build(tape, v):
            return total(tape, scale(tape, v, factor))

        self._check(build, _rng(12).normal(size=(3, 2)))

    def test_mse_both_arguments(self):
        other = _rng(13).normal(size=(4, 3))

        def left(tape, v):
            return mse(tape, v, tape.constant(other))

        def right(tape, v):
            return mse(tape, tape.constant(other), v)

        point = _rng(14).normal(size=(4, 3))
        self._check(left, point)
        self._check(right, point)


# =============================================================================
# External VJP
# =============================================================================

class TestExternalVjp:
    """Jacobians computed outside the tape"""

    def test_single_sample(self):
        J = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 3.0]])
        tape = Tape()
        x = tape.variable(np.array([0.1, 0.2, 0.3]))
        y = inject_external_vjp(tape, x, J @ x.data, J)
        backward(tape, total(tape, y))
        assert np.allclose(x.gradient[:, 0], J.sum(axis=0))
        print("✅ dL/dx = Jᵀ·dL/dy")

    def test_column_batch(self):
        rng = _rng(13)
        J = rng.normal(size=(4, 5, 3))
        x = rng.normal(size=(3, 4))
        out = np.einsum("bpk,kb->pb", J, x)
        target = rng.normal(size=(5, 4))

        def objective(point: np.ndarray) -> float:
            t = Tape()
            leaf = t.variable(point)
            y = inject_external_vjp(t, leaf, np.einsum("bpk,kb->pb", J, point), J)
            return mse(t, y, t.constant(target)).item()

        tape = Tape()
        leaf = tape.variable(x)
        backward(tape, mse(tape, inject_external_vjp(tape, leaf, out, J), tape.constant(target)))
        numeric = numerical_gradient(objective, x.copy())
        assert relative_error(leaf.gradient, numeric) < 1e-6

    def test_shape_mismatch(self):
        tape = Tape()
        x = tape.variable(np.zeros(3))
        with pytest.raises(DimensionError):
            inject_external_vjp(tape, x, np.zeros(2), np.zeros((2, 4)))

    def test_non_finite_jacobian(self):
        tape = Tape()
        x = tape.variable(np.zeros(2))
        with pytest.raises(NumericError):
            inject_external_vjp(tape, x, np.zeros(1), np.array([[np.nan, 0.0]]))


# =============================================================================
# Reference values
# =============================================================================

class TestReferenceValues:
    """Hand-computed values of each op"""

    def test_affine_value(self):
        tape = Tape()
        W = tape.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
        out = affine(tape, W, tape.constant([1.0, 1.0]), tape.constant([1.0, 0.0]))
        assert out.data.ravel().tolist() == [4.0, 7.0]

    def test_mse_value(self):
        tape = Tape()
        assert mse(tape, tape.constant([1.0, 3.0]), tape.constant([0.0, 1.0])).item() == 2.5

    def test_relu_value_and_gradient(self):
        tape = Tape()
        assert relu(tape, tape.constant([-1.0, 0.0, 2.0])).data.ravel().tolist() == [0.0, 0.0, 2.0]

        tape = Tape()
        x = tape.variable([-1.0, 2.0])
        backward(tape, total(tape, relu(tape, x)))
        assert x.gradient.ravel().tolist() == [0.0, 1.0]

    def test_sigmoid_slope_at_zero(self):
        tape = Tape()
        x = tape.variable([0.0])
        out = sigmoid(tape, x)
        backward(tape, total(tape, out))
        assert out.item() == 0.5
        assert x.gradient[0, 0] == 0.25


# =============================================================================
# Determinism
# =============================================================================

def _two_layer_loss(tape: Tape, W1, b1, W2, b2, x, target):
    hidden = relu(tape, affine(tape, tape.param(W1), tape.constant(x), tape.param(b1)))
    out = sigmoid(tape, affine(tape, tape.param(W2), hidden, tape.param(b2)))
    return mse(tape, out, tape.constant(target))


class TestDeterminism:

    def setup_method(self):
        rng = _rng(21)
        self.arrays = [rng.normal(size=(6, 4)), rng.normal(size=(6, 1)),
                       rng.normal(size=(3, 6)), rng.normal(size=(3, 1))]
        self.x = rng.normal(size=(4, 5))
        self.target = rng.random((3, 5))

    def _gradients(self, tape: Tape):
        return [tape.grad_of(a).copy() for a in self.arrays]

    def test_backward_bitwise_repeatable(self):
        runs = []
        for _ in range(3):
            tape = Tape()
            backward(tape, _two_layer_loss(tape, *self.arrays, self.x, self.target))
            runs.append(self._gradients(tape))
        for grads in runs[1:]:
            assert all(np.array_equal(a, b) for a, b in zip(runs[0], grads))

    def test_reset_reproduces_gradients(self):
        tape = Tape()
        root = _two_layer_loss(tape, *self.arrays, self.x, self.target)
        backward(tape, root)
        first = self._gradients(tape)
        assert any(np.any(g != 0.0) for g in first)

        tape.reset()
        backward(tape, root)
        assert all(np.array_equal(a, b) for a, b in zip(first, self._gradients(tape)))
        print("✅ reset() + backward() reproduces gradients bit for bit")


# =============================================================================
# Backward contract
# =============================================================================

class TestBackwardContract:

    def test_non_scalar_root(self):
        tape = Tape()
        x = tape.variable(np.ones((2, 1)))
        with pytest.raises(ContractError):
            backward(tape, x)

    def test_second_backward_needs_reset(self):
        tape = Tape()
        x = tape.variable(np.ones((2, 1)))
        root = total(tape, x)
        backward(tape, root)
        with pytest.raises(ContractError):
            backward(tape, root)
        tape.reset()
        backward(tape, root)
        assert np.allclose(x.gradient, 1.0)

    def test_add_shape_mismatch(self):
        tape = Tape()
        with pytest.raises(DimensionError):
            add(tape, tape.constant(np.ones((2, 1))), tape.constant(np.ones((3, 1))))

    def test_affine_shape_mismatch(self):
        tape = Tape()
        with pytest.raises(DimensionError):
            affine(tape, tape.constant(np.ones((2, 3))), tape.constant(np.ones((2, 1))),
                   tape.constant(np.ones((2, 1))))

    def test_unreached_nodes_keep_no_gradient(self):
        tape = Tape()
        x = tape.variable(np.ones((2, 1)))
        unused = tape.variable(np.ones((2, 1)))
        backward(tape, total(tape, x))
        assert unused.grad is None
        assert np.all(unused.gradient == 0.0)
