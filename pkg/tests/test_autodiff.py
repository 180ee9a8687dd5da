"""
Tests for Autodiff
==================

Unit tests for the tensor primitives, the reverse sweep, Adam and the
checkpoint format. Gradients are checked against central differences.
"""

import os
import sys

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.autodiff import ops
from src.autodiff.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from src.autodiff.optim import AdamState, adam_step, clip_grad_norm, global_grad_norm
from src.autodiff.tensor import ParameterStore, ParamView, Tape, Tensor, backward
from src.errors import ArgumentError, ContractError, DataError, DomainError, ShapeError
from tests.conftest import numeric_gradient, relative_error


def check_gradients(build, shapes, seed=0, positive=False):
    """Compare backward() with central differences for every input of ``build``."""
    rng = np.random.default_rng(seed)
    store = ParameterStore()
    for i, shape in enumerate(shapes):
        value = rng.uniform(0.5, 2.0, shape) if positive else rng.normal(size=shape)
        store.add(f"p{i}", value)

    tape = Tape()
    view = ParamView(store, tape)
    loss = ops.sum(build(*[view[f"p{i}"] for i in range(len(shapes))]))
    grads = backward(tape, loss, accumulate=False)

    def value():
        plain = ParamView(store)
        return ops.sum(build(*[plain[f"p{i}"] for i in range(len(shapes))])).item()

    for i in range(len(shapes)):
        numeric = numeric_gradient(value, store[f"p{i}"].value)
        assert relative_error(grads[f"p{i}"], numeric) < 1e-4, f"input {i}"


class TestPrimitiveGradients:
    """Finite-difference checks for every primitive."""

    def test_add_with_broadcast(self):
        """Test add sums gradients over broadcast axes."""
        check_gradients(lambda a, b: ops.add(a, b) * ops.add(a, b), [(3, 4), (4,)])

    def test_sub_and_neg(self):
        """Test sub and neg."""
        check_gradients(lambda a, b: ops.neg(ops.sub(a, b)) * a, [(2, 3), (2, 3)])

    def test_mul(self):
        """Test elementwise product."""
        check_gradients(lambda a, b: ops.mul(a, b), [(3, 2), (1, 2)])

    def test_div(self):
        """Test division with a positive denominator."""
        check_gradients(lambda a, b: ops.div(a, b), [(3,), (3,)], positive=True)

    def test_matmul_batched(self):
        """Test batched matmul against a shared weight."""
        check_gradients(lambda a, b: ops.tanh(ops.matmul(a, b)), [(2, 3, 4), (4, 5)])

    @pytest.mark.parametrize("kind", ["sigmoid", "tanh", "softplus", "exp"])
    def test_elementwise(self, kind):
        """Test smooth nonlinearities."""
        check_gradients(lambda a: ops.elementwise(kind, a) * a, [(4, 3)])

    def test_relu(self):
        """Test relu away from the kink."""
        check_gradients(lambda a: ops.relu(a) * a, [(5,)], positive=True)

    def test_log_and_log1p(self):
        """Test log and log1p on positive inputs."""
        check_gradients(lambda a: ops.log(a) + ops.log1p(a), [(4,)], positive=True)

    def test_reshape_and_broadcast(self):
        """Test reshape and broadcast_to."""
        check_gradients(
            lambda a: ops.broadcast_to(ops.reshape(a, (1, 6)), (3, 6)) * ops.broadcast_to(ops.reshape(a, (1, 6)), (3, 6)),
            [(2, 3)],
        )

    def test_concat(self):
        """Test concat along the last axis."""
        check_gradients(lambda a, b: ops.tanh(ops.concat([a, b], axis=-1)), [(2, 3), (2, 2)])

    def test_getitem_slice_and_index(self):
        """Test basic slicing and integer-array indexing with repeats."""
        check_gradients(lambda a: a[1:, :2] * a[1:, :2], [(3, 4)])
        check_gradients(lambda a: a[np.array([0, 2, 2])] * a[np.array([0, 2, 2])], [(3, 4)])

    @pytest.mark.parametrize("dilation", [1, 2, 4])
    def test_dilated_causal_conv(self, dilation):
        """Test the width-2 dilated convolution."""
        check_gradients(lambda x, k: ops.tanh(ops.dilated_causal_conv1d(x, k, dilation)), [(2, 7, 3), (2, 3, 4)])

    def test_pinball_sum(self):
        """Test the fused pinball loss away from the kink."""
        target = np.array([[0.3], [-1.2], [2.0]])
        levels = np.array([0.1, 0.5, 0.9])
        weights = np.array([[1.0, 2.0, 0.5]])
        check_gradients(lambda p: ops.pinball_sum(p, target, levels, weights), [(3, 3)])


class TestPrimitiveValues:
    """Forward values and argument checks."""

    def test_conv_is_causal(self):
        """Test out[t] never reads inputs after t."""
        rng = np.random.default_rng(1)
        x = rng.normal(size=(10, 2))
        kernel = rng.normal(size=(2, 2, 3))
        base = ops.dilated_causal_conv1d(x, kernel, 2).numpy()
        x[6:] += 100.0
        changed = ops.dilated_causal_conv1d(x, kernel, 2).numpy()
        np.testing.assert_array_equal(base[:6], changed[:6])

    def test_conv_reference(self):
        """Test against an explicit loop."""
        rng = np.random.default_rng(2)
        x = rng.normal(size=(6, 2))
        kernel = rng.normal(size=(2, 2, 1))
        out = ops.dilated_causal_conv1d(x, kernel, 3).numpy()
        for t in range(6):
            expected = x[t] @ kernel[0] + (x[t - 3] @ kernel[1] if t >= 3 else 0.0)
            np.testing.assert_allclose(out[t], expected, rtol=0, atol=1e-12)

    def test_conv_rejects_bad_dilation(self):
        """Test dilation 0 is refused."""
        with pytest.raises(ArgumentError):
            ops.dilated_causal_conv1d(np.zeros((3, 1)), np.zeros((2, 1, 1)), 0)

    def test_conv_rejects_channel_mismatch(self):
        """Test kernel channels must match the input."""
        with pytest.raises(ShapeError):
            ops.dilated_causal_conv1d(np.zeros((3, 2)), np.zeros((2, 3, 1)), 1)

    def test_matmul_shape_error(self):
        """Test inner dimensions must agree."""
        with pytest.raises(ShapeError):
            ops.matmul(np.zeros((2, 3)), np.zeros((4, 2)))

    def test_log_domain(self):
        """Test log refuses non-positive input."""
        with pytest.raises(DomainError):
            ops.log(np.array([1.0, 0.0]))
        with pytest.raises(DomainError):
            ops.log1p(np.array([-1.0]))

    def test_unknown_elementwise_kind(self):
        """Test unknown kinds are a contract error."""
        with pytest.raises(ContractError):
            ops.elementwise("gelu", np.zeros(2))

    def test_pinball_value(self):
        """Test L_0.9(10, 4) = 5.4 and L_0.1(10, 4) = 0.6."""
        loss = ops.pinball_sum(np.array([[4.0, 4.0]]), np.array([[10.0]]), np.array([0.9, 0.1]), np.ones((1, 2)))
        assert loss.item() == pytest.approx(6.0, abs=1e-12)

    def test_pinball_kink_gradient(self):
        """Test the kink takes the p <= y branch (-q)."""
        store = ParameterStore()
        store.add("p", np.array([[2.0]]))
        tape = Tape()
        loss = ops.pinball_sum(ParamView(store, tape)["p"], np.array([[2.0]]), np.array([0.3]), np.ones((1, 1)))
        grads = backward(tape, loss, accumulate=False)
        assert grads["p"][0, 0] == pytest.approx(-0.3)

    def test_constants_record_nothing(self):
        """Test operations on untracked tensors stay off the tape."""
        out = ops.add(Tensor(np.ones(2)), np.ones(2))
        assert not out.tracked


class TestBackward:
    """Tests for the reverse sweep."""

    def test_accumulates_into_parameters(self):
        """Test accumulate=True adds into Parameter.grad."""
        store = ParameterStore()
        store.add("w", np.array([1.0, 2.0]))
        for _ in range(2):
            tape = Tape()
            backward(tape, ops.sum(ParamView(store, tape)["w"] * 3.0))
        np.testing.assert_allclose(store["w"].grad, [6.0, 6.0])

    def test_unused_parameter_gets_zero(self):
        """Test a watched but unused parameter gets exact zeros."""
        store = ParameterStore()
        store.add("a", np.ones(2))
        store.add("b", np.ones(3))
        tape = Tape()
        view = ParamView(store, tape)
        view["b"]
        grads = backward(tape, ops.sum(view["a"]), accumulate=False)
        np.testing.assert_array_equal(grads["b"], np.zeros(3))

    def test_non_scalar_loss(self):
        """Test backward needs a scalar."""
        store = ParameterStore()
        store.add("a", np.ones(2))
        tape = Tape()
        with pytest.raises(ContractError):
            backward(tape, ParamView(store, tape)["a"] * 2.0)

    def test_mixed_tapes_refused(self):
        """Test operands from two tapes cannot be combined."""
        store = ParameterStore()
        store.add("a", np.ones(2))
        left, right = ParamView(store, Tape())["a"], ParamView(store, Tape())["a"]
        with pytest.raises(ContractError):
            ops.add(left, right)


class TestParameterStore:
    """Tests for ParameterStore."""

    def test_duplicate_name(self):
        """Test names are unique."""
        store = ParameterStore()
        store.add("w", np.zeros(2))
        with pytest.raises(ContractError):
            store.add("w", np.zeros(2))

    def test_load_values_checks_shapes(self):
        """Test load_values refuses wrong shapes and names."""
        store = ParameterStore()
        store.add("w", np.zeros(2))
        with pytest.raises(ShapeError):
            store.load_values({"w": np.zeros(3)})
        with pytest.raises(ContractError):
            store.load_values({"v": np.zeros(2)})


class TestAdam:
    """Tests for the optimizer."""

    def test_matches_reference_update(self):
        """Test two steps against the textbook formulas."""
        store = ParameterStore()
        param = store.add("w", np.array([1.0, -2.0]))
        state = AdamState(lr=0.1)
        m = v = np.zeros(2)
        expected = param.value.copy()
        for step, grad in enumerate([np.array([0.5, -1.0]), np.array([0.2, 0.3])], start=1):
            param.grad[...] = grad
            adam_step(store, state)
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad * grad
            m_hat, v_hat = m / (1 - 0.9 ** step), v / (1 - 0.999 ** step)
            expected = expected - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8)
            np.testing.assert_allclose(param.value, expected, rtol=0, atol=1e-12)
        assert state.step == 2

    def test_clip_grad_norm(self):
        """Test clipping rescales to the cap and returns the old norm."""
        store = ParameterStore()
        store.add("a", np.zeros(2)).grad[...] = [3.0, 0.0]
        store.add("b", np.zeros(1)).grad[...] = [4.0]
        assert clip_grad_norm(store, 1.0) == pytest.approx(5.0)
        assert global_grad_norm(store) == pytest.approx(1.0)

    def test_clip_disabled(self):
        """Test None leaves gradients alone."""
        store = ParameterStore()
        store.add("a", np.zeros(1)).grad[...] = [10.0]
        clip_grad_norm(store, None)
        assert store["a"].grad[0] == 10.0


class TestCheckpoint:
    """Tests for the binary checkpoint format."""

    @pytest.fixture
    def store(self):
        store = ParameterStore()
        store.add("encoder.w", np.arange(6.0).reshape(2, 3))
        store.add("decoder.b", np.array([0.25]))
        return store

    def test_round_trip(self, store, tmp_path):
        """Test values and spec survive a save/load."""
        path = save_checkpoint(tmp_path / "m.mqf", {"horizon": 3}, store)
        spec, values = load_checkpoint(path)
        assert spec == {"horizon": 3}
        assert list(values) == ["encoder.w", "decoder.b"]
        np.testing.assert_array_equal(values["encoder.w"], store["encoder.w"].value)

    def test_deterministic_bytes(self, store):
        """Test identical inputs give identical bytes."""
        assert encode_checkpoint({"b": 1, "a": 2}, store) == encode_checkpoint({"a": 2, "b": 1}, store)

    def test_bad_magic(self):
        """Test foreign files are refused."""
        with pytest.raises(DataError):
            decode_checkpoint(b"NOPE" + b"\x00" * 12)

    def test_truncated(self, store):
        """Test a cut file is refused."""
        payload = encode_checkpoint({}, store)
        with pytest.raises(DataError):
            decode_checkpoint(payload[:-4])
