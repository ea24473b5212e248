"""
Tests for the tape, primitives, Adam and tensor snapshots
"""

import numpy as np
import pytest

from hoi_dno.exceptions import ArtifactError, GradientError, NonFiniteGradientError, ShapeError
from hoi_dno.numerics import (
    Adam,
    AdamState,
    Tape,
    Tensor,
    adam_step,
    backward,
    checkpoint,
    decode_tensor,
    encode_tensor,
    forward,
    load_snapshot,
    no_grad,
    save_snapshot,
)
from hoi_dno.numerics import functional as F
from hoi_dno.numerics import primitives as P
from tests.helpers import assert_grads_match, tape_grads

RNG = np.random.default_rng(0)


def test_tensor_is_read_only():
    """Test that tensor values cannot be modified in place"""
    t = Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0


def test_arithmetic_gradients_match_finite_differences():
    """Test broadcasting arithmetic against central differences"""
    a = RNG.standard_normal((3, 4))
    b = RNG.standard_normal((4,))
    assert_grads_match(lambda x, y: ((x * y + x / (y * y + 2.0)) ** 2).sum(), a, b)


@pytest.mark.parametrize(
    "fn",
    [
        lambda x: P.exp(x * 0.3).sum(),
        lambda x: P.log(x * x + 1.0).sum(),
        lambda x: P.tanh(x).sum(),
        lambda x: (P.sin(x) * P.cos(x)).sum(),
        lambda x: P.gelu(x).sum(),
        lambda x: P.sqrt(x * x + 0.5).sum(),
        lambda x: P.cumsum(x, axis=0).sum(axis=1).max(),
        lambda x: (P.softmax(x, axis=-1) * Tensor(np.arange(4.0))).sum(),
        lambda x: (P.layer_norm(x) * Tensor(np.linspace(-1.0, 1.0, 4))).sum(),
        lambda x: P.reduce_mean(x * x, axis=1).sum(),
        lambda x: P.concat([x, x * 2.0], axis=0).sum(),
        lambda x: P.stack([x, x * x], axis=0).sum(),
        lambda x: (x[1:, ::2] * 3.0).sum(),
        lambda x: x.reshape(4, 3).transpose(1, 0).sum(axis=0).max(),
    ],
)
def test_unary_and_structural_primitives(fn):
    """Test elementwise, reduction and reshaping primitives against central differences"""
    x = RNG.standard_normal((3, 4))
    assert_grads_match(fn, x)


def test_minimum_maximum_and_abs_away_from_ties():
    """Test piecewise primitives on inputs without ties or zeros"""
    a = np.array([[0.5, -1.2], [2.0, 0.3]])
    b = np.array([[0.1, -0.4], [2.5, -0.7]])
    assert_grads_match(lambda x, y: (P.minimum(x, y) + 2.0 * P.maximum(x, y) + P.absolute(x)).sum(), a, b)


def test_where_routes_gradients_by_mask():
    """Test that where sends the gradient only to the selected operand"""
    mask = np.array([True, False, True])
    ga, gb = tape_grads(lambda a, b: P.where(mask, a, b).sum(), np.ones(3), np.ones(3))
    np.testing.assert_array_equal(ga, [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(gb, [0.0, 1.0, 0.0])


def test_matmul_and_linear():
    """Test batched matmul and the linear layer"""
    x = RNG.standard_normal((2, 3, 4))
    w = RNG.standard_normal((4, 5))
    b = RNG.standard_normal((5,))
    assert_grads_match(lambda x, w, b: (F.linear(x, w, b) ** 2).sum(), x, w, b)


def test_middle_axis_broadcasting_gradients():
    """Test that size-1 axes anywhere in an operand broadcast and sum back in the gradient"""
    a = RNG.standard_normal((4, 1, 3))
    b = RNG.standard_normal((4, 5, 3))
    mask = np.array([True, False, True])
    assert_grads_match(lambda x, y: (P.where(mask, x * y, x - y) ** 2).sum(), a, b)
    (ga, gb) = tape_grads(lambda x, y: (x * y).sum(), a, b)
    assert ga.shape == a.shape and gb.shape == b.shape
    np.testing.assert_allclose(ga, b.sum(axis=1, keepdims=True))


def test_matmul_broadcasts_batch_axes_only():
    """Test batch broadcasting of matmul and the errors for bad batch or inner dimensions"""
    a = RNG.standard_normal((3, 1, 2, 4))
    b = RNG.standard_normal((5, 4, 2))
    assert_grads_match(lambda x, y: (P.matmul(x, y) ** 2).sum(), a, b)
    with pytest.raises(ShapeError, match="batch dimensions"):
        P.matmul(Tensor(np.ones((3, 2, 4))), Tensor(np.ones((5, 4, 2))))
    with pytest.raises(ShapeError, match="inner dimensions"):
        P.matmul(Tensor(np.ones((3, 2, 4))), Tensor(np.ones((3, 3, 2))))


def test_rotation_geodesic_sq_gradient():
    """Test the fused geodesic primitive away from the identity"""
    from scipy.spatial.transform import Rotation

    m = Rotation.from_rotvec(RNG.standard_normal((4, 3)) * 0.7).as_matrix()
    assert_grads_match(lambda x: P.rotation_geodesic_sq(x).sum(), m)


def test_rotation_geodesic_sq_is_zero_with_finite_gradient_at_identity():
    """Test the value and gradient of the geodesic primitive at zero error"""
    (grad,) = tape_grads(lambda x: P.rotation_geodesic_sq(x).sum(), np.eye(3)[None])
    with no_grad():
        value = P.rotation_geodesic_sq(Tensor(np.eye(3)[None])).item()
    assert value == pytest.approx(0.0)
    assert np.all(np.isfinite(grad))


def test_shape_error_names_both_shapes():
    """Test that incompatible operands raise ShapeError with both shapes"""
    with pytest.raises(ShapeError) as exc:
        Tensor(np.ones((2, 3))) + Tensor(np.ones((4, 5)))
    assert exc.value.shape_a == (2, 3)
    assert exc.value.shape_b == (4, 5)


def test_backward_requires_scalar_root():
    """Test that a non-scalar root is rejected"""
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape():
        y = x * 2.0
        with pytest.raises(GradientError):
            backward(y)


def test_no_grad_records_nothing():
    """Test that nothing is taped inside no_grad"""
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        with no_grad():
            y = (x * 2.0).sum()
    assert len(tape) == 0
    assert not y.requires_grad


def test_leaf_grad_slot_is_filled():
    """Test that leaves created with requires_grad get their grad slot"""
    x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    with Tape():
        backward((x * x).sum())
    np.testing.assert_allclose(x.grad, [2.0, 4.0])


def test_checkpoint_matches_plain_gradient():
    """Test that recomputation yields the same gradient as recording"""
    w = RNG.standard_normal((3, 3))

    def block(x):
        return P.tanh(F.linear(x, Tensor(w)))

    x = RNG.standard_normal((2, 3))
    (plain,) = tape_grads(lambda t: (block(block(t)) ** 2).sum(), x)
    (recomputed,) = tape_grads(lambda t: (checkpoint(block, checkpoint(block, t)) ** 2).sum(), x)
    np.testing.assert_allclose(recomputed, plain, rtol=1e-12, atol=1e-12)


def test_forward_by_name():
    """Test dispatch of a registered primitive by name"""
    out = forward("softmax", Tensor(np.zeros(4)), axis=-1)
    np.testing.assert_allclose(out.data, np.full(4, 0.25))
    with pytest.raises(KeyError):
        forward("no-such-op", Tensor(1.0))


def test_adam_step_is_pure_and_bias_corrected():
    """Test that the first Adam step moves each parameter by lr against the gradient sign"""
    params = {"w": np.array([1.0, -1.0])}
    state = AdamState()
    new, new_state = adam_step(params, {"w": np.array([0.5, -3.0])}, state, lr=0.1)
    np.testing.assert_allclose(new["w"], [0.9, -0.9], atol=1e-6)
    assert state.step == 0 and new_state.step == 1
    np.testing.assert_array_equal(params["w"], [1.0, -1.0])


def test_adam_rejects_non_finite_gradients():
    """Test that NaN gradients name the parameter"""
    with pytest.raises(NonFiniteGradientError) as exc:
        adam_step({"w": np.zeros(2)}, {"w": np.array([np.nan, 0.0])}, AdamState())
    assert exc.value.name == "w"


def test_adam_annealing_reaches_zero():
    """Test linear learning-rate annealing"""
    opt = Adam(lr=0.2, anneal_steps=4)
    params = {"w": np.zeros(1)}
    rates = []
    for _ in range(5):
        rates.append(opt.current_lr())
        params = opt.step(params, {"w": np.ones(1)})
    assert rates == pytest.approx([0.2, 0.15, 0.1, 0.05, 0.0])


def test_adam_minimizes_quadratic():
    """Test that Adam converges on a convex bowl"""
    opt = Adam(lr=0.05)
    params = {"w": np.array([3.0, -2.0])}
    for _ in range(500):
        params = opt.step(params, {"w": 2.0 * (params["w"] - 1.0)})
    np.testing.assert_allclose(params["w"], [1.0, 1.0], atol=1e-2)


def test_tensor_codec_preserves_bytes():
    """Test that encoding and decoding a tensor is exact"""
    array = RNG.standard_normal((2, 3))
    decoded, end = decode_tensor(encode_tensor(array))
    np.testing.assert_array_equal(decoded, array)
    assert end == len(encode_tensor(array))


def test_truncated_tensor_is_rejected():
    """Test that a short buffer raises ArtifactError"""
    with pytest.raises(ArtifactError):
        decode_tensor(encode_tensor(np.ones(4))[:-3])


def test_snapshot_file(tmp_path):
    """Test saving and loading a named tensor snapshot"""
    path = str(tmp_path / "snap.bin")
    save_snapshot(path, {"a": np.arange(3.0), "b": np.eye(2)})
    loaded = load_snapshot(path)
    assert sorted(loaded) == ["a", "b"]
    np.testing.assert_array_equal(loaded["b"], np.eye(2))
