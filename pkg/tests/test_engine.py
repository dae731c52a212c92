import importlib
import threading

import numpy as np
import pytest
from pydantic import ValidationError

from t2f.config.settings import Settings
from t2f.engine import (
    Adam,
    AdamState,
    Tape,
    Tensor,
    adam_step,
    backward,
    check_gradients,
    current_tape,
    finite_difference_grad,
    get_dtype,
    get_precision,
    parameter,
    precision,
    primitive_suite,
)
from t2f.engine import functional as F
from t2f.engine.gradcheck import composite_check
from t2f.errors import ContractError, DegenerateBatchError, DimensionError, NonFiniteError


# ── Oracles ──────────────────────────────────────────────────────────────────

def matmul_oracle(a, b):
    n, k = a.shape
    _, m = b.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            for t in range(k):
                out[i, j] += a[i, t] * b[t, j]
    return out


def conv_oracle(x, kernel, stride, pad):
    n, c, h, w = x.shape
    co, _, k, _ = kernel.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    out = np.zeros((n, co, ho, wo))
    for b in range(n):
        for o in range(co):
            for y in range(ho):
                for x_ in range(wo):
                    for ci in range(c):
                        for i in range(k):
                            for j in range(k):
                                out[b, o, y, x_] += xp[b, ci, y * stride + i, x_ * stride + j] * kernel[o, ci, i, j]
    return out


def scalar_adam(p, g, m, v, t, lr, b1, b2, eps):
    t += 1
    m = b1 * m + (1 - b1) * g
    v = b2 * v + (1 - b2) * g * g
    m_hat = m / (1 - b1 ** t)
    v_hat = v / (1 - b2 ** t)
    return p - lr * m_hat / (v_hat ** 0.5 + eps), m, v, t


# ── Tensor basics ────────────────────────────────────────────────────────────

def test_default_precision_is_32_bit():
    assert get_dtype() == np.float32
    assert Tensor([1.0, 2.0]).data.dtype == np.float32


def test_precision_context_switches_and_restores():
    with precision(64):
        assert Tensor([1.0]).data.dtype == np.float64
    assert get_dtype() == np.float32


@pytest.mark.parametrize("text, bits", [("64", 64), (" 32 ", 32)])
def test_precision_default_comes_from_the_environment(monkeypatch, text, bits):
    monkeypatch.setenv("T2F_PRECISION", text)
    configured = Settings()
    assert configured.precision == bits
    monkeypatch.setattr(importlib.import_module("t2f.engine.precision"), "settings", configured)

    seen = []
    worker = threading.Thread(target=lambda: seen.append((get_precision(), parameter(np.zeros(2)).data.dtype)))
    worker.start()
    worker.join()
    assert seen == [(bits, np.dtype(np.float64 if bits == 64 else np.float32))]


def test_precision_environment_rejects_other_widths(monkeypatch):
    monkeypatch.setenv("T2F_PRECISION", "16")
    with pytest.raises(ValidationError):
        Settings()


def test_non_finite_values_are_rejected():
    with pytest.raises(NonFiniteError):
        Tensor([1.0, np.nan])
    with pytest.raises(NonFiniteError):
        Tensor([np.inf])


def test_ops_outside_tape_are_not_recorded():
    w = parameter([1.0, 2.0])
    assert current_tape() is None
    out = F.sum(F.tanh(w))
    assert not out.requires_grad


# ── affine ───────────────────────────────────────────────────────────────────

def test_affine_identity_input(float64):
    out = F.affine(Tensor(np.eye(2)), Tensor([[1, 2], [3, 4]]), Tensor([0, 0]))
    np.testing.assert_array_equal(out.data, [[1, 2], [3, 4]])


def test_affine_projection_shape():
    theta = Tensor(np.zeros((1, 356)))
    out = F.affine(theta, Tensor(np.zeros((356, 8192))), Tensor(np.zeros(8192)))
    assert out.shape == (1, 8192)


def test_affine_matches_triple_loop(float64, rng):
    a, b, bias = rng.normal(size=(3, 4)), rng.normal(size=(4, 2)), rng.normal(size=2)
    out = F.affine(Tensor(a), Tensor(b), Tensor(bias))
    np.testing.assert_allclose(out.data, matmul_oracle(a, b) + bias, rtol=1e-12, atol=1e-12)


def test_affine_shape_mismatch_names_shapes():
    with pytest.raises(DimensionError, match=r"\(2, 3\).*\(4, 2\)"):
        F.affine(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 2))))


# ── conv2d / deconv2d ────────────────────────────────────────────────────────

def test_conv2d_identity_kernel(float64, rng):
    x = rng.normal(size=(1, 1, 4, 4))
    out = F.conv2d(Tensor(x), Tensor(np.ones((1, 1, 1, 1))), stride=1, pad=0)
    np.testing.assert_array_equal(out.data, x)


def test_conv2d_halves_64_to_32():
    out = F.conv2d(Tensor(np.zeros((1, 3, 64, 64))), Tensor(np.zeros((64, 3, 4, 4))), stride=2, pad=1)
    assert out.shape == (1, 64, 32, 32)


@pytest.mark.parametrize("stride,pad", [(1, 0), (2, 1), (2, 0), (3, 2)])
def test_conv2d_matches_nested_loops(float64, rng, stride, pad):
    x = rng.normal(size=(1, 2, 5, 5))
    k = rng.normal(size=(3, 2, 3, 3))
    out = F.conv2d(Tensor(x), Tensor(k), stride=stride, pad=pad)
    np.testing.assert_allclose(out.data, conv_oracle(x, k, stride, pad), rtol=1e-12, atol=1e-12)


def test_conv2d_kernel_larger_than_input():
    with pytest.raises(DimensionError):
        F.conv2d(Tensor(np.zeros((1, 1, 2, 2))), Tensor(np.zeros((1, 1, 4, 4))), stride=1, pad=0)


def test_deconv2d_doubles_spatial_size():
    out = F.deconv2d(Tensor(np.zeros((2, 8, 4, 4))), Tensor(np.zeros((8, 4, 4, 4))), stride=2, pad=1)
    assert out.shape == (2, 4, 8, 8)


def test_deconv2d_identity(float64):
    out = F.deconv2d(Tensor([[[[3.5]]]]), Tensor(np.ones((1, 1, 1, 1))), stride=1, pad=0)
    np.testing.assert_array_equal(out.data, [[[[3.5]]]])


def test_deconv2d_negative_size_is_rejected():
    with pytest.raises(DimensionError):
        F.deconv2d(Tensor(np.zeros((1, 1, 1, 1))), Tensor(np.zeros((1, 1, 2, 2))), stride=1, pad=2)


@pytest.mark.parametrize("seed", range(5))
def test_conv_deconv_adjointness(float64, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(2, 3, 8, 8))
    k = rng.normal(size=(4, 3, 4, 4))
    y = rng.normal(size=(2, 4, 4, 4))
    lhs = np.sum(F.conv2d(Tensor(x), Tensor(k), 2, 1).data * y)
    rhs = np.sum(x * F.deconv2d(Tensor(y), Tensor(k), 2, 1).data)
    assert abs(lhs - rhs) < 1e-10


def test_deconv2d_is_gradient_of_conv2d(float64, rng):
    x = parameter(rng.normal(size=(1, 2, 6, 6)))
    k = rng.normal(size=(3, 2, 4, 4))
    y = rng.normal(size=(1, 3, 3, 3))
    with Tape() as tape:
        loss = F.sum(F.mul(F.conv2d(x, Tensor(k), 2, 1), y))
    backward(tape, loss)
    np.testing.assert_allclose(F.deconv2d(Tensor(y), Tensor(k), 2, 1).data, x.grad, atol=1e-12)


# ── batchnorm ────────────────────────────────────────────────────────────────

def test_batchnorm_constant_channel_is_zero(float64):
    x = Tensor(np.full((4, 1, 2, 2), 3.0))
    out = F.batchnorm(x, Tensor([1.0]), Tensor([0.0]), mode="train")
    np.testing.assert_array_equal(out.data, np.zeros((4, 1, 2, 2)))


def test_batchnorm_output_moments(float64, rng):
    x = Tensor(rng.normal(loc=3.0, scale=2.0, size=(8, 3, 4, 4)))
    out = F.batchnorm(x, Tensor(np.ones(3)), Tensor(np.zeros(3)), mode="train").data
    assert np.all(np.abs(out.mean(axis=(0, 2, 3))) < 1e-5)
    assert np.all(np.abs(out.var(axis=(0, 2, 3)) - 1.0) < 1e-3)


def test_batchnorm_zero_gamma_yields_beta(rng):
    x = Tensor(rng.normal(size=(4, 2, 3, 3)))
    out = F.batchnorm(x, Tensor([0.0, 0.0]), Tensor([0.25, -1.5]), mode="train")
    np.testing.assert_array_equal(out.data[:, 0], np.full((4, 3, 3), 0.25, dtype=np.float32))
    np.testing.assert_array_equal(out.data[:, 1], np.full((4, 3, 3), -1.5, dtype=np.float32))


def test_batchnorm_degenerate_batch():
    with pytest.raises(DegenerateBatchError):
        F.batchnorm(Tensor(np.zeros((1, 2, 1, 1))), Tensor(np.ones(2)), Tensor(np.zeros(2)), mode="train")


def test_batchnorm_running_stats_and_infer_mode(float64, rng):
    x = rng.normal(loc=2.0, size=(4, 1, 2, 2))
    stats = F.RunningStats.fresh(1)
    F.batchnorm(Tensor(x), Tensor([1.0]), Tensor([0.0]), mode="train", running=stats)
    m = x.size
    assert stats.mean[0] == pytest.approx(0.1 * x.mean())
    assert stats.var[0] == pytest.approx(0.9 + 0.1 * x.var() * m / (m - 1))

    out = F.batchnorm(Tensor(x), Tensor([1.0]), Tensor([0.0]), mode="infer", running=stats)
    expected = (x - stats.mean[0]) / np.sqrt(stats.var[0] + 1e-5)
    np.testing.assert_allclose(out.data, expected)


# ── activations ──────────────────────────────────────────────────────────────

def test_leaky_relu_values(float64):
    np.testing.assert_allclose(F.leaky_relu(Tensor([-1.0, 0.0, 2.0]), 0.2).data, [-0.2, 0.0, 2.0])


def test_leaky_relu_slope_one_is_identity(rng):
    x = rng.normal(size=10)
    np.testing.assert_array_equal(F.leaky_relu(Tensor(x), 1.0).data, Tensor(x).data)


def test_leaky_relu_gradient_at_negative_three():
    grad = finite_difference_grad(lambda t: F.sum(F.leaky_relu(t, 0.2)), Tensor([-3.0]))
    assert grad.data[0] == pytest.approx(0.2, rel=1e-8)


def test_tanh_and_sigmoid_at_zero():
    assert F.tanh(Tensor([0.0])).data[0] == 0.0
    assert F.sigmoid(Tensor([0.0])).data[0] == 0.5


def test_sigmoid_symmetry(float64, rng):
    x = rng.normal(scale=4.0, size=50)
    total = F.sigmoid(Tensor(x)).data + F.sigmoid(Tensor(-x)).data
    np.testing.assert_allclose(total, np.ones(50), atol=1e-15)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("op", [F.tanh, F.sigmoid, lambda t: F.leaky_relu(t, 0.2)])
def test_elementwise_gradients_random_inputs(float64, seed, op):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(10, 101))
    x = rng.normal(size=size)
    x = np.where(np.abs(x) < 1e-3, 0.5, x)
    t = parameter(x)
    weights = rng.normal(size=size)
    result = check_gradients("elementwise", lambda: F.sum(F.mul(op(t), weights)), {"x": t})
    assert result.passed, result


# ── backward ─────────────────────────────────────────────────────────────────

def test_backward_of_sum_is_ones(rng):
    x = parameter(rng.normal(size=(2, 3, 4)))
    with Tape() as tape:
        loss = F.sum(x)
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, np.ones((2, 3, 4)))


def test_two_backward_calls_double_gradients(float64, rng):
    w = parameter(rng.normal(size=(3, 2)))
    x = Tensor(rng.normal(size=(4, 3)))
    with Tape() as tape:
        loss = F.mean(F.tanh(F.affine(x, w)))
    backward(tape, loss)
    first = w.grad.copy()
    backward(tape, loss)
    np.testing.assert_array_equal(w.grad, 2 * first)


def test_backward_rejects_non_scalar_loss():
    x = parameter([1.0, 2.0])
    with Tape() as tape:
        out = F.tanh(x)
    with pytest.raises(ContractError):
        backward(tape, out)


def test_backward_rejects_loss_not_on_tape():
    x = parameter([1.0, 2.0])
    loss = F.sum(x)
    with pytest.raises(ContractError):
        backward(Tape(), loss)


def test_untouched_tensors_keep_their_gradients():
    used = parameter([1.0, 2.0])
    unused = parameter([5.0])
    unused.grad = np.array([7.0], dtype=np.float32)
    with Tape() as tape:
        loss = F.sum(F.square(used))
    backward(tape, loss)
    np.testing.assert_array_equal(unused.grad, [7.0])
    np.testing.assert_allclose(used.grad, [2.0, 4.0])


def test_operator_overloads_record_gradients(float64):
    x = parameter([2.0])
    with Tape() as tape:
        loss = F.sum(3.0 * x - x * x + (1.0 - x))
    backward(tape, loss)
    assert x.grad[0] == pytest.approx(3.0 - 4.0 - 1.0)


def test_composite_graph_against_finite_differences(float64):
    assert composite_check(np.random.default_rng(7)).passed


def test_composite_graph_32_bit_tolerance():
    rng = np.random.default_rng(3)
    x = Tensor(rng.normal(size=(4, 2, 4, 4)))
    kernel = parameter(rng.normal(scale=0.5, size=(3, 2, 4, 4)))
    gamma, beta = parameter(np.ones(3)), parameter(np.zeros(3))

    def loss(k):
        h = F.leaky_relu(F.batchnorm(F.conv2d(x, k, 2, 1), gamma, beta, mode="train"))
        return F.mean(F.sigmoid(h))

    with Tape() as tape:
        out = loss(kernel)
    backward(tape, out)
    with precision(64):
        numeric = finite_difference_grad(loss, kernel).data
    scale = np.maximum(np.maximum(np.abs(kernel.grad), np.abs(numeric)), 1e-2)
    assert np.max(np.abs(kernel.grad - numeric) / scale) < 1e-3


def test_primitive_suite_passes():
    results = primitive_suite(seed=0)
    assert results
    failures = [r for r in results if not r.passed]
    assert not failures, failures


def test_tape_replay_is_deterministic(rng):
    data = rng.normal(size=(2, 3, 8, 8))
    kernel = rng.normal(size=(4, 3, 4, 4))

    def run():
        k = parameter(kernel)
        with Tape() as tape:
            loss = F.mean(F.leaky_relu(F.conv2d(Tensor(data), k, 2, 1)))
        backward(tape, loss)
        return loss.data.copy(), k.grad.copy()

    (l1, g1), (l2, g2) = run(), run()
    assert l1.tobytes() == l2.tobytes()
    assert g1.tobytes() == g2.tobytes()


# ── Adam ─────────────────────────────────────────────────────────────────────

def test_adam_zero_gradient_is_fixed_point():
    p = np.array([1.5, -2.0])
    state = AdamState()
    adam_step({"p": p}, {"p": np.zeros(2)}, state, lr=0.1)
    np.testing.assert_array_equal(p, [1.5, -2.0])
    assert state.step_count == 1


def test_adam_single_step_matches_scalar_reference():
    p = np.array([1.0])
    state = AdamState(beta1=0.5, beta2=0.5, epsilon=1e-8)
    adam_step({"p": p}, {"p": np.array([1.0])}, state, lr=0.001)
    expected, *_ = scalar_adam(1.0, 1.0, 0.0, 0.0, 0, 0.001, 0.5, 0.5, 1e-8)
    assert p[0] == expected


def test_adam_several_steps_match_scalar_reference():
    p = np.array([0.3])
    state = AdamState(beta1=0.5, beta2=0.5, epsilon=1e-8)
    ref_p, m, v, t = 0.3, 0.0, 0.0, 0
    for g in [0.5, -1.0, 2.0, 0.1]:
        adam_step({"p": p}, {"p": np.array([g])}, state, lr=0.01)
        ref_p, m, v, t = scalar_adam(ref_p, g, m, v, t, 0.01, 0.5, 0.5, 1e-8)
    assert p[0] == pytest.approx(ref_p, rel=1e-15)
    assert state.step_count == 4


def test_adam_descends_on_quadratic(float64):
    p = parameter([5.0])
    opt = Adam({"p": p}, lr=0.1, beta1=0.5, beta2=0.5)
    trace = [5.0]
    for _ in range(100):
        opt.zero_grad()
        with Tape() as tape:
            loss = F.sum(F.square(p))
        backward(tape, loss)
        opt.step()
        trace.append(float(p.data[0]))
    warm = [v for v in trace if v > 0.5]
    assert all(a > b for a, b in zip(warm, warm[1:]))
    assert min(abs(v) for v in trace) < 0.2
    assert abs(trace[-1]) < 1.0
    assert opt.state.step_count == 100


def test_adam_rejects_bad_betas():
    from t2f.errors import ConfigError
    with pytest.raises(ConfigError):
        AdamState(beta1=1.0)
