import numpy as np
import pytest

from gce import autodiff as ad
from gce.autodiff import Var, const


def fd_grad(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of one array."""
    g = np.zeros_like(x, dtype=float)
    flat = x.reshape(-1)
    out = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = f(x)
        flat[i] = orig - eps
        lo = f(x)
        flat[i] = orig
        out[i] = (hi - lo) / (2 * eps)
    return g


def check(build, shape, seed, atol=1e-7, rtol=1e-5):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=shape)
    v = Var(x.copy())
    build(v).backward()
    analytic = v.grad
    numeric = fd_grad(lambda arr: float(build(Var(arr.copy())).value), x.copy())
    np.testing.assert_allclose(analytic, numeric, atol=atol, rtol=rtol)


def test_arithmetic_chain():
    check(lambda v: ad.vsum(v * v + 3.0 * v - 1.0), (4, 3), 0)


def test_broadcast_add_mul():
    rng = np.random.default_rng(1)
    other = rng.normal(size=(1, 3))

    def build(v):
        return ad.vsum((v + const(other)) * const(other) * v)

    check(build, (4, 3), 1)


def test_matmul_batched():
    rng = np.random.default_rng(2)
    w = rng.normal(size=(3, 2))

    def build(v):
        return ad.vsum((v @ const(w)) * (v @ const(w)))

    check(build, (5, 4, 3), 2)


def test_matmul_grad_of_weight():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(6, 4, 3))

    def build(v):
        return ad.vsum(const(a) @ v)

    check(build, (3, 2), 3)


def test_elementwise_ops():
    check(lambda v: ad.vsum(ad.exp(v) + ad.sigmoid(v)), (7,), 4)
    check(lambda v: ad.vsum(ad.log(ad.exp(v) + 1.5)), (5,), 5)
    check(lambda v: ad.vsum(ad.relu(v)), (9,), 6)
    check(lambda v: ad.vsum(ad.leaky_relu(v, 0.2)), (9,), 7)
    check(lambda v: ad.vsum(ad.power(v * v + 1.0, -0.5)), (6,), 8)


def test_reductions():
    check(lambda v: ad.vsum(ad.vmean(v, axis=1) * 2.0), (4, 5), 9)
    check(lambda v: ad.vsum(ad.vsum(v, axis=0, keepdims=True) * 3.0), (4, 5), 10)


def test_amax_routes_to_first_argmax():
    x = np.array([[1.0, 3.0, 3.0], [0.5, 0.2, 0.1]])
    v = Var(x)
    ad.vsum(amax := ad.amax(v, axis=1)).backward()
    assert amax.value.tolist() == [3.0, 0.5]
    expected = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(v.grad, expected)


def test_amax_gradient_matches_fd_off_ties():
    check(lambda v: ad.vsum(ad.amax(v, axis=1)), (6, 5), 11)


def test_log_softmax_and_softmax():
    check(lambda v: ad.vsum(ad.log_softmax(v, axis=1) * const(np.eye(4)[:3])), (3, 4), 12)
    rng = np.random.default_rng(13)
    w = rng.normal(size=(3, 4))
    check(lambda v: ad.vsum(ad.softmax(v, axis=1) * const(w)), (3, 4), 13)


def test_bce_with_logits_matches_manual():
    rng = np.random.default_rng(14)
    t = (rng.random((4, 4)) < 0.5).astype(float)

    def build(v):
        return ad.bce_with_logits(v, t)

    check(build, (4, 4), 14)
    # value agrees with the naive formula
    u = rng.normal(size=(4, 4))
    p = 1 / (1 + np.exp(-u))
    naive = -(t * np.log(p) + (1 - t) * np.log(1 - p)).sum()
    assert float(ad.bce_with_logits(Var(u), t).value) == pytest.approx(naive)


def test_getitem_concat_stack_reshape():
    check(lambda v: ad.vsum(v[1:3] * 2.0), (5, 2), 15)
    check(lambda v: ad.vsum(ad.concat([v, v * 2.0], axis=1)), (3, 2), 16)
    check(lambda v: ad.vsum(ad.stack([v * 1.5, v], axis=0) * 0.5), (4,), 17)
    check(lambda v: ad.vsum(ad.reshape(v, (6,)) * const(np.arange(6.0))), (2, 3), 18)
    check(lambda v: ad.vsum(ad.swapaxes(v, 0, 1) @ const(np.ones((4, 2)))), (4, 3), 19)


def test_embedding_ops():
    rows = np.array([0, 2])
    cols = np.array([1, 3])
    check(lambda v: ad.vsum(ad.embed_block(v, rows, cols, (4, 5)) * 3.0), (2, 2), 20)
    check(lambda v: ad.vsum(ad.embed_rows(v, rows, (4, 3)) * 2.0), (2, 3), 21)
    check(lambda v: ad.vsum(ad.embed_block3(v, rows, cols, (4, 5, 2))), (2, 2, 2), 22)


def test_ut_to_symmetric():
    n = 4
    slots = n * (n - 1) // 2

    def build(v):
        m = ad.ut_to_symmetric(v, n)
        return ad.vsum(m * const(np.arange(16.0).reshape(4, 4)))

    check(build, (slots,), 23)
    v = Var(np.arange(1.0, slots + 1))
    m = ad.ut_to_symmetric(v, n)
    assert np.allclose(m.value, m.value.T)
    assert np.all(np.diag(m.value) == 0)


def test_ut_to_symmetric3():
    n, k = 4, 3
    slots = n * (n - 1) // 2

    def build(v):
        t = ad.ut_to_symmetric3(v, n, k)
        return ad.vsum(t * const(np.arange(48.0).reshape(4, 4, 3)))

    check(build, (slots, k), 24)


def test_grad_accumulates_over_reuse():
    v = Var(np.array([2.0]))
    out = ad.vsum(v * v + v * 3.0)
    out.backward()
    assert v.grad[0] == pytest.approx(2 * 2.0 + 3.0)


def test_backward_requires_scalar():
    v = Var(np.ones((2, 2)))
    with pytest.raises(ValueError):
        (v * 2.0).backward()


def test_constants_get_no_grad():
    c = const(np.ones(3))
    v = Var(np.ones(3))
    ad.vsum(v * c).backward()
    assert c.grad is None
    assert v.grad is not None
