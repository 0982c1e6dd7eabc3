import numpy as np
import pytest

from embedbench.autodiff import (
    ParamStore,
    Tape,
    Tensor,
    add,
    backward,
    concat,
    finite_diff_check,
    linear,
    matmul,
    mul,
    relu,
    segment_mean,
    spmm,
    square,
    total,
)
from embedbench.errors import NonFiniteError, ShapeError
import scipy.sparse as sp


def _grad(fn, *arrays):
    ts = [Tensor(a, requires_grad=True) for a in arrays]
    with Tape() as tape:
        backward(fn(*ts), tape)
    return [t.grad for t in ts]


def test_matmul_against_naive():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    ga, gb = _grad(lambda x, y: total(matmul(x, y)), a, b)
    # d/da sum(a@b) = 1 @ b.T ; d/db = a.T @ 1
    ones = np.ones((3, 2))
    naive_a = np.array([[sum(ones[i, j] * b[k, j] for j in range(2)) for k in range(4)] for i in range(3)])
    assert np.allclose(ga, naive_a)
    assert np.allclose(gb, a.T @ ones)


def test_broadcast_add_mul():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(4, 3)), rng.normal(size=(3,))
    ga, gb = _grad(lambda x, y: total(mul(add(x, y), y)), a, b)
    assert np.allclose(ga, np.broadcast_to(b, (4, 3)))
    assert np.allclose(gb, (a + 2 * b).sum(axis=0))


def test_linear_relu_concat_square():
    rng = np.random.default_rng(2)
    x, w, bias = rng.normal(size=(5, 3)), rng.normal(size=(4, 3)), rng.normal(size=4)
    store = ParamStore()
    store.add("w", w)
    store.add("b", bias)
    xt = Tensor(x)

    def pipe():
        h = relu(linear(xt, store["w"], store["b"]))
        return total(square(concat([h, h])))

    assert finite_diff_check(pipe, store, coords_per_tensor=None) < 1e-6


def test_spmm_and_segment_mean():
    rng = np.random.default_rng(3)
    adj = sp.random(6, 6, density=0.4, random_state=3, format="csr")
    h = rng.normal(size=(6, 2))
    seg = np.array([0, 0, 1, 1, 1, 2])
    (g,) = _grad(lambda t: total(square(segment_mean(spmm(adj, t), seg, 3))), h)
    means = np.stack([(adj @ h)[seg == k].mean(axis=0) for k in range(3)])
    up = 2 * means[seg] / np.bincount(seg)[seg][:, None]
    assert np.allclose(g, adj.T @ up)
    with pytest.raises(ShapeError):
        segment_mean(Tensor(h), np.array([0, 0, 0, 0, 0, 2]), 3)


def test_no_recording_outside_tape():
    t = Tensor(np.ones(3), requires_grad=True)
    out = total(t)
    assert not out.requires_grad and out._vjp is None


def test_gradients_accumulate_across_uses():
    (g,) = _grad(lambda t: total(add(t, t)), np.ones(4))
    assert np.allclose(g, 2.0)


def test_backward_requires_scalar():
    t = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        with pytest.raises(ShapeError):
            backward(mul(t, t), tape)


def test_nonfinite_guard():
    t = Tensor(np.array([1e308]), requires_grad=True)
    with Tape(), np.errstate(over="ignore"):
        with pytest.raises(NonFiniteError):
            mul(t, Tensor(1e10))


def test_param_store_save_load(tmp_path):
    s = ParamStore()
    s.add("a", np.arange(6.0).reshape(2, 3))
    s.save(tmp_path / "ck", {"epoch": 3})
    s["a"].data = np.zeros((2, 3))
    meta = s.load(tmp_path / "ck")
    assert meta["epoch"] == 3
    assert np.array_equal(s["a"].data, np.arange(6.0).reshape(2, 3))
    with pytest.raises(KeyError):
        s.add("a", np.zeros(1))


def test_finite_diff_skips_kinks():
    s = ParamStore()
    s.add("w", np.array([0.0, 1.0]))
    skipped = []
    err = finite_diff_check(lambda: total(relu(mul(s["w"], Tensor(1.0)))), s, coords_per_tensor=None, excluded=skipped)
    assert skipped == [("w", 0)]
    assert err < 1e-8
