import os
import subprocess
import sys

import numpy as np
import pytest

from kgbounds import _kernels_np, kernels

jit = pytest.importorskip("kgbounds._kernels_jit")


def _suffix(W):
    # cumulative L1 of the tail rows is a valid (loose) tail bound
    tail = np.abs(W).sum(axis=1)[::-1].cumsum()[::-1]
    return np.append(tail, 0).astype(W.dtype)


@pytest.mark.parametrize("seed", range(20))
def test_alternate_signs_parity(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((7, 9))
    A0 = rng.choice([-1.0, 1.0], size=(16, 7))
    v1, a1, b1, i1 = jit.alternate_signs(M, A0.copy(), 10**4)
    v2, a2, b2, i2 = _kernels_np.alternate_signs(M, A0.copy(), 10**4)
    assert np.allclose(v1, v2) and np.array_equal(a1, a2) and np.array_equal(b1, b2)


@pytest.mark.parametrize("seed", range(10))
def test_alternate_vectors_parity(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((6, 5))
    A0 = rng.standard_normal((8, 6, 2))
    A0 /= np.linalg.norm(A0, axis=2, keepdims=True)
    v1 = jit.alternate_vectors(M, A0.copy(), 10**4, 1e-12)[0]
    v2 = _kernels_np.alternate_vectors(M, A0.copy(), 10**4, 1e-12)[0]
    assert np.allclose(v1, v2, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_pairwise_sweep_parity(seed):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((7, 12))
    t = rng.standard_normal(12) * 0.3
    K, c = V @ V.T, V @ t
    w0 = rng.dirichlet(np.ones(7))
    obj0 = 0.5 * w0 @ K @ w0 - w0 @ c + 0.5 * t @ t
    out = []
    for impl in (jit, _kernels_np):
        w = w0.copy()
        s = K @ w - c
        buf = np.empty(200)
        n = impl.pairwise_sweep(K, s, w, 1e-9, 200, obj0, 1e-12, buf)
        x = w @ V
        # tracked objective matches a direct evaluation and never increases
        assert buf[n - 1] == pytest.approx(0.5 * np.sum((x - t) ** 2), abs=1e-9)
        assert np.all(np.diff(np.r_[obj0, buf[:n]]) <= 1e-12)
        assert w.sum() == pytest.approx(1.0) and w.min() >= 0
        out.append((n, w))
    assert out[0][0] == out[1][0] and np.allclose(out[0][1], out[1][1])


@pytest.mark.parametrize("seed", range(25))
def test_exact_search_parity(seed):
    rng = np.random.default_rng(seed)
    W = rng.integers(-5, 6, size=(10, 14)).astype(np.int64)
    cand = np.zeros((1, 10), dtype=np.int8)
    bf1 = jit.brute_force(W, 0.0, True, cand)
    bf2 = _kernels_np.brute_force(W, 0.0, True, cand.copy())
    assert bf1[0] == bf2[0]
    suffix = _suffix(W)
    r1 = jit.bnb_suffix(W, suffix, 0, 0, np.ones(10, dtype=np.int8), 10**9, 0.0, True, cand, 0)
    r2 = _kernels_np.bnb_suffix(W, suffix, 0, 0, np.ones(10, dtype=np.int8), 10**9, 0.0, True, cand.copy(), 0)
    assert r1[0] == r2[0] == bf1[0]


def test_env_flag_selects_numpy_backend():
    code = "from kgbounds import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, KGBOUNDS_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    assert kernels.BACKEND in ("numba", "numpy")


def test_solver_agrees_across_backends():
    code = ("import numpy as np; from kgbounds.solver import sdp1_branch_and_bound as s;"
            "rng=np.random.default_rng(5); M=rng.integers(-4,5,size=(9,12));"
            "print(s(M, restarts=20).value)")
    vals = set()
    for flag in ("0", "1"):
        env = dict(os.environ, KGBOUNDS_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.add(out.stdout.strip())
    assert len(vals) == 1
