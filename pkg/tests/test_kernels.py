import os
import subprocess
import sys

import numpy as np
import pytest

from scenetopo import kernels
from scenetopo._accel import HAVE_NUMBA
from scenetopo.coverage import CameraModel, _pack, sample_grid
from scenetopo.scene_gen import generate_corpus
from scenetopo.spectral import gaussian_kernel_graph

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _energy_direct(H, L, perm):
    Hp = H[perm]
    return float(np.trace(Hp.T @ L @ Hp))


def test_permutation_energies_match_direct_trace():
    rng = np.random.default_rng(0)
    m, d = 7, 5
    H = rng.standard_normal((m, d))
    L = gaussian_kernel_graph(rng.uniform(-4, 4, (m, 3))).L
    perms = np.stack([rng.permutation(m) for _ in range(50)])
    want = [_energy_direct(H, L, p) for p in perms]
    got_np = kernels.permutation_energies_np(H @ H.T, L, perms, chunk=7)
    np.testing.assert_allclose(got_np, want, rtol=1e-12)
    np.testing.assert_allclose(kernels.permutation_energies(H @ H.T, L, perms), want, rtol=1e-12)


@needs_numba
def test_permutation_energies_numba_matches_numpy():
    rng = np.random.default_rng(1)
    m = 12
    H = rng.standard_normal((m, 30))
    L = gaussian_kernel_graph(rng.uniform(-4, 4, (m, 3))).L
    perms = np.stack([rng.permutation(m) for _ in range(300)])
    a = kernels.permutation_energies_nb(H @ H.T, L, perms)
    b = kernels.permutation_energies_np(H @ H.T, L, perms)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@needs_numba
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_raster_owner_numba_matches_numpy(seed):
    scenes, trajs, _ = generate_corpus(1, seed=seed, n_questions=0)
    cam = CameraModel(trajs[0].frames[3])
    uv, dirs, _ = sample_grid(cam, 8)
    args = (dirs, uv, np.asarray(cam.pose.eye, float), *_pack(cam, scenes[0].objects))
    a = kernels.raster_owner_nb(*args)
    b = kernels.raster_owner_np(*args)
    assert a.shape == b.shape
    # analytic hits may differ only on rays grazing an edge to round-off
    assert np.mean(a == b) >= 0.9999
    assert (a >= 0).any()


def test_raster_owner_empty_scene_has_no_hits():
    scenes, trajs, _ = generate_corpus(1, seed=0, n_questions=0)
    cam = CameraModel(trajs[0].frames[0])
    uv, dirs, _ = sample_grid(cam, 2)
    packed = list(_pack(cam, scenes[0].objects))
    packed[-1] = np.zeros_like(packed[-1])  # no active silhouettes
    owner = kernels.raster_owner(dirs, uv, np.asarray(cam.pose.eye, float), *packed)
    assert np.all(owner == -1)


def test_ql_eigensolver_path_graph():
    L = np.array([[1.0, -1, 0], [-1, 2, -1], [0, -1, 1]])
    w, V = kernels.tridiagonal_ql_eig(L)
    np.testing.assert_allclose(w, [0, 1, 3], atol=1e-12)
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-12)


@needs_numba
@pytest.mark.parametrize("n", [1, 2, 5, 40])
def test_ql_numba_matches_lapack(n):
    rng = np.random.default_rng(n)
    A = rng.standard_normal((n, n))
    A = A + A.T
    w, V = kernels.symmetric_eig_nb(A)
    w0, _ = kernels.symmetric_eig_np(A)
    np.testing.assert_allclose(w, w0, atol=1e-10 * max(1, np.abs(w0).max()))
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, A, atol=1e-9)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-10)


def test_numpy_fallback_is_selected_by_env():
    code = ("import scenetopo._accel as a, scenetopo.kernels as k;"
            "print(a.USE_NUMBA)")
    env = dict(os.environ, SCENETOPO_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "False"
