"""Time the numba kernels against their numpy counterparts.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once untimed (JIT compilation), then timed as the
best of ``--repeat`` runs.  Outputs of the two paths are compared so a
speed-up is never reported for diverging results.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from scenetopo import kernels
from scenetopo._accel import HAVE_NUMBA
from scenetopo.coverage import CameraModel, _pack, sample_grid
from scenetopo.scene_gen import generate_corpus
from scenetopo.spectral import gaussian_kernel_graph


def best_of(fn, repeat):
    fn()  # warm-up / compile
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def case_permutation(rng):
    m, d, n = 12, 256, 1000
    X = rng.uniform(-4, 4, (m, 3))
    H = rng.standard_normal((m, d))
    L = gaussian_kernel_graph(X).L
    G = H @ H.T
    perms = np.stack([rng.permutation(m) for _ in range(n)])
    return ("permutation null (m=12, 1000 shuffles)",
            lambda: kernels.permutation_energies_nb(G, L, perms),
            lambda: kernels.permutation_energies_np(G, L, perms),
            lambda a, b: np.abs(a - b).max() <= 1e-9 * np.abs(b).max())


def case_raster(rng):
    scenes, trajs, _ = generate_corpus(1, seed=int(rng.integers(1 << 30)), n_questions=0)
    cam = CameraModel(trajs[0].frames[0])
    uv, dirs, _ = sample_grid(cam, 16)
    args = (dirs, uv, np.asarray(cam.pose.eye, float), *_pack(cam, scenes[0].objects))
    return ("coverage ray ownership (16x16 patches, 16x16 samples)",
            lambda: kernels.raster_owner_nb(*args),
            lambda: kernels.raster_owner_np(*args),
            lambda a, b: np.mean(a == b) >= 0.9999)


def case_eig(rng):
    m = 400
    X = rng.random((m, 3))
    L = gaussian_kernel_graph(X, 0.2).L
    return ("symmetric eigensolve (m=400): numba tred2/tql2 vs LAPACK eigh",
            lambda: kernels.symmetric_eig_nb(L),
            lambda: kernels.symmetric_eig_np(L),
            lambda a, b: np.abs(a[0] - b[0]).max() <= 1e-9 * np.abs(b[0]).max())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 0
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':62s} {'numba ms':>10s} {'numpy ms':>10s} {'speed-up':>9s}  agree")
    for case in (case_permutation, case_raster, case_eig):
        name, f_nb, f_np, agree = case(rng)
        t_nb, o_nb = best_of(f_nb, args.repeat)
        t_np, o_np = best_of(f_np, args.repeat)
        print(f"{name:62s} {1e3 * t_nb:10.2f} {1e3 * t_np:10.2f} {t_np / t_nb:9.2f}  "
              f"{bool(agree(o_nb, o_np))}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
