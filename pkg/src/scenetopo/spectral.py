"""Kernel graphs, Dirichlet energies and spectral verification harnesses."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import subspace_angles, orthogonal_procrustes
from scipy.spatial.distance import pdist, squareform
from scipy.stats import spearmanr

from . import kernels

RATIO_EPS = 1e-8


@dataclass
class KernelGraph:
    W: np.ndarray
    D: np.ndarray
    L: np.ndarray
    tau: float
    coords: np.ndarray


def auto_bandwidth(X) -> float:
    """Half the median pairwise distance."""
    X = np.asarray(X, float)
    if X.shape[0] < 2:
        raise ValueError("bandwidth needs at least two points")
    med = float(np.median(pdist(X)))
    if med <= 0:
        raise ValueError("all points coincide; bandwidth undefined")
    return 0.5 * med


def gaussian_kernel_graph(X, tau="auto") -> KernelGraph:
    """Gaussian-kernel graph with zero diagonal and its Laplacian ``D - W``."""
    X = np.asarray(X, float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need an (m, dim) coordinate array with m >= 2")
    if tau is None or (isinstance(tau, str) and tau == "auto"):
        tau = auto_bandwidth(X)
    tau = float(tau)
    if tau <= 0:
        raise ValueError("bandwidth must be positive")
    D2 = squareform(pdist(X, "sqeuclidean"))
    W = np.exp(-D2 / (2 * tau ** 2))
    np.fill_diagonal(W, 0.0)
    deg = W.sum(1)
    return KernelGraph(W, np.diag(deg), np.diag(deg) - W, tau, X)


def complete_laplacian(m: int, mask=None) -> np.ndarray:
    """Laplacian of the unit-weight complete graph (restricted to ``mask``)."""
    v = np.ones(m) if mask is None else np.asarray(mask, float)
    A = np.outer(v, v)
    np.fill_diagonal(A, 0.0)
    return np.diag(A.sum(1)) - A


def dirichlet_energy(H, L) -> float:
    """``tr(H^T L H)``."""
    H = np.asarray(H, float)
    if H.ndim == 1:
        H = H[:, None]
    if H.shape[0] != L.shape[0]:
        raise ValueError("row count of H does not match the Laplacian")
    return float(np.einsum("ij,ik,jk->", L, H, H))


def dirichlet_energy_pairwise(H, W) -> float:
    """``1/2 sum_ij W_ij ||h_i - h_j||^2`` evaluated pair by pair."""
    H = np.asarray(H, float)
    if H.ndim == 1:
        H = H[:, None]
    m = H.shape[0]
    tot = 0.0
    for i in range(m):
        for j in range(m):
            if i != j:
                diff = H[i] - H[j]
                tot += W[i, j] * float(diff @ diff)
    return 0.5 * tot


@dataclass
class DirichletRatio:
    value: float
    energy: float
    null_mean: float
    status: str = "ok"


def permutation_null_exact(H, L) -> float:
    """Expected energy under a uniformly random row permutation."""
    G = H @ H.T
    m = G.shape[0]
    dmean = np.trace(G) / m
    off = (G.sum() - np.trace(G)) / (m * (m - 1))
    return float(np.trace(L) * dmean + (L.sum() - np.trace(L)) * off)


def dirichlet_ratio(H, X, tau="auto", n_shuffles: int = 1000, rng=None) -> DirichletRatio:
    """Energy of ``H`` on the coordinate graph over its row-shuffle mean.

    Values below one mean latent neighbours coincide with physical ones
    more than chance.
    """
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    H = np.asarray(H, float)
    if H.ndim == 1:
        H = H[:, None]
    g = gaussian_kernel_graph(X, tau)
    e = dirichlet_energy(H, g.L)
    Hc = H - H.mean(0)
    if np.allclose(Hc, 0.0, atol=1e-14 * max(1.0, np.abs(H).max())):
        return DirichletRatio(float("nan"), e, 0.0, "degenerate")
    rng = rng if rng is not None else np.random.default_rng()
    m = H.shape[0]
    perms = np.argsort(rng.random((n_shuffles, m)), axis=1)
    null = kernels.permutation_energies(H @ H.T, g.L, perms)
    nm = float(null.mean())
    if nm <= 0:
        return DirichletRatio(float("nan"), e, nm, "degenerate")
    return DirichletRatio(e / nm, e, nm)


def normalized_dirichlet_ratio(H, X=None, tau="auto", eps=RATIO_EPS, W=None) -> float:
    """``sum_ij W_ij ||h_i-h_j||^2 / (sum_ij ||h_i-h_j||^2 + eps)``, scale-free in ``H``."""
    H = np.asarray(H, float)
    if H.ndim == 1:
        H = H[:, None]
    if W is None:
        W = gaussian_kernel_graph(X, tau).W
    L = np.diag(W.sum(1)) - W
    num = 2.0 * dirichlet_energy(H, L)
    den = 2.0 * dirichlet_energy(H, complete_laplacian(H.shape[0]))
    return num / (den + eps)


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sign_convention: str = "max_abs_positive"


def fix_signs(V):
    """Flip columns so each one's largest-magnitude entry is positive."""
    V = np.array(V, float)
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def symmetric_eig(L, method: str = "lapack") -> EigenDecomposition:
    """Ascending eigenpairs of a symmetric matrix with deterministic signs.

    ``method="lapack"`` calls ``numpy.linalg.eigh``; ``method="ql"`` uses the
    package's tridiagonal QL kernel.
    """
    L = np.asarray(L, float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(L - L.T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(L).max(initial=0.0)):
        raise ValueError("matrix is not symmetric")
    L = 0.5 * (L + L.T)
    if method == "lapack":
        w, V = np.linalg.eigh(L)
    elif method == "ql":
        w, V = kernels.tridiagonal_ql_eig(L)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(w, kind="stable")
    return EigenDecomposition(w[order], fix_signs(V[:, order]))


# ---------------------------------------------------------------------------
# verification harnesses
# ---------------------------------------------------------------------------

@dataclass
class CheckRecord:
    check_name: str
    statistic: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_row(self):
        return {"check_name": self.check_name, "statistic": self.statistic,
                "threshold": self.threshold, "pass": bool(self.passed)}


def random_orthonormal(n, k, rng):
    Q, R = np.linalg.qr(rng.standard_normal((n, k)))
    return Q * np.sign(np.diag(R))


def construct_dirichlet_minimizer(L, epsilons, d=None, rng=None, V=None):
    """``H* = sum_k eps_k z_k v_k^T`` from the lowest Laplacian eigenvectors.

    Parameters
    ----------
    L : ndarray, shape (m, m)
    epsilons : sequence of float
        Strictly descending positive singular-value floors.
    d : int, optional
        Number of columns; defaults to ``len(epsilons) + 1``.
    V : ndarray, shape (d, s), optional
        Orthonormal right factors; drawn at random when omitted.

    Returns
    -------
    H : ndarray, shape (m, d)
    eig : EigenDecomposition
    """
    eps = np.asarray(epsilons, float)
    s = len(eps)
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be positive and strictly descending")
    m = L.shape[0]
    d = s + 1 if d is None else d
    if s > min(m, d) - 1 and s != 1:
        raise ValueError("need s <= min(m, d) - 1")
    eig = symmetric_eig(L)
    Z = eig.eigenvectors[:, :s]
    if V is None:
        rng = rng if rng is not None else np.random.default_rng()
        V = random_orthonormal(d, s, rng)
    return (Z * eps) @ V.T, eig


def _pc_directions(H):
    Hc = H - H.mean(0)
    U, S, _ = np.linalg.svd(Hc, full_matrices=False)
    return U, S


def verify_theorem1(L, epsilons, d, n_perturb=1000, rng=None, scale=0.3, tol=1e-10):
    """Check that the constructed minimizer has the predicted structure.

    Returns a list of :class:`CheckRecord` covering principal-component
    alignment, the energy value, singular values and perturbation optimality.
    """
    rng = rng if rng is not None else np.random.default_rng()
    eps = np.asarray(epsilons, float)
    s = len(eps)
    H, eig = construct_dirichlet_minimizer(L, eps, d, rng)
    lam, Z = eig.eigenvalues, eig.eigenvectors
    target = float(np.sum(eps ** 2 * lam[:s]))
    e = dirichlet_energy(H, L)
    rel = abs(e - target) / max(abs(target), 1e-300)
    U, S = _pc_directions(H)
    # the lambda_1 mode is constant and vanishes on centering
    cos = [abs(float(U[:, k] @ Z[:, k + 1])) for k in range(s - 1)]
    sv = np.linalg.svd(H, compute_uv=False)[:s]
    # perturbations: random direction, rescaled upward where needed to stay feasible
    best_gap = np.inf
    n_feasible = 0
    for _ in range(n_perturb):
        P = rng.standard_normal(H.shape) * scale * rng.uniform(0.01, 1.0)
        Hp = H + P
        Up, Sp, Vpt = np.linalg.svd(Hp, full_matrices=False)
        Sp = Sp.copy()
        Sp[:s] = np.maximum(Sp[:s], eps)
        Hp = (Up * Sp) @ Vpt
        chk = np.linalg.svd(Hp, compute_uv=False)[:s]
        if np.any(chk < eps * (1 - 1e-12)):
            continue
        n_feasible += 1
        best_gap = min(best_gap, dirichlet_energy(Hp, L) - e)
    tol_abs = tol * max(1.0, abs(target))
    return [
        CheckRecord("theorem1_pc_alignment", float(min(cos) if cos else 1.0), 1 - 1e-8,
                    bool(min(cos, default=1.0) > 1 - 1e-8), {"cosines": cos}),
        CheckRecord("theorem1_energy", float(rel), 1e-10, bool(rel <= 1e-10),
                    {"energy": e, "target": target}),
        CheckRecord("theorem1_singular_values", float(np.abs(sv - eps).max()), 1e-10,
                    bool(np.abs(sv - eps).max() <= 1e-10 * max(1.0, eps.max()))),
        CheckRecord("theorem1_perturbation", float(best_gap), -tol_abs,
                    bool(best_gap >= -tol_abs and n_feasible == n_perturb),
                    {"n_feasible": n_feasible}),
    ]


def verify_kyfan(L, weights, n_trials=500, rng=None, tol=1e-10) -> CheckRecord:
    """Weighted Ky Fan bound over random orthonormal frames.

    ``sum_k w_k <u_k, L u_k> >= sum_k w_k lambda_k`` for descending weights,
    with equality at the eigenvector frame.
    """
    rng = rng if rng is not None else np.random.default_rng()
    w = np.asarray(weights, float)
    k = len(w)
    if np.any(np.diff(w) > 0) or np.any(w <= 0):
        raise ValueError("weights must be positive and non-increasing")
    unique = bool(np.all(np.diff(w) < 0))
    eig = symmetric_eig(L)
    bound = float(np.sum(w * eig.eigenvalues[:k]))
    Z = eig.eigenvectors[:, :k]
    at_eig = float(np.sum(w * np.einsum("ik,ij,jk->k", Z, L, Z)))
    vals = np.empty(n_trials)
    for t in range(n_trials):
        U = random_orthonormal(L.shape[0], k, rng)
        vals[t] = np.sum(w * np.einsum("ik,ij,jk->k", U, L, U))
    violations = int(np.sum(vals < bound - tol))
    gap = abs(at_eig - bound)
    return CheckRecord("kyfan", float(vals.min() - bound), -tol,
                       violations == 0 and gap <= tol * max(1.0, abs(bound)),
                       {"violations": violations, "bound": bound, "eigen_frame": at_eig,
                        "eigen_frame_gap": gap, "unique_minimizer": unique})


def principal_angle_cosines(A, B) -> np.ndarray:
    return np.cos(subspace_angles(A, B))


def cube_eigenfunction_check(m=1500, tau=0.2, rng=None, method="lapack") -> dict:
    """Compare the first non-trivial Laplacian eigenvectors with ``cos(pi x_a)``.

    Points are uniform on the unit cube.  Returns principal-angle cosines
    between the two 3-d subspaces, per-axis Spearman correlations after
    orthogonal alignment and the relative spread of ``lambda_2..lambda_4``.
    """
    if m < 200:
        raise ValueError("need at least 200 samples")
    rng = rng if rng is not None else np.random.default_rng()
    X = rng.random((m, 3))
    g = gaussian_kernel_graph(X, tau)
    eig = symmetric_eig(g.L, method)
    lam = eig.eigenvalues
    Z = eig.eigenvectors[:, 1:4]
    F = np.cos(np.pi * X)
    F = F - F.mean(0)
    cos = principal_angle_cosines(Z, F)
    Fn = F / np.linalg.norm(F, axis=0)
    R, _ = orthogonal_procrustes(Z, Fn)
    Za = Z @ R
    rho = [float(spearmanr(Za[:, a], F[:, a])[0]) for a in range(3)]
    spread = float((lam[3] - lam[1]) / lam[1:4].mean())
    return {"principal_angle_cosines": cos, "mean_cosine": float(cos.mean()),
            "per_axis_spearman": rho, "eigenvalues": lam[:5], "spread": spread,
            "lambda1_ratio": float(abs(lam[0]) / lam[1]),
            "z1_constant_dev": float(np.std(eig.eigenvectors[:, 0]) * np.sqrt(m))}


def random_scene_laplacian(m, rng, bound=4.0):
    """Kernel-graph Laplacian of ``m`` uniform points in ``[-bound, bound]^3``."""
    X = rng.uniform(-bound, bound, (m, 3))
    return gaussian_kernel_graph(X).L


def theorem1_suite(n_scenes=20, m=12, epsilons=(4, 3, 2, 1), d=8, n_perturb=1000, rng=None):
    """Run :func:`verify_theorem1` on random scenes and fold the results.

    Returns one :class:`CheckRecord` per check name whose statistic is the
    worst case over scenes.
    """
    rng = rng if rng is not None else np.random.default_rng()
    per = [verify_theorem1(random_scene_laplacian(m, rng), epsilons, d, n_perturb, rng)
           for _ in range(n_scenes)]
    out = []
    for j, first in enumerate(per[0]):
        recs = [p[j] for p in per]
        stats = [r.statistic for r in recs]
        worst = min(stats) if first.check_name in ("theorem1_pc_alignment",
                                                   "theorem1_perturbation") else max(stats)
        out.append(CheckRecord(first.check_name, float(worst), first.threshold,
                               all(r.passed for r in recs), {"n_scenes": n_scenes}))
    return out


def kyfan_suite(n_graphs=10, m=12, k=4, n_trials=500, rng=None):
    """Weighted Ky Fan check on random graphs with random descending weights."""
    rng = rng if rng is not None else np.random.default_rng()
    recs = []
    for _ in range(n_graphs):
        w = np.sort(rng.uniform(0.1, 1.0, k))[::-1]
        recs.append(verify_kyfan(random_scene_laplacian(m, rng), w, n_trials, rng))
    return CheckRecord("kyfan", float(min(r.statistic for r in recs)), recs[0].threshold,
                       all(r.passed for r in recs),
                       {"n_graphs": n_graphs,
                        "violations": int(sum(r.details["violations"] for r in recs)),
                        "max_eigen_frame_gap": float(max(r.details["eigen_frame_gap"]
                                                         for r in recs))})


def cube_suite(m=1500, tau=0.2, rng=None, method="lapack"):
    """Cube eigenfunction check as :class:`CheckRecord` objects."""
    res = cube_eigenfunction_check(m, tau, rng, method)
    return [
        CheckRecord("cube_mean_cosine", res["mean_cosine"], 0.95, res["mean_cosine"] >= 0.95),
        CheckRecord("cube_spread", res["spread"], 0.15, res["spread"] < 0.15),
        CheckRecord("cube_lambda1_ratio", res["lambda1_ratio"], 1e-6,
                    res["lambda1_ratio"] < 1e-6),
    ], res
