"""Cross-scene identity prototypes, nuisance bases, residualisation and RSA."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import orthogonal_procrustes, qr
from scipy.stats import spearmanr

from .spectral import auto_bandwidth, fix_signs, gaussian_kernel_graph


@dataclass
class PrototypeTable:
    identities: list
    prototypes: np.ndarray  # (K, d)
    counts: np.ndarray  # (K,)


@dataclass
class IdentityBasis:
    W: np.ndarray  # (d, k), orthonormal columns
    provenance: str
    singular_values: np.ndarray | None = None
    standardization: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    @property
    def k(self):
        return self.W.shape[1]

    @property
    def d(self):
        return self.W.shape[0]

    def projector(self):
        """``P_perp = I - W W^T``."""
        return np.eye(self.d) - self.W @ self.W.T

    def save(self, path):
        rec = {"d": self.d, "k": self.k, "provenance": self.provenance,
               "standardization": {k: np.asarray(v).tolist()
                                   for k, v in self.standardization.items()},
               "flags": self.flags}
        np.savez(path, header=json.dumps(rec), W=np.asfortranarray(self.W),
                 singular_values=(self.singular_values if self.singular_values is not None
                                  else np.zeros(0)))

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            h = json.loads(str(z["header"]))
            sv = z["singular_values"]
            std = {k: np.asarray(v) for k, v in h["standardization"].items()}
            return cls(np.array(z["W"]), h["provenance"], sv if sv.size else None, std,
                       h.get("flags", []))


def cross_scene_prototypes(H, labels, n_identities=None, identities=None) -> PrototypeTable:
    """Mean activation per identity over all scenes containing it.

    Parameters
    ----------
    H : ndarray, shape (N, d)
        Stacked object activations (one row per object occurrence).
    labels : ndarray of int, shape (N,)
        Identity index of each row.
    """
    H = np.asarray(H, float)
    labels = np.asarray(labels, int)
    K = int(labels.max()) + 1 if n_identities is None else int(n_identities)
    counts = np.bincount(labels, minlength=K)
    if np.any(counts == 0):
        missing = np.nonzero(counts == 0)[0].tolist()
        raise ValueError(f"identities with zero occurrences: {missing}")
    sums = np.zeros((K, H.shape[1]))
    np.add.at(sums, labels, H)
    names = identities if identities is not None else list(range(K))
    return PrototypeTable(list(names), sums / counts[:, None], counts)


def identity_basis_svd(prototypes: PrototypeTable | np.ndarray, k: int,
                       rank_tol: float = 1e-10) -> IdentityBasis:
    """Top-``k`` left singular vectors of the ``d x K`` prototype matrix."""
    P = prototypes.prototypes if isinstance(prototypes, PrototypeTable) else np.asarray(prototypes)
    U, S, _ = np.linalg.svd(P.T, full_matrices=False)
    if not 1 <= k <= U.shape[1]:
        raise ValueError(f"k={k} outside [1, {U.shape[1]}]")
    flags = []
    rank = int(np.sum(S > rank_tol * S[0])) if S.size and S[0] > 0 else 0
    if k > rank:
        flags.append(f"k={k} exceeds numerical rank {rank}")
    return IdentityBasis(U[:, :k], "svd_prototypes", S, flags=flags)


def _multinomial_directions(Z, y, C, max_iter):
    from sklearn.linear_model import LogisticRegression
    from sklearn.exceptions import ConvergenceWarning

    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes per factor")
    clf = LogisticRegression(C=C, max_iter=max_iter, tol=1e-8)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        clf.fit(Z, y)
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    coef = clf.coef_
    if coef.shape[0] == 1:  # binary problems return one direction
        coef = np.vstack([coef, -coef])
    return coef, converged


def identity_basis_logistic_qr(H, color_labels, shape_labels, C: float = 0.1,
                               max_iter: int = 2000, drop_tol: float = 1e-6) -> IdentityBasis:
    """Nuisance basis from multinomial logistic probes on colour and shape.

    Probes are fit on standardised activations; their class directions are
    mapped back to activation space as displacements (scaled by the
    per-dimension standard deviation), stacked and orthonormalised by a
    pivoted thin QR.  Each probe's block is scaled as a whole so that the
    softmax redundancy (class rows summing to zero) survives and its column
    is dropped: columns whose ``|R_kk|`` falls below ``drop_tol`` times the
    largest are discarded, leaving at most ``(C - 1) + (S - 1)`` directions.

    Dividing by the standard deviation instead (the raw-space classifier
    weights) would inflate low-variance noise dimensions and tilt the basis
    away from the class-mean subspace.
    """
    H = np.asarray(H, float)
    mu = H.mean(0)
    sd = H.std(0)
    sd = np.where(sd > 0, sd, 1.0)
    Z = (H - mu) / sd
    rows, flags = [], []
    for name, y in (("color", color_labels), ("shape", shape_labels)):
        coef, ok = _multinomial_directions(Z, np.asarray(y), C, max_iter)
        if not ok:
            flags.append(f"{name} probe hit the {max_iter}-iteration cap")
        dirs = coef * sd  # standardised displacement -> raw activation space
        dirs /= np.linalg.norm(dirs, axis=1).max()
        rows.append(dirs)
    M = np.vstack(rows).T  # (d, n_dirs)
    Q, R, piv = qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    keep = diag >= drop_tol * diag.max()
    return IdentityBasis(Q[:, keep], "logistic_qr", diag[keep],
                         {"mean": mu, "std": sd}, flags)


def residualize(H, basis: IdentityBasis | np.ndarray):
    """``H (I - W W^T)``, computed without forming the projector."""
    W = basis.W if isinstance(basis, IdentityBasis) else np.asarray(basis)
    H = np.asarray(H, float)
    if H.shape[-1] != W.shape[0]:
        raise ValueError("activation dimension does not match the basis")
    return H - (H @ W) @ W.T


@dataclass
class PCAEmbedding:
    Z: np.ndarray
    components: np.ndarray  # (n_components, d)
    singular_values: np.ndarray
    mean: np.ndarray
    flags: list = field(default_factory=list)

    def transform(self, H):
        return (np.asarray(H, float) - self.mean) @ self.components.T


def pca_embed(H, n_components: int = 3, rank_tol: float = 1e-12) -> PCAEmbedding:
    """Principal-component scores via SVD of the centred data."""
    H = np.asarray(H, float)
    if H.shape[0] <= n_components:
        raise ValueError("need more rows than components")
    mu = H.mean(0)
    Hc = H - mu
    U, S, Vt = np.linalg.svd(Hc, full_matrices=False)
    flags = []
    rank = int(np.sum(S > rank_tol * max(S[0], 1e-300))) if S[0] > 0 else 0
    k = n_components
    if rank < n_components:
        flags.append(f"rank {rank} below {n_components} components")
        k = rank
    V = fix_signs(Vt[:k].T).T
    return PCAEmbedding(Hc @ V.T, V, S[:k], mu, flags)


def procrustes_correlation(Z, X) -> float:
    """Correlation of ``X`` with its best similarity-transform fit from ``Z``.

    Both sides are centred; ``Z`` is rotated and uniformly scaled onto ``X``
    and the score is ``sqrt(1 - SSE / SST)`` over all coordinates.
    """
    Zc = np.asarray(Z, float) - np.mean(Z, 0)
    Xc = np.asarray(X, float) - np.mean(X, 0)
    R, s = orthogonal_procrustes(Zc, Xc)
    scale = s / max(np.sum(Zc ** 2), 1e-300)
    sse = np.sum((scale * Zc @ R - Xc) ** 2)
    sst = np.sum(Xc ** 2)
    return float(np.sqrt(max(0.0, 1 - sse / sst)))


def linear_map_correlation(Z, X) -> float:
    """Like :func:`procrustes_correlation` but allowing any affine 3x3 map."""
    Zc = np.column_stack([np.ones(len(Z)), Z])
    B, *_ = np.linalg.lstsq(Zc, X, rcond=None)
    Xc = X - X.mean(0)
    sse = np.sum((Zc @ B - X) ** 2)
    return float(np.sqrt(max(0.0, 1 - sse / np.sum(Xc ** 2))))


def cosine_similarity_matrix(H):
    H = np.asarray(H, float)
    n = np.linalg.norm(H, axis=1, keepdims=True)
    Hn = H / np.where(n > 0, n, 1.0)
    return Hn @ Hn.T


@dataclass
class RSAResult:
    per_scene: np.ndarray
    mean: float
    flags: list = field(default_factory=list)


def rsa_scene(H, X, tau="auto") -> float:
    """Spearman correlation of activation cosines with coordinate kernel similarity."""
    H = np.asarray(H, float)
    m = H.shape[0]
    if m < 3:
        raise ValueError("RSA needs at least 3 objects")
    if tau == "auto":
        tau = auto_bandwidth(X)
    S_act = cosine_similarity_matrix(H)
    S_topo = gaussian_kernel_graph(X, tau).W
    iu = np.triu_indices(m, 1)
    a, b = S_act[iu], S_topo[iu]
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        return float("nan")
    return float(spearmanr(a, b)[0])


def rsa(H_per_scene, X_per_scene) -> RSAResult:
    """Per-scene RSA and its corpus mean (NaN scenes are flagged and skipped)."""
    vals, flags = [], []
    for i, (H, X) in enumerate(zip(H_per_scene, X_per_scene)):
        if len(H) < 3:
            flags.append(f"scene {i}: fewer than 3 objects")
            vals.append(np.nan)
            continue
        r = rsa_scene(H, X)
        if np.isnan(r):
            flags.append(f"scene {i}: constant similarity vector")
        vals.append(r)
    vals = np.asarray(vals, float)
    mean = float(np.nanmean(vals)) if np.any(~np.isnan(vals)) else float("nan")
    return RSAResult(vals, mean, flags)


def variance_subspace_fraction(H, basis, tol: float = 1e-8) -> float:
    """Share of ``||H||_F^2`` inside the span of an orthonormal basis."""
    B = basis.W if isinstance(basis, IdentityBasis) else np.asarray(basis, float)
    if B.ndim == 1:
        B = B[:, None]
    if np.abs(B.T @ B - np.eye(B.shape[1])).max() > tol:
        raise ValueError("basis columns are not orthonormal")
    H = np.asarray(H, float)
    return float(np.sum((H @ B) ** 2) / np.sum(H ** 2))


def class_mean_subspace(H, labels, rank_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the centred class-mean vectors (``n_classes - 1`` dims)."""
    labels = np.asarray(labels)
    classes = np.unique(labels)
    M = np.stack([H[labels == c].mean(0) for c in classes])
    M = M - M.mean(0)
    U, S, _ = np.linalg.svd(M.T, full_matrices=False)
    r = int(np.sum(S > rank_tol * max(S[0], 1e-300)))
    return U[:, :r]


def split_by_scene(values, scene_index, n_scenes=None):
    n = int(scene_index.max()) + 1 if n_scenes is None else n_scenes
    return [values[scene_index == s] for s in range(n)]
