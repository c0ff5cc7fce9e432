"""Linear latent emulator of object-token activations and coverage pooling.

An object ``o`` at position ``x`` produces the latent vector

    a = offset + u_id(o) + S @ x + eps,    eps ~ N(0, sigma^2 I_d)

where ``offset`` is a context direction shared by every token, ``u_id`` lives
in a planted identity subspace (colour, shape and colour-shape interaction
blocks) and the columns of ``S`` span a planted 3-d spatial subspace
orthogonal to it.  Scales are calibrated so that the identity and spatial
subspaces carry prescribed fractions of the total Frobenius energy.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from .coverage import CoverageGrid, trajectory_coverage
from .scene_gen import COLORS, SHAPES, SIZES, BOUNDS, Scene

N_COLOR = len(COLORS)
N_SHAPE = len(SHAPES)
K = N_COLOR * N_SHAPE
# dimensions of the colour, shape and interaction blocks of the identity span
COLOR_DIM, SHAPE_DIM, INTER_DIM = N_COLOR - 1, N_SHAPE - 1, 13
ID_DIM = COLOR_DIM + SHAPE_DIM + INTER_DIM


@dataclass(frozen=True)
class EmulatorParams:
    d: int
    identity_directions: np.ndarray  # (d, K)
    spatial_map: np.ndarray  # (d, 3)
    offset: np.ndarray  # (d,)
    background: np.ndarray  # (d,)
    noise_sigma: float
    variance_shares: dict
    identity_basis: np.ndarray  # (d, ID_DIM) planted, orthonormal
    spatial_basis: np.ndarray  # (d, 3) planted, orthonormal
    color_basis: np.ndarray = field(repr=False, default=None)
    shape_basis: np.ndarray = field(repr=False, default=None)
    seed: int = 0

    def u_id(self, identities) -> np.ndarray:
        return self.identity_directions[:, np.asarray(identities, int)].T

    def object_mean(self, identities, coords) -> np.ndarray:
        """Noise-free activations ``offset + u_id + S x`` for a set of objects."""
        X = np.asarray(coords, float).reshape(-1, 3)
        return self.offset[None] + self.u_id(identities) + X @ self.spatial_map.T

    def with_noise(self, sigma: float) -> "EmulatorParams":
        from dataclasses import replace
        return replace(self, noise_sigma=float(sigma))


def default_position_moment(sizes=SIZES, bound=BOUNDS) -> float:
    """``E||x||^2`` for objects placed uniformly inside the working box."""
    r = np.asarray(sizes, float) / 2
    return float(np.mean(2 * (bound - r) ** 2 / 3 + r ** 2))


def _centered(a, axis=0):
    return a - a.mean(axis=axis, keepdims=True)


def _conditioned(A, low: float = 0.5):
    """Replace the singular values of ``A`` by an even ramp from 1 down to ``low``.

    Keeps every planted identity direction well above the prototype
    estimation noise; row and column centring are preserved.
    """
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(S > 1e-10 * S[0]))
    return (U[:, :r] * np.linspace(1.0, low, r)) @ Vt[:r]


def make_emulator_params(d: int = 256, identity_share: float = 0.12,
                         spatial_share: float = 0.001, noise_sigma: float = 0.01,
                         seed: int = 0, position_moment: float | None = None,
                         block_weights=(0.6, 0.2, 0.2), total_energy: float | None = None,
                         offset: bool = True) -> EmulatorParams:
    """Draw and calibrate a planted emulator.

    Parameters
    ----------
    d : int
        Latent dimension.
    identity_share, spatial_share : float
        Target fractions of ``||H||_F^2`` inside the planted identity and
        spatial subspaces (noise falling inside each subspace included).
    noise_sigma : float
        Per-coordinate standard deviation of the interaction term.
    position_moment : float, optional
        ``E||x||^2`` of object positions; defaults to the uniform-box value.
    block_weights : tuple
        Energy split between colour, shape and interaction blocks.
    total_energy : float, optional
        Expected ``||h||^2`` per object; defaults to ``d`` (unit RMS).
    offset : bool
        Whether a shared context direction absorbs the remaining energy.  When
        False the identity and spatial scales are set directly by the shares
        relative to ``total_energy`` and nothing else is added.
    """
    if d < ID_DIM + 5:
        raise ValueError(f"d must be at least {ID_DIM + 5}")
    rng = np.random.default_rng(seed)
    total = float(d if total_energy is None else total_energy)
    M2 = default_position_moment() if position_moment is None else float(position_moment)

    Q, _ = np.linalg.qr(rng.standard_normal((d, ID_DIM + 5)))
    B_col = Q[:, :COLOR_DIM]
    B_shp = Q[:, COLOR_DIM:COLOR_DIM + SHAPE_DIM]
    B_int = Q[:, COLOR_DIM + SHAPE_DIM:ID_DIM]
    B_sp = Q[:, ID_DIM:ID_DIM + 3]
    c_dir = Q[:, ID_DIM + 3]
    bg_dir = Q[:, ID_DIM + 4]

    col = _conditioned(_centered(rng.standard_normal((N_COLOR, COLOR_DIM))))
    shp = _conditioned(_centered(rng.standard_normal((N_SHAPE, SHAPE_DIM))))
    inter = rng.standard_normal((N_COLOR, N_SHAPE, INTER_DIM))
    inter = inter - inter.mean(0, keepdims=True) - inter.mean(1, keepdims=True) \
        + inter.mean((0, 1), keepdims=True)
    inter = _conditioned(inter.reshape(K, INTER_DIM)).reshape(N_COLOR, N_SHAPE, INTER_DIM)

    e_id = identity_share * total - ID_DIM * noise_sigma ** 2
    e_sp = spatial_share * total - 3 * noise_sigma ** 2
    if e_id <= 0 or e_sp <= 0:
        raise ValueError("noise alone exceeds a target variance share")
    wc, ws, wi = np.asarray(block_weights, float) / np.sum(block_weights)
    col *= np.sqrt(wc * e_id / np.mean((col ** 2).sum(1)))
    shp *= np.sqrt(ws * e_id / np.mean((shp ** 2).sum(1)))
    inter *= np.sqrt(wi * e_id / np.mean((inter ** 2).sum(2)))

    U = np.empty((d, K))
    for ci in range(N_COLOR):
        for si in range(N_SHAPE):
            U[:, ci * N_SHAPE + si] = B_col @ col[ci] + B_shp @ shp[si] + B_int @ inter[ci, si]
    s = np.sqrt(e_sp / M2)
    S = s * B_sp
    if offset:
        e_c = total - e_id - e_sp - d * noise_sigma ** 2
        if e_c < 0:
            raise ValueError("shares and noise exceed the total energy budget")
        off = np.sqrt(e_c) * c_dir
    else:
        off = np.zeros(d)
    bg = np.sqrt(total) * bg_dir
    return EmulatorParams(
        d=d, identity_directions=U, spatial_map=S, offset=off, background=bg,
        noise_sigma=float(noise_sigma),
        variance_shares={"identity": identity_share, "spatial": spatial_share},
        identity_basis=Q[:, :ID_DIM].copy(), spatial_basis=B_sp.copy(),
        color_basis=B_col.copy(), shape_basis=B_shp.copy(), seed=seed)


@dataclass
class ActivationMatrix:
    values: np.ndarray  # (m, d)
    scene_id: str
    object_names: list
    valid: np.ndarray = None
    layer_tag: str = "emulator"

    def __post_init__(self):
        if self.valid is None:
            self.valid = np.ones(self.values.shape[0], bool)

    @property
    def m(self):
        return self.values.shape[0]

    def save(self, path):
        header = {"scene_id": self.scene_id, "m": int(self.values.shape[0]),
                  "d": int(self.values.shape[1]), "layer_tag": self.layer_tag,
                  "object_names": list(self.object_names)}
        np.savez(path, header=json.dumps(header), values=self.values, valid=self.valid)

    @classmethod
    def load(cls, path):
        with np.load(path) as z:
            h = json.loads(str(z["header"]))
            return cls(z["values"], h["scene_id"], h["object_names"], z["valid"], h["layer_tag"])


def scene_rng(seed: int, scene_id: str) -> np.random.Generator:
    """Independent stream per (seed, scene) so corpora can be built in any order."""
    return np.random.default_rng([int(seed), zlib.crc32(scene_id.encode())])


def emulate_object_activations(scene: Scene, params: EmulatorParams, rng) -> ActivationMatrix:
    """Per-object latents drawn directly from the planted model (no pooling)."""
    H = params.object_mean(scene.identities, scene.coords)
    if params.noise_sigma > 0:
        H = H + params.noise_sigma * rng.standard_normal(H.shape)
    return ActivationMatrix(H, scene.scene_id, scene.names)


def slot_coverage(coverage: np.ndarray, tau_slot: int = 2) -> np.ndarray:
    """Average consecutive frames into temporal slots, ``(T, P, m) -> (T/tau, P, m)``."""
    T = coverage.shape[0]
    if tau_slot not in (1, 2) or T % tau_slot:
        raise ValueError("tau_slot must be 1 or 2 and divide the frame count")
    return coverage.reshape(T // tau_slot, tau_slot, *coverage.shape[1:]).mean(1)


def emulate_patch_activations(scene: Scene, coverage: CoverageGrid | np.ndarray,
                              params: EmulatorParams, rng, tau_slot: int = 2):
    """Patch latents ``(T/tau, P, d)`` blending owning objects and background.

    Each object's latent (with one noise draw per object) is weighted by its
    slot coverage of the patch; uncovered mass goes to the background vector.

    Returns
    -------
    patches : ndarray, shape (T/tau, P, d)
    slot_cov : ndarray, shape (T/tau, P, m)
    """
    cov = coverage.values if isinstance(coverage, CoverageGrid) else np.asarray(coverage)
    if cov.ndim != 3 or cov.shape[2] != scene.m:
        raise ValueError("coverage does not match the scene's object count")
    A = emulate_object_activations(scene, params, rng).values
    C = slot_coverage(cov, tau_slot)
    rest = np.clip(1.0 - C.sum(-1), 0.0, 1.0)
    patches = C @ A + rest[..., None] * params.background
    return patches, C


def pool_object_tokens(patch_activations, coverage, kappa: float = 0.25,
                       scene_id: str = "", object_names=None) -> ActivationMatrix:
    """Coverage-weighted pooling of patch latents into one vector per object.

    Within each temporal slot, patches with coverage ``>= kappa`` are averaged
    with coverage weights; the per-slot vectors are then averaged over the
    slots in which the object has at least one qualifying patch.  Objects with
    none are returned as zero rows flagged invalid.
    """
    if not 0.0 < kappa < 1.0 + 1e-12:
        raise ValueError("kappa must lie in (0, 1]")
    Hp = np.asarray(patch_activations, float)
    C = np.asarray(coverage, float)
    Wq = np.where(C >= kappa, C, 0.0)  # (S, P, m)
    mass = Wq.sum(1)  # (S, m)
    pooled = np.einsum("spm,spd->smd", Wq, Hp)
    has = mass > 0
    per_slot = np.where(has[..., None], pooled / np.where(has, mass, 1.0)[..., None], 0.0)
    n_slots = has.sum(0)
    valid = n_slots > 0
    H = per_slot.sum(0) / np.maximum(n_slots, 1)[:, None]
    names = object_names if object_names is not None else [str(i) for i in range(C.shape[2])]
    return ActivationMatrix(H, scene_id, list(names), valid)


def build_corpus_activations(scenes, params: EmulatorParams, seed: int = 0,
                             mode: str = "direct", trajectories=None, kappa: float = 0.25,
                             tau_slot: int = 2, grid=(16, 16), supersample: int = 16) -> dict:
    """Map ``scene_id -> ActivationMatrix`` for a corpus.

    ``mode="direct"`` samples object latents straight from the planted model;
    ``mode="rendered"`` goes through patch coverage and pooling and needs one
    trajectory per scene.
    """
    out = {}
    for i, s in enumerate(scenes):
        rng = scene_rng(seed, s.scene_id)
        if mode == "direct":
            out[s.scene_id] = emulate_object_activations(s, params, rng)
        elif mode == "rendered":
            if trajectories is None:
                raise ValueError("rendered mode needs trajectories")
            cov = trajectory_coverage(s, trajectories[i], grid, supersample)
            patches, C = emulate_patch_activations(s, cov, params, rng, tau_slot)
            out[s.scene_id] = pool_object_tokens(patches, C, kappa, s.scene_id, s.names)
        else:
            raise ValueError(f"unknown emulation mode {mode!r}")
    return out


def stack_corpus(corpus: dict, scenes, valid_only: bool = True):
    """Stack per-scene matrices into ``(H, X, identities, scene_index)``."""
    Hs, Xs, ids, sidx = [], [], [], []
    for i, s in enumerate(scenes):
        A = corpus[s.scene_id]
        keep = A.valid if valid_only else np.ones(A.m, bool)
        Hs.append(A.values[keep])
        Xs.append(s.coords[keep])
        ids.append(s.identities[keep])
        sidx.append(np.full(int(keep.sum()), i))
    if not Hs:
        return np.zeros((0, 0)), np.zeros((0, 3)), np.zeros(0, int), np.zeros(0, int)
    return (np.concatenate(Hs), np.concatenate(Xs), np.concatenate(ids),
            np.concatenate(sidx))
